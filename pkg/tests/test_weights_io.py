"""Weights file format tests: layout, roundtrips, malformed payloads."""

from __future__ import annotations

import struct

import numpy as np
import pytest

from segserve.errors import UnsupportedFormat
from segserve.fusion import FusionStrategy, FusionWeights, default_weights
from segserve.weights_io import dump_weights, load_weights, parse_weights, save_weights


def test_header_layout():
    w = FusionWeights(FusionStrategy.FEATURE_WEIGHTED,
                      np.arange(6, dtype=float).reshape(2, 3))
    payload = dump_weights(w, 0.25)
    assert payload[:4] == b"FWT1"
    class_count, feature_dim = struct.unpack_from("<II", payload, 4)
    assert (class_count, feature_dim) == (2, 3)
    assert payload[12] == 1  # strategy tag
    # row-major f64 matrix then trailing lambda
    entries = struct.unpack_from("<6d", payload, 13)
    assert list(entries) == [0, 1, 2, 3, 4, 5]
    (lam,) = struct.unpack_from("<d", payload, 13 + 48)
    assert lam == 0.25
    assert len(payload) == 13 + 48 + 8


@pytest.mark.parametrize("strategy", list(FusionStrategy))
def test_roundtrip(strategy, tmp_path):
    weights = default_weights(strategy, class_count=3, feature_dim=17)
    path = tmp_path / "w.fwt"
    save_weights(path, weights, 0.625)
    loaded, lam = load_weights(path)
    assert lam == 0.625
    assert loaded.strategy is strategy
    assert np.array_equal(loaded.matrix, weights.matrix)
    if strategy is FusionStrategy.SCORE_WEIGHTED:
        assert np.array_equal(loaded.matrix_o, weights.matrix_o)
    else:
        assert loaded.matrix_o is None


def test_concat_stores_per_modality_dim():
    weights = default_weights(FusionStrategy.CONCAT, feature_dim=9)
    payload = dump_weights(weights, 0.5)
    _, feature_dim = struct.unpack_from("<II", payload, 4)
    assert feature_dim == 9
    loaded, _ = parse_weights(payload)
    assert loaded.matrix.shape == (3, 18)


def test_bad_magic_rejected():
    with pytest.raises(UnsupportedFormat):
        parse_weights(b"NOPE" + b"\x00" * 32)


def test_truncated_rejected():
    payload = dump_weights(default_weights(FusionStrategy.FEATURE_WEIGHTED,
                                           feature_dim=4), 0.5)
    with pytest.raises(UnsupportedFormat):
        parse_weights(payload[:-3])


def test_trailing_garbage_rejected():
    payload = dump_weights(default_weights(FusionStrategy.FEATURE_WEIGHTED,
                                           feature_dim=4), 0.5)
    with pytest.raises(UnsupportedFormat):
        parse_weights(payload + b"\x00")
