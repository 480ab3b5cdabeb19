"""Binary weights file.

Layout: magic ``FWT1``, u32 LE class_count, u32 LE feature_dim (per-modality
n), u8 strategy tag (0=concat, 1=feature, 2=score), row-major f64 LE matrix
entries (strategy 2 stores the first-modality matrix then the second), and a
trailing f64 LE lambda.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import InvalidInput, UnsupportedFormat
from .fusion import FusionStrategy, FusionWeights, validate_lambda

MAGIC = b"FWT1"
_HEADER = struct.Struct("<4sIIB")


def dump_weights(weights: FusionWeights, lam: float) -> bytes:
    lam = validate_lambda(lam)
    header = _HEADER.pack(
        MAGIC, weights.class_count, weights.feature_dim, weights.strategy.wire_tag
    )
    parts = [header, weights.matrix.astype("<f8").tobytes()]
    if weights.strategy is FusionStrategy.SCORE_WEIGHTED:
        parts.append(weights.matrix_o.astype("<f8").tobytes())
    parts.append(struct.pack("<d", lam))
    return b"".join(parts)


def parse_weights(payload: bytes) -> tuple[FusionWeights, float]:
    if len(payload) < _HEADER.size:
        raise UnsupportedFormat("weights payload too short")
    magic, class_count, feature_dim, tag = _HEADER.unpack_from(payload)
    if magic != MAGIC:
        raise UnsupportedFormat("bad weights magic; expected FWT1")
    if class_count < 1 or feature_dim < 1:
        raise InvalidInput("weights header dimensions must be positive")
    strategy = FusionStrategy.from_wire_tag(tag)

    cols = 2 * feature_dim if strategy is FusionStrategy.CONCAT else feature_dim
    n_matrices = 2 if strategy is FusionStrategy.SCORE_WEIGHTED else 1
    matrix_bytes = class_count * cols * 8
    expected = _HEADER.size + n_matrices * matrix_bytes + 8
    if len(payload) != expected:
        raise UnsupportedFormat(
            f"weights payload is {len(payload)} bytes, expected {expected}"
        )

    offset = _HEADER.size
    mats = []
    for _ in range(n_matrices):
        flat = np.frombuffer(payload, dtype="<f8", count=class_count * cols,
                             offset=offset)
        mats.append(flat.reshape(class_count, cols).astype(np.float64))
        offset += matrix_bytes
    (lam,) = struct.unpack_from("<d", payload, offset)

    weights = FusionWeights(
        strategy, mats[0], matrix_o=mats[1] if n_matrices == 2 else None
    )
    return weights, validate_lambda(lam)


def save_weights(path: str | Path, weights: FusionWeights, lam: float) -> None:
    Path(path).write_bytes(dump_weights(weights, lam))


def load_weights(path: str | Path) -> tuple[FusionWeights, float]:
    return parse_weights(Path(path).read_bytes())
