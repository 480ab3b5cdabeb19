"""Fusion-core tests: seeded extractor, fusion strategies, classification.

Expected values for the derived cases come from independent pure-Python
oracles (scalar SplitMix64 stream, loop-based block means and dot products),
never from the numpy implementation under test.
"""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from segserve.errors import DimensionMismatch, InvalidInput
from segserve.fusion import (
    DEFAULT_CLASS_NAMES,
    FEATURE_SEED,
    FeatureVector,
    FusionStrategy,
    FusionWeights,
    ModalPair,
    ScoreVector,
    classify,
    concat_features,
    default_weights,
    diagnose,
    extract_features,
    fuse_features_weighted,
    fuse_scores_weighted,
    linear_score,
    validate_lambda,
)
from segserve.raster import ImageGrid
from segserve.rng import SplitMix64, unit_array

MASK = (1 << 64) - 1


def splitmix_oracle(seed: int):
    """Reference scalar stream, written independently of segserve.rng."""
    state = seed & MASK
    while True:
        state = (state + 0x9E3779B97F4A7C15) & MASK
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        z = z ^ (z >> 31)
        yield z


def unit_oracle(z: int) -> float:
    return (z >> 11) / float(1 << 53) * 2.0 - 1.0


class TestSplitMix64:
    def test_sequential_matches_oracle(self):
        gen = SplitMix64(FEATURE_SEED)
        ref = splitmix_oracle(FEATURE_SEED)
        for _ in range(200):
            assert gen.next_u64() == next(ref)

    def test_vectorized_matches_oracle(self):
        ref = splitmix_oracle(0xDEADBEEF)
        expected = [unit_oracle(next(ref)) for _ in range(64)]
        got = unit_array(0xDEADBEEF, 64)
        assert got.tolist() == expected

    def test_units_lie_in_closed_open_interval(self):
        vals = unit_array(12345, 10_000)
        assert vals.min() >= -1.0 and vals.max() < 1.0


def _extract_oracle(arr: np.ndarray, dim: int) -> list[float]:
    """Loop-based block means + seeded projection, independent route."""
    h, w, c = arr.shape
    gh, gw = min(14, h), min(14, w)
    means = []
    for ch in range(c):
        for r in range(gh):
            for col in range(gw):
                y0, y1 = r * h // gh, (r + 1) * h // gh
                x0, x1 = col * w // gw, (col + 1) * w // gw
                total = 0.0
                for y in range(y0, y1):
                    for x in range(x0, x1):
                        total += arr[y, x, ch]
                means.append(total / ((y1 - y0) * (x1 - x0)))
    ref = splitmix_oracle(FEATURE_SEED)
    weights = [
        [unit_oracle(next(ref)) for _ in range(len(means))] for _ in range(dim)
    ]
    return [sum(wi[j] * means[j] for j in range(len(means))) for wi in weights]


class TestExtractFeatures:
    def test_constant_image_has_constant_block_means(self):
        from segserve.fusion import block_means

        img = ImageGrid.from_array(np.full((28, 28, 3), 7.25))
        means = block_means(img)
        assert np.allclose(means, 7.25)

    def test_deterministic(self):
        rng = np.random.default_rng(0)
        img = ImageGrid.from_array(rng.uniform(0, 255, size=(30, 20, 3)))
        a = extract_features(img, 16)
        b = extract_features(img, 16)
        assert np.array_equal(a.values, b.values)

    def test_zero_image_projects_to_zero(self):
        img = ImageGrid.from_array(np.zeros((224, 224, 3)))
        feats = extract_features(img, 32)
        assert np.array_equal(feats.values, np.zeros(32))

    def test_matches_independent_oracle(self):
        rng = np.random.default_rng(42)
        arr = rng.uniform(0, 255, size=(16, 16, 1))
        got = extract_features(ImageGrid.from_array(arr), 8).values
        want = np.array(_extract_oracle(arr, 8))
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12)

    def test_multichannel_matches_oracle(self):
        rng = np.random.default_rng(7)
        arr = rng.uniform(0, 255, size=(28, 21, 3))
        got = extract_features(ImageGrid.from_array(arr), 5).values
        want = np.array(_extract_oracle(arr, 5))
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12)

    def test_tiny_image_still_extracts(self):
        img = ImageGrid.from_array(np.full((2, 3, 1), 4.0))
        feats = extract_features(img, 6)
        assert feats.dim == 6
        assert np.all(np.isfinite(feats.values))

    def test_bad_dim_rejected(self):
        img = ImageGrid.from_array(np.zeros((4, 4, 1)))
        with pytest.raises(InvalidInput):
            extract_features(img, 0)


class TestConcat:
    def test_small_example(self):
        got = concat_features(FeatureVector.of([1, 2]), FeatureVector.of([3, 4]))
        assert got.values.tolist() == [1, 2, 3, 4]

    def test_zero_second_half(self):
        g = FeatureVector.of([5.0, -3.0, 2.0])
        got = concat_features(g, FeatureVector.of([0, 0, 0]))
        assert got.values[:3].tolist() == [5.0, -3.0, 2.0]
        assert got.values[3:].tolist() == [0, 0, 0]

    def test_halves_equal_inputs_for_large_vectors(self):
        rng = np.random.default_rng(1)
        gf, go = rng.normal(size=1000), rng.normal(size=1000)
        got = concat_features(FeatureVector.of(gf), FeatureVector.of(go))
        assert got.dim == 2000
        assert np.array_equal(got.values[:1000], gf)
        assert np.array_equal(got.values[1000:], go)

    def test_mismatch_rejected(self):
        with pytest.raises(DimensionMismatch):
            concat_features(FeatureVector.of([1]), FeatureVector.of([1, 2]))


class TestLinearScore:
    def test_identity(self):
        w = FusionWeights(FusionStrategy.FEATURE_WEIGHTED, np.eye(2))
        got = linear_score(w, FeatureVector.of([5, 7]))
        assert got.scores.tolist() == [5, 7]

    def test_zero_vector(self):
        w = FusionWeights(FusionStrategy.FEATURE_WEIGHTED,
                          np.arange(6, dtype=float).reshape(2, 3))
        got = linear_score(w, FeatureVector.of([0, 0, 0]))
        assert got.scores.tolist() == [0, 0]

    def test_random_matches_dot_product_oracle(self):
        rng = np.random.default_rng(3)
        mat = rng.normal(size=(3, 1000))
        vec = rng.normal(size=1000)
        got = linear_score(
            FusionWeights(FusionStrategy.FEATURE_WEIGHTED, mat),
            FeatureVector.of(vec),
        ).scores
        want = [sum(mat[c][k] * vec[k] for k in range(1000)) for c in range(3)]
        np.testing.assert_allclose(got, want, rtol=1e-12)

    def test_dimension_mismatch(self):
        w = FusionWeights(FusionStrategy.FEATURE_WEIGHTED, np.eye(3))
        with pytest.raises(DimensionMismatch):
            linear_score(w, FeatureVector.of([1, 2]))

    @given(
        a=st.floats(-5, 5), b=st.floats(-5, 5),
        seed=st.integers(0, 2**32 - 1),
    )
    @settings(max_examples=50)
    def test_linearity(self, a, b, seed):
        rng = np.random.default_rng(seed)
        mat = rng.normal(size=(3, 8))
        g = rng.normal(size=8)
        h = rng.normal(size=8)
        w = FusionWeights(FusionStrategy.FEATURE_WEIGHTED, mat)
        combined = linear_score(w, FeatureVector.of(a * g + b * h)).scores
        split = (a * linear_score(w, FeatureVector.of(g)).scores
                 + b * linear_score(w, FeatureVector.of(h)).scores)
        np.testing.assert_allclose(combined, split,
                                   rtol=1e-9, atol=1e-9)


class TestWeightedFusion:
    def test_feature_midpoint(self):
        got = fuse_features_weighted(
            FeatureVector.of([2, 4]), FeatureVector.of([0, 2]), 0.5
        )
        assert got.values.tolist() == [1, 3]

    def test_feature_lambda_one_is_first_modality(self):
        gf = FeatureVector.of([1.5, -2.5])
        got = fuse_features_weighted(gf, FeatureVector.of([9, 9]), 1.0)
        assert np.array_equal(got.values, gf.values)

    def test_equal_inputs_fixed_point(self):
        g = FeatureVector.of([3.0, 1.0, -4.0])
        for lam in (0.0, 0.3, 0.8, 1.0):
            got = fuse_features_weighted(g, g, lam)
            np.testing.assert_allclose(got.values, g.values, rtol=1e-15)

    def test_score_midpoint(self):
        got = fuse_scores_weighted(
            ScoreVector.of([1, 0, 0]), ScoreVector.of([0, 1, 0]), 0.5
        )
        assert got.scores.tolist() == [0.5, 0.5, 0]

    def test_score_lambda_zero_is_second_modality(self):
        ro = ScoreVector.of([0.25, 0.5, 0.75])
        got = fuse_scores_weighted(ScoreVector.of([9, 9, 9]), ro, 0.0)
        assert np.array_equal(got.scores, ro.scores)

    def test_score_random_elementwise(self):
        rng = np.random.default_rng(11)
        rf, ro = rng.normal(size=3), rng.normal(size=3)
        got = fuse_scores_weighted(ScoreVector.of(rf), ScoreVector.of(ro), 0.3)
        want = [0.3 * rf[i] + 0.7 * ro[i] for i in range(3)]
        np.testing.assert_allclose(got.scores, want, rtol=1e-12)

    @pytest.mark.parametrize("lam", [-0.1, 1.1, float("nan")])
    def test_lambda_domain(self, lam):
        with pytest.raises(InvalidInput):
            validate_lambda(lam)


class TestClassify:
    def test_basic_argmax(self):
        label = classify(ScoreVector.of([0.1, 0.9, 0.3]))
        assert label.index == 1
        assert label.name == DEFAULT_CLASS_NAMES[1]

    def test_tie_breaks_to_lowest_index(self):
        assert classify(ScoreVector.of([0.5, 0.5, 0.2])).index == 0

    def test_random_vs_linear_scan(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            scores = rng.normal(size=3)
            best, best_idx = -np.inf, 0
            for i, s in enumerate(scores):
                if s > best:
                    best, best_idx = s, i
            assert classify(ScoreVector.of(scores)).index == best_idx

    def test_nonfinite_rejected(self):
        with pytest.raises(InvalidInput):
            ScoreVector.of([0.1, float("inf"), 0.0])

    @given(
        alpha=st.floats(0.01, 10), beta=st.floats(-5, 5),
        seed=st.integers(0, 2**32 - 1),
    )
    @settings(max_examples=100)
    def test_affine_invariance(self, alpha, beta, seed):
        rng = np.random.default_rng(seed)
        s = rng.uniform(-1, 1, size=3)
        base = classify(ScoreVector.of(s))
        shifted = classify(ScoreVector.of(alpha * s + beta))
        assert base.index == shifted.index


def _random_pair(seed: int, size: int = 28) -> ModalPair:
    rng = np.random.default_rng(seed)
    return ModalPair(
        image_f=ImageGrid.from_array(rng.uniform(0, 255, (size, size, 3))),
        image_o=ImageGrid.from_array(rng.uniform(0, 255, (size, size, 3))),
    )


class TestDiagnose:
    def test_lambda_one_ignores_second_modality(self):
        pair = _random_pair(0)
        other = ModalPair(image_f=pair.image_f, image_o=_random_pair(1).image_o)
        weights = default_weights(FusionStrategy.FEATURE_WEIGHTED, feature_dim=32)
        label_a, scores_a = diagnose(pair, weights, 1.0)
        label_b, scores_b = diagnose(other, weights, 1.0)
        assert label_a == label_b
        np.testing.assert_allclose(scores_a.scores, scores_b.scores, rtol=1e-12)

    def test_lambda_zero_ignores_first_modality(self):
        pair = _random_pair(2)
        other = ModalPair(image_f=_random_pair(3).image_f, image_o=pair.image_o)
        weights = default_weights(FusionStrategy.SCORE_WEIGHTED, feature_dim=32)
        _, scores_a = diagnose(pair, weights, 0.0)
        _, scores_b = diagnose(other, weights, 0.0)
        np.testing.assert_allclose(scores_a.scores, scores_b.scores, rtol=1e-12)

    def test_strategy_equivalence_with_shared_matrix(self):
        # lam*E*gf + (1-lam)*E*go == E*(lam*gf + (1-lam)*go)
        rng = np.random.default_rng(9)
        mat = rng.normal(size=(3, 32))
        fw = FusionWeights(FusionStrategy.FEATURE_WEIGHTED, mat)
        sw = FusionWeights(FusionStrategy.SCORE_WEIGHTED, mat, matrix_o=mat.copy())
        pair = _random_pair(4)
        for lam in (0.0, 0.25, 0.7, 1.0):
            _, feature_scores = diagnose(pair, fw, lam)
            _, score_scores = diagnose(pair, sw, lam)
            np.testing.assert_allclose(
                feature_scores.scores, score_scores.scores, rtol=1e-9
            )

    def test_identical_modalities_match_single_modality_pipeline(self):
        img = _random_pair(6).image_f
        pair = ModalPair(image_f=img, image_o=img)
        weights = default_weights(FusionStrategy.FEATURE_WEIGHTED, feature_dim=16)
        label_half, _ = diagnose(pair, weights, 0.5)
        label_one, _ = diagnose(pair, weights, 1.0)
        assert label_half == label_one

    def test_concat_strategy_runs(self):
        pair = _random_pair(8)
        weights = default_weights(FusionStrategy.CONCAT, feature_dim=16)
        label, scores = diagnose(pair, weights, 0.5)
        assert 0 <= label.index < 3
        assert len(scores) == 3

    def test_mismatched_pair_rejected(self):
        rng = np.random.default_rng(10)
        with pytest.raises(DimensionMismatch):
            ModalPair(
                image_f=ImageGrid.from_array(rng.uniform(0, 1, (8, 8, 3))),
                image_o=ImageGrid.from_array(rng.uniform(0, 1, (8, 9, 3))),
            )


class TestFusionWeights:
    def test_concat_needs_even_columns(self):
        with pytest.raises(DimensionMismatch):
            FusionWeights(FusionStrategy.CONCAT, np.zeros((3, 5)))

    def test_score_strategy_needs_two_matrices(self):
        with pytest.raises(InvalidInput):
            FusionWeights(FusionStrategy.SCORE_WEIGHTED, np.zeros((3, 4)))

    def test_feature_dim_property(self):
        w = default_weights(FusionStrategy.CONCAT, feature_dim=10)
        assert w.feature_dim == 10
        assert w.matrix.shape == (3, 20)
