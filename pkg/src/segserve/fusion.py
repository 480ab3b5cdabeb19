"""Dual-modal late-fusion diagnosis model.

Two same-shaped modality images are reduced to feature vectors, combined by
one of three strategies (concatenation, weighted feature sum, weighted score
sum), linearly scored, and classified by argmax. The feature extractor is a
deterministic stand-in for a deep backbone: per-channel block means followed
by a fixed seeded random projection, so identical inputs always produce
identical features on any platform.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DimensionMismatch, InvalidInput
from .raster import ImageGrid
from .rng import unit_array

FEATURE_SEED = 0x5E6D5EED
BLOCK_GRID = 14  # per-axis block count; 16x16 pixel blocks on 224x224 inputs
DEFAULT_FEATURE_DIM = 1000
DEFAULT_CLASS_NAMES = ("neovascular AMD", "PCV", "others")


class FusionStrategy(enum.Enum):
    CONCAT = "concat"
    FEATURE_WEIGHTED = "feature_weighted"
    SCORE_WEIGHTED = "score_weighted"

    @property
    def wire_tag(self) -> int:
        return {"concat": 0, "feature_weighted": 1, "score_weighted": 2}[self.value]

    @classmethod
    def from_wire_tag(cls, tag: int) -> "FusionStrategy":
        for s in cls:
            if s.wire_tag == tag:
                return s
        raise InvalidInput(f"unknown strategy tag {tag}")

    @classmethod
    def parse(cls, name: str) -> "FusionStrategy":
        try:
            return cls(name)
        except ValueError:
            valid = ", ".join(s.value for s in cls)
            raise InvalidInput(f"unknown strategy {name!r}; expected one of {valid}")


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        v = self.values
        if v.ndim != 1 or v.size < 1:
            raise InvalidInput("feature vector must be 1-D and non-empty")
        if not np.all(np.isfinite(v)):
            raise InvalidInput("feature values must be finite")

    @property
    def dim(self) -> int:
        return int(self.values.size)

    @classmethod
    def of(cls, values) -> "FeatureVector":
        return cls(np.asarray(values, dtype=np.float64))


@dataclass(frozen=True, eq=False)
class ScoreVector:
    scores: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        s = self.scores
        if s.ndim != 1 or s.size < 1:
            raise InvalidInput("score vector must be 1-D and non-empty")
        if not np.all(np.isfinite(s)):
            raise InvalidInput("scores must be finite")

    def __len__(self) -> int:
        return int(self.scores.size)

    @classmethod
    def of(cls, scores) -> "ScoreVector":
        return cls(np.asarray(scores, dtype=np.float64))


@dataclass(frozen=True, eq=False)
class FusionWeights:
    """Linear scoring weights, stored class_count x feature_dim and applied
    by matrix-vector product.

    For the score-weighted strategy ``matrix`` scores the first modality and
    ``matrix_o`` the second; other strategies use ``matrix`` alone (with
    2n columns for concatenation).
    """

    strategy: FusionStrategy
    matrix: np.ndarray = field(repr=False)
    matrix_o: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        m = self.matrix
        if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
            raise InvalidInput("weight matrix must be 2-D and non-empty")
        if not np.all(np.isfinite(m)):
            raise InvalidInput("weights must be finite")
        if self.strategy is FusionStrategy.CONCAT and m.shape[1] % 2 != 0:
            raise DimensionMismatch(
                "concat weights need an even column count (class_count x 2n)"
            )
        if self.strategy is FusionStrategy.SCORE_WEIGHTED:
            if self.matrix_o is None:
                raise InvalidInput("score-weighted strategy needs both matrices")
            if self.matrix_o.shape != m.shape:
                raise DimensionMismatch(
                    f"modality matrices differ: {m.shape} vs {self.matrix_o.shape}"
                )
            if not np.all(np.isfinite(self.matrix_o)):
                raise InvalidInput("weights must be finite")
        elif self.matrix_o is not None:
            raise InvalidInput(f"{self.strategy.value} strategy takes one matrix")

    @property
    def class_count(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def feature_dim(self) -> int:
        """Per-modality feature dimension n."""
        cols = int(self.matrix.shape[1])
        return cols // 2 if self.strategy is FusionStrategy.CONCAT else cols


@dataclass(frozen=True, eq=False)
class ModalPair:
    """The two modality images; must share dimensions and channel count."""

    image_f: ImageGrid
    image_o: ImageGrid

    def __post_init__(self) -> None:
        a, b = self.image_f, self.image_o
        if (a.width, a.height, a.channels) != (b.width, b.height, b.channels):
            raise DimensionMismatch(
                f"modalities differ: {a.width}x{a.height}x{a.channels} vs "
                f"{b.width}x{b.height}x{b.channels}"
            )


@dataclass(frozen=True)
class DiagnosisLabel:
    index: int
    name: str


def validate_lambda(lam: float) -> float:
    """Mixing weight in the closed interval [0, 1].

    Endpoints are admitted as degenerate single-modality cases even though
    a strict mixture keeps lambda interior.
    """
    lam = float(lam)
    if not np.isfinite(lam) or lam < 0.0 or lam > 1.0:
        raise InvalidInput(f"lambda must lie in [0, 1], got {lam}")
    return lam


@lru_cache(maxsize=16)
def projection_matrix(dim: int, raw_len: int) -> np.ndarray:
    """Fixed dim x raw_len projection, entries from the seeded stream in
    row-major order, uniform on [-1, 1)."""
    entries = unit_array(FEATURE_SEED, dim * raw_len)
    mat = entries.reshape(dim, raw_len)
    mat.setflags(write=False)
    return mat


def block_means(image: ImageGrid) -> np.ndarray:
    """Per-channel block means over a 14x14 grid (clamped for tiny images).

    Block (r, c) of channel k spans rows [floor(r*H/g), floor((r+1)*H/g))
    and the analogous columns, so a 224x224 input yields exact 16x16 blocks.
    Output is channel-major: all blocks of channel 0 row-major, then
    channel 1, ...
    """
    h, w = image.height, image.width
    gh, gw = min(BLOCK_GRID, h), min(BLOCK_GRID, w)
    row_edges = [(r * h) // gh for r in range(gh + 1)]
    col_edges = [(c * w) // gw for c in range(gw + 1)]
    out = np.empty((image.channels, gh, gw), dtype=np.float64)
    for r in range(gh):
        for c in range(gw):
            block = image.data[row_edges[r]:row_edges[r + 1],
                               col_edges[c]:col_edges[c + 1], :]
            out[:, r, c] = block.mean(axis=(0, 1))
    return out.reshape(-1)


def extract_features(image: ImageGrid, dim: int) -> FeatureVector:
    """Deterministic reference extractor: block means -> seeded projection."""
    if dim < 1:
        raise InvalidInput("feature dimension must be >= 1")
    raw = block_means(image)
    proj = projection_matrix(dim, raw.size)
    return FeatureVector(proj @ raw)


def concat_features(gf: FeatureVector, go: FeatureVector) -> FeatureVector:
    if gf.dim != go.dim:
        raise DimensionMismatch(f"cannot concatenate dims {gf.dim} and {go.dim}")
    return FeatureVector(np.concatenate([gf.values, go.values]))


def linear_score(weights: FusionWeights, g: FeatureVector) -> ScoreVector:
    return ScoreVector(_apply(weights.matrix, g))


def _apply(matrix: np.ndarray, g: FeatureVector) -> np.ndarray:
    if matrix.shape[1] != g.dim:
        raise DimensionMismatch(
            f"weights expect dim {matrix.shape[1]}, feature has {g.dim}"
        )
    return matrix @ g.values


def fuse_features_weighted(
    gf: FeatureVector, go: FeatureVector, lam: float
) -> FeatureVector:
    lam = validate_lambda(lam)
    if gf.dim != go.dim:
        raise DimensionMismatch(f"cannot fuse dims {gf.dim} and {go.dim}")
    return FeatureVector(lam * gf.values + (1.0 - lam) * go.values)


def fuse_scores_weighted(
    rf: ScoreVector, ro: ScoreVector, lam: float
) -> ScoreVector:
    lam = validate_lambda(lam)
    if len(rf) != len(ro):
        raise DimensionMismatch(f"cannot fuse lengths {len(rf)} and {len(ro)}")
    return ScoreVector(lam * rf.scores + (1.0 - lam) * ro.scores)


def classify(
    scores: ScoreVector, class_names: tuple[str, ...] = DEFAULT_CLASS_NAMES
) -> DiagnosisLabel:
    """Highest score wins; ties break toward the lowest index."""
    if len(scores) != len(class_names):
        raise InvalidInput(
            f"{len(scores)} scores but {len(class_names)} class names"
        )
    idx = int(np.argmax(scores.scores))  # argmax returns the first maximum
    return DiagnosisLabel(index=idx, name=class_names[idx])


def diagnose(
    pair: ModalPair,
    weights: FusionWeights,
    lam: float,
    class_names: tuple[str, ...] = DEFAULT_CLASS_NAMES,
) -> tuple[DiagnosisLabel, ScoreVector]:
    """Full pipeline: extract both modalities, fuse per strategy, classify."""
    lam = validate_lambda(lam)
    n = weights.feature_dim
    gf = extract_features(pair.image_f, n)
    go = extract_features(pair.image_o, n)

    if weights.strategy is FusionStrategy.CONCAT:
        scores = ScoreVector(_apply(weights.matrix, concat_features(gf, go)))
    elif weights.strategy is FusionStrategy.FEATURE_WEIGHTED:
        fused = fuse_features_weighted(gf, go, lam)
        scores = ScoreVector(_apply(weights.matrix, fused))
    else:
        rf = ScoreVector(_apply(weights.matrix, gf))
        ro = ScoreVector(_apply(weights.matrix_o, go))
        scores = fuse_scores_weighted(rf, ro, lam)

    return classify(scores, class_names), scores


def default_weights(
    strategy: FusionStrategy,
    class_count: int = len(DEFAULT_CLASS_NAMES),
    feature_dim: int = DEFAULT_FEATURE_DIM,
) -> FusionWeights:
    """Weights generated from the same seeded stream as the extractor.

    Each matrix uses a seed derived from FEATURE_SEED and its wire tag so
    the bundle is reproducible without any training artifacts.
    """
    if class_count < 1 or feature_dim < 1:
        raise InvalidInput("class_count and feature_dim must be >= 1")

    def matrix(which: int, cols: int) -> np.ndarray:
        seed = FEATURE_SEED ^ (0x9E00 + strategy.wire_tag * 4 + which)
        return unit_array(seed, class_count * cols).reshape(class_count, cols)

    if strategy is FusionStrategy.CONCAT:
        return FusionWeights(strategy, matrix(0, 2 * feature_dim))
    if strategy is FusionStrategy.FEATURE_WEIGHTED:
        return FusionWeights(strategy, matrix(0, feature_dim))
    return FusionWeights(
        strategy, matrix(0, feature_dim), matrix_o=matrix(1, feature_dim)
    )
