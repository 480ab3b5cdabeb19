"""Classification metrics: AUROC, recall, accuracy.

AUROC follows the Mann-Whitney convention: over all positive-negative pairs,
a strictly higher positive score counts 1 and a tie counts 0.5. The
implementation uses average ranks, which is algebraically identical to the
pairwise count.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import DegenerateLabels, DimensionMismatch, InvalidInput


def _average_ranks(scores: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing their average rank."""
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(scores.size, dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < scores.size:
        j = i
        while j + 1 < scores.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def auroc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Probability that a random positive outscores a random negative,
    ties half-credited."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.ndim != 1 or s.size == 0:
        raise InvalidInput("scores must be a non-empty 1-D sequence")
    if y.shape != s.shape:
        raise DimensionMismatch(f"{s.size} scores but {y.size} labels")
    if not np.all(np.isfinite(s)):
        raise InvalidInput("scores must be finite")
    if not np.isin(y, (0, 1)).all():
        raise InvalidInput("labels must be 0 or 1")
    pos = y == 1
    p = int(pos.sum())
    n = int(s.size - p)
    if p == 0 or n == 0:
        raise DegenerateLabels("need at least one positive and one negative")
    ranks = _average_ranks(s)
    return float((ranks[pos].sum() - p * (p + 1) / 2.0) / (p * n))


def recall(
    preds: Sequence[int], truths: Sequence[int], positive_class: int
) -> float:
    """True positives over actual positives for the chosen class."""
    p = np.asarray(preds)
    t = np.asarray(truths)
    if p.shape != t.shape or p.ndim != 1:
        raise DimensionMismatch(f"{p.size} predictions but {t.size} truths")
    actual = t == positive_class
    if not actual.any():
        raise DegenerateLabels(f"no truths equal to class {positive_class}")
    hits = int(((p == positive_class) & actual).sum())
    return hits / int(actual.sum())


def accuracy(preds: Sequence[int], truths: Sequence[int]) -> float:
    p = np.asarray(preds)
    t = np.asarray(truths)
    if p.ndim != 1 or p.size == 0:
        raise InvalidInput("predictions must be a non-empty 1-D sequence")
    if p.shape != t.shape:
        raise DimensionMismatch(f"{p.size} predictions but {t.size} truths")
    return int((p == t).sum()) / int(p.size)


def macro_auroc(score_matrix: np.ndarray, truths: Sequence[int]) -> float:
    """One-vs-rest AUROC per class, macro-averaged.

    ``score_matrix`` is n_samples x n_classes; classes with no positives or
    no negatives are skipped (their one-vs-rest problem is degenerate).
    """
    m = np.asarray(score_matrix, dtype=np.float64)
    t = np.asarray(truths)
    if m.ndim != 2 or m.shape[0] == 0:
        raise InvalidInput("score matrix must be n_samples x n_classes")
    if t.shape != (m.shape[0],):
        raise DimensionMismatch(f"{m.shape[0]} rows but {t.size} truths")
    per_class = []
    for c in range(m.shape[1]):
        y = (t == c).astype(int)
        if y.min() == y.max():
            continue
        per_class.append(auroc(m[:, c], y))
    if not per_class:
        raise DegenerateLabels("every class is single-sided; macro AUROC undefined")
    return float(np.mean(per_class))


def macro_recall(preds: Sequence[int], truths: Sequence[int]) -> float:
    """Recall per class present in the truths, macro-averaged."""
    t = np.asarray(truths)
    classes = np.unique(t)
    if classes.size == 0:
        raise InvalidInput("truths must be non-empty")
    return float(np.mean([recall(preds, truths, int(c)) for c in classes]))
