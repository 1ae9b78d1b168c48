"""Losses and metrics for multi-label recommendation.

Implements the frequency-derived label weights, the weighted binary
cross-entropy, its continuous F1/IOU relaxations and the scaled compound
loss, plus set-based IOU, precision/recall, and Recall@K.

All functions are pure and accept plain sequences or numpy arrays. Batch
inputs (2D) are reduced as the arithmetic mean of per-sample losses, while
the soft counts are pooled over every element of the batch.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence

import numpy as np

CLIP_EPS = 1e-7


def _as_pair(outputs, targets) -> tuple[np.ndarray, np.ndarray]:
    o = np.asarray(outputs, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if o.shape != t.shape:
        raise ValueError(f"outputs shape {o.shape} != targets shape {t.shape}")
    if o.ndim not in (1, 2) or o.size == 0:
        raise ValueError("outputs must be a nonempty 1D or 2D array")
    if not np.all(np.isfinite(o)):
        raise ValueError("outputs contain non-finite values")
    if np.any(o < 0.0) or np.any(o > 1.0):
        raise ValueError("outputs must lie in [0, 1]")
    if not np.all((t == 0.0) | (t == 1.0)):
        raise ValueError("targets must be 0 or 1")
    return o, t


def _as_weights(weights, n_labels: int) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (n_labels,):
        raise ValueError(f"weights shape {w.shape} does not match {n_labels} labels")
    if not np.all(np.isfinite(w)) or np.any(w <= 0.0):
        raise ValueError("weights must be finite and strictly positive")
    return w


def label_weights(frequencies) -> np.ndarray:
    """Per-label weights from relative frequencies: (max f + 0.01) - f.

    Rare labels get weights close to the maximum; the most frequent label
    still gets the strictly positive floor 0.01.
    """
    f = np.asarray(frequencies, dtype=np.float64)
    if f.ndim != 1 or f.size == 0:
        raise ValueError("frequencies must be a nonempty 1D vector")
    if np.any(f <= 0.0) or np.any(f > 1.0):
        raise ValueError("frequencies must lie in (0, 1]")
    return (f.max() + 0.01) - f


def weighted_bce(outputs, targets, weights) -> float:
    """Label-weighted mean binary cross-entropy (natural log).

    Outputs are clipped into [1e-7, 1 - 1e-7] before the logarithms.
    For 2D inputs the result is the mean of per-sample losses.
    """
    o, t = _as_pair(outputs, targets)
    w = _as_weights(weights, o.shape[-1])
    o = np.clip(o, CLIP_EPS, 1.0 - CLIP_EPS)
    per_label = w * (t * np.log(o) + (1.0 - t) * np.log(1.0 - o))
    per_sample = -per_label.mean(axis=-1)
    return float(per_sample.mean())


def soft_counts(outputs, targets) -> tuple[float, float, float]:
    """Continuous (TP, FP, FN) pooled over all elements.

    softTP = sum(o * t), softFP = sum(o * (1 - t)), softFN = sum((1 - o) * t).
    At exactly binary outputs these coincide with the hard set counts.
    """
    o, t = _as_pair(outputs, targets)
    tp = float(np.sum(o * t))
    fp = float(np.sum(o * (1.0 - t)))
    fn = float(np.sum((1.0 - o) * t))
    return tp, fp, fn


def _degenerate(tp: float, fp: float, fn: float, size: int) -> bool:
    # Counts at or below the mass a clip-floor output can carry are treated
    # as zero: an empty target perfectly rejected scores 1, not 0.
    return (tp + fp + fn) <= size * CLIP_EPS


def soft_f1(outputs, targets) -> float:
    """Continuous F-score in [0, 1]; 1 when all soft counts vanish."""
    o, _ = _as_pair(outputs, targets)
    tp, fp, fn = soft_counts(outputs, targets)
    if _degenerate(tp, fp, fn, o.size):
        return 1.0
    return 2.0 * tp / (2.0 * tp + fp + fn)


def soft_iou(outputs, targets) -> float:
    """Continuous intersection-over-union in [0, 1]; 1 when counts vanish."""
    o, _ = _as_pair(outputs, targets)
    tp, fp, fn = soft_counts(outputs, targets)
    if _degenerate(tp, fp, fn, o.size):
        return 1.0
    return tp / (tp + fp + fn)


def scaled_loss(outputs, targets, weights) -> float:
    """Weighted BCE damped by (1 - soft F1) * (1 - soft IOU).

    The multipliers lie in [0, 1], so the result never exceeds the plain
    weighted BCE and fades to zero as predictions approach the targets.
    """
    base = weighted_bce(outputs, targets, weights)
    return base * (1.0 - soft_f1(outputs, targets)) * (1.0 - soft_iou(outputs, targets))


def hard_iou(predicted: Iterable, actual: Iterable) -> float:
    """Set IOU over predicted vs actual labels: TP / (TP + FP + FN).

    Both sets empty counts as a perfect match (1.0).
    """
    p, a = set(predicted), set(actual)
    tp = len(p & a)
    total = tp + len(p - a) + len(a - p)
    return 1.0 if total == 0 else tp / total


def precision_recall(predicted: Iterable, actual: Iterable) -> tuple[float, float]:
    """Set precision and recall; empty denominators score 1.0."""
    p, a = set(predicted), set(actual)
    tp = len(p & a)
    precision = 1.0 if not p else tp / len(p)
    recall = 1.0 if not a else tp / len(a)
    return precision, recall


def recall_at_k(ranked_ids: Sequence, relevant_ids: Iterable, k: int) -> float:
    """Fraction of relevant ids appearing in the top k of a ranking."""
    if not isinstance(k, int) or k <= 0:
        raise ValueError(f"k must be a positive integer, got {k!r}")
    relevant = set(relevant_ids)
    if not relevant:
        raise ValueError("relevant set must not be empty")
    ranked = list(ranked_ids)
    if len(set(ranked)) != len(ranked):
        raise ValueError("ranked list contains duplicate ids")
    hits = sum(1 for item in ranked[:k] if item in relevant)
    return hits / len(relevant)
