"""Wrapper accuracy (k-NN under cross-validation) and histogram mutual information."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .dataset import Dataset, FoldAssignment



@dataclass(frozen=True)
class MetricsReport:
    """Cross-validated metrics for one feature subset.

    accuracy is the unweighted mean of per-fold accuracies. The remaining
    fields come from the pooled out-of-fold predictions and are only present
    for binary problems; precision and recall are for class 1.
    """

    accuracy: float
    auc: Optional[float] = None
    precision: Optional[float] = None
    recall: Optional[float] = None

    def __post_init__(self):
        for name in ("accuracy", "auc", "precision", "recall"):
            v = getattr(self, name)
            if v is None:
                continue
            if not np.isfinite(v) or not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")


def _sq_distances(queries: np.ndarray, train: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances, (n_queries, n_train).

    Accumulated column by column from explicit differences rather than the
    expanded dot-product form, so identical rows give exactly zero and ties
    stay exact, and so callers that pre-sum per-column distance matrices in
    the same column order reproduce these values bit for bit.
    """
    out = np.zeros((queries.shape[0], train.shape[0]), dtype=np.float64)
    for j in range(train.shape[1]):
        diff = queries[:, j, None] - train[None, :, j]
        out += diff * diff
    return out


def _knn_from_d2(
    d2: np.ndarray, train_y: np.ndarray, k: int, n_classes: int
) -> tuple[np.ndarray, np.ndarray]:
    """Vote from a precomputed squared-distance matrix; see _knn_batch."""
    k_eff = min(k, d2.shape[1])
    kth = np.partition(d2, k_eff - 1, axis=1)[:, k_eff - 1 : k_eff]
    closer = d2 < kth
    at_kth = d2 == kth
    # rows may tie at the k-th distance; admit the lowest-index ones only
    need = k_eff - closer.sum(axis=1, keepdims=True)
    sel = closer | (at_kth & (np.cumsum(at_kth, axis=1) <= need))
    nq = d2.shape[0]
    counts = np.empty((nq, n_classes), dtype=np.int64)
    for c in range(n_classes):
        counts[:, c] = sel[:, train_y == c].sum(axis=1)
    preds = np.argmax(counts, axis=1)
    pos_frac = counts[:, 1] / k_eff if n_classes >= 2 else np.zeros(nq)
    return preds, pos_frac


def _knn_batch(
    train_x: np.ndarray,
    train_y: np.ndarray,
    queries: np.ndarray,
    k: int,
    n_classes: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Predict every query row; also return each row's class-1 vote fraction.

    Neighbors are the k smallest distances with exact ties broken by training
    row position (lowest index first). Vote ties go to the lowest class id.
    When fewer than k training rows exist, all of them vote.
    """
    return _knn_from_d2(_sq_distances(queries, train_x), train_y, k, n_classes)


def knn_predict(
    train_rows: np.ndarray,
    train_labels: np.ndarray,
    query_row: np.ndarray,
    k: int,
    n_classes: int | None = None,
) -> int:
    """Classify one query row by majority vote of its k nearest training rows."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    train_rows = np.atleast_2d(np.asarray(train_rows, dtype=np.float64))
    train_labels = np.asarray(train_labels, dtype=np.int64)
    if train_rows.shape[0] == 0:
        raise ValueError("no training rows")
    if n_classes is None:
        n_classes = int(train_labels.max()) + 1
    query = np.asarray(query_row, dtype=np.float64).reshape(1, -1)
    preds, _ = _knn_batch(train_rows, train_labels, query, k, n_classes)
    return int(preds[0])


def _check_subset(ds: Dataset, feature_subset: Sequence[int]) -> np.ndarray:
    cols = np.asarray(list(feature_subset), dtype=np.int64)
    if cols.size == 0:
        raise ValueError("feature subset is empty")
    if cols.min() < 0 or cols.max() >= ds.d:
        raise ValueError(f"feature index out of range for d={ds.d}")
    if len(set(cols.tolist())) != cols.size:
        raise ValueError("feature subset contains duplicates")
    return cols


def _fold_predictions(
    ds: Dataset, cols: np.ndarray, folds: FoldAssignment, k: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Out-of-fold predictions, class-1 vote fractions, and per-fold accuracy."""
    x = ds.features[:, cols]
    preds = np.empty(ds.n, dtype=np.int64)
    pos_frac = np.empty(ds.n, dtype=np.float64)
    fold_acc = np.empty(folds.n_folds, dtype=np.float64)
    for f in range(folds.n_folds):
        test = folds.test_indices(f)
        train = folds.train_indices(f)
        p, s = _knn_batch(x[train], ds.labels[train], x[test], k, ds.n_classes)
        preds[test] = p
        pos_frac[test] = s
        fold_acc[f] = float(np.mean(p == ds.labels[test]))
    return preds, pos_frac, fold_acc


def cv_accuracy(ds: Dataset, feature_subset: Sequence[int], folds: FoldAssignment, k: int) -> float:
    """Mean per-fold k-NN accuracy on the given feature columns."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    cols = _check_subset(ds, feature_subset)
    _, _, fold_acc = _fold_predictions(ds, cols, folds, k)
    return float(fold_acc.mean())


def full_metrics(
    ds: Dataset, feature_subset: Sequence[int], folds: FoldAssignment, k: int
) -> MetricsReport:
    """Accuracy plus, for binary problems, pooled precision, recall and AUC.

    The AUC score for each sample is its class-1 vote fraction among the k
    neighbors; ties are handled by rank averaging. Precision with no
    predicted positives is defined as 0.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    cols = _check_subset(ds, feature_subset)
    preds, pos_frac, fold_acc = _fold_predictions(ds, cols, folds, k)
    accuracy = float(fold_acc.mean())
    if ds.n_classes != 2:
        return MetricsReport(accuracy=accuracy)
    actual_pos = ds.labels == 1
    pred_pos = preds == 1
    tp = int(np.sum(actual_pos & pred_pos))
    precision = tp / int(pred_pos.sum()) if pred_pos.any() else 0.0
    recall = tp / int(actual_pos.sum())
    return MetricsReport(
        accuracy=accuracy,
        auc=_rank_auc(pos_frac, actual_pos),
        precision=float(precision),
        recall=float(recall),
    )


def _rank_auc(scores: np.ndarray, positive: np.ndarray) -> float:
    """Probability a positive outranks a negative, with tied scores averaged."""
    n_pos = int(positive.sum())
    n_neg = positive.size - n_pos
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(scores.size, dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < scores.size:
        j = i
        while j + 1 < scores.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    rank_sum = float(ranks[positive].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def equal_width_bins(column: np.ndarray, n_bins: int) -> np.ndarray:
    """Discretize a column into n_bins equal-width codes in 0..n_bins-1.

    The maximum value falls in the top bin; a constant column maps to all
    zeros.
    """
    if n_bins < 2:
        raise ValueError(f"need at least 2 bins, got {n_bins}")
    col = np.asarray(column, dtype=np.float64)
    if col.ndim != 1 or col.size == 0:
        raise ValueError("column must be a non-empty vector")
    lo = col.min()
    hi = col.max()
    if hi == lo:
        return np.zeros(col.size, dtype=np.int64)
    width = (hi - lo) / n_bins
    codes = np.floor((col - lo) / width).astype(np.int64)
    return np.clip(codes, 0, n_bins - 1)


def _mi_from_codes(codes_a: np.ndarray, codes_b: np.ndarray, n_bins: int) -> float:
    joint = np.bincount(codes_a * n_bins + codes_b, minlength=n_bins * n_bins)
    joint = joint.reshape(n_bins, n_bins).astype(np.float64)
    total = joint.sum()
    p = joint / total
    pa = p.sum(axis=1)
    pb = p.sum(axis=0)
    nz = p > 0.0
    outer = pa[:, None] * pb[None, :]
    mi = float(np.sum(p[nz] * np.log(p[nz] / outer[nz])))
    return max(mi, 0.0)


def mutual_information(a: np.ndarray, b: np.ndarray, n_bins: int = 10) -> float:
    """Plug-in mutual information of two columns after equal-width binning.

    Natural log, so the result is in nats; empty joint cells contribute 0.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.size == 0:
        raise ValueError("inputs must be non-empty vectors of equal length")
    return _mi_from_codes(equal_width_bins(a, n_bins), equal_width_bins(b, n_bins), n_bins)
