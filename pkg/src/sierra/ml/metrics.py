"""Confusion matrices and the derived classification metrics."""

from __future__ import annotations

import numpy as np

from ..core import SierraError


class LabelOutOfRange(SierraError):
    pass


class EmptyMatrix(SierraError):
    pass


def confusion_matrix(true_labels, predicted, k: int) -> np.ndarray:
    """k x k counts; entry (i, j) is how often true class i was predicted j."""
    t = np.asarray(true_labels, dtype=int)
    p = np.asarray(predicted, dtype=int)
    if t.shape != p.shape:
        raise ValueError(f"label shapes differ: {t.shape} vs {p.shape}")
    cm = np.zeros((k, k), dtype=np.int64)
    if t.size == 0:
        return cm
    if t.min() < 0 or t.max() >= k or p.min() < 0 or p.max() >= k:
        raise LabelOutOfRange(f"labels must lie in [0, {k})")
    np.add.at(cm, (t, p), 1)
    return cm


def metrics(cm: np.ndarray) -> dict:
    """Accuracy plus per-class precision/recall. A class never predicted
    (or never present) yields None, not 0, for the undefined ratio."""
    cm = np.asarray(cm)
    total = int(cm.sum())
    if total == 0:
        raise EmptyMatrix("confusion matrix has no counts")
    k = cm.shape[0]
    precision: list[float | None] = []
    recall: list[float | None] = []
    for j in range(k):
        col = int(cm[:, j].sum())
        precision.append(int(cm[j, j]) / col if col else None)
    for i in range(k):
        row = int(cm[i, :].sum())
        recall.append(int(cm[i, i]) / row if row else None)
    return {
        "accuracy": int(np.trace(cm)) / total,
        "precision": precision,
        "recall": recall,
    }
