"""Cross-entropy over class-probability rows, sparse and one-hot variants."""

from __future__ import annotations

import numpy as np

PROB_FLOOR = 1e-12


class InvalidTarget(ValueError):
    pass


def cross_entropy(probs: np.ndarray, targets: np.ndarray) -> float:
    """Mean negative log-probability of the target class.

    ``targets`` may be integer labels (sparse variant) or a one-hot matrix
    (categorical variant); the two agree exactly on equivalent targets.
    Probabilities are floored at 1e-12 before the log.
    """
    probs = np.asarray(probs, dtype=np.float64)
    targets = np.asarray(targets)
    n, k = probs.shape
    if targets.ndim == 2:
        if targets.shape != probs.shape:
            raise InvalidTarget(f"one-hot targets shape {targets.shape} != {probs.shape}")
        picked = (probs * targets).sum(axis=1)
    else:
        labels = targets.astype(np.int64).ravel()
        if labels.shape[0] != n:
            raise InvalidTarget(f"{labels.shape[0]} targets for {n} rows")
        if labels.size and (labels.min() < 0 or labels.max() >= k):
            raise InvalidTarget(f"targets must lie in 0..{k - 1}")
        picked = probs[np.arange(n), labels]
    return float(-np.mean(np.log(np.maximum(picked, PROB_FLOOR))))


def onehot_encode(labels: np.ndarray, n_classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64).ravel()
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise InvalidTarget(f"labels must lie in 0..{n_classes - 1}")
    out = np.zeros((labels.shape[0], n_classes), dtype=np.float64)
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out
