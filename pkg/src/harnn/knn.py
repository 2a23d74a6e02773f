"""Brute-force k-nearest-neighbors over the dataset's engineered features.

Euclidean metric (compared as squared distances, which preserves the
ranking). Tie rules: equal distances prefer the lower training-row index
(stable sort); tied votes go to the class of the nearest neighbor among the
tied classes. Pure and deterministic after construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class KnnModel:
    train_features: np.ndarray  # (N, F)
    train_labels: np.ndarray  # (N,) class indices
    k: int

    def __post_init__(self):
        self.train_features = np.asarray(self.train_features, dtype=np.float64)
        self.train_labels = np.asarray(self.train_labels, dtype=np.int64)
        n = self.train_features.shape[0]
        if self.train_labels.shape != (n,):
            raise ValueError(f"labels shape {self.train_labels.shape} != ({n},)")
        if not 1 <= self.k <= n:
            raise ValueError(f"k must be in 1..{n}, got {self.k}")
        if not np.all(np.isfinite(self.train_features)):
            raise ValueError("training features must be finite")


def _neighbor_labels(model: KnnModel, queries: np.ndarray, k: int,
                     chunk: int = 512) -> np.ndarray:
    """Labels of the k nearest training rows per query, nearest first.

    Stable sort on squared distance, so equal distances keep training-row
    order (the documented index tie-break).
    """
    x = np.asarray(queries, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.train_features.shape[1]:
        raise ValueError(
            f"queries must be (M, {model.train_features.shape[1]}), got {x.shape}"
        )
    train = model.train_features
    train_sq = np.einsum("ij,ij->i", train, train)
    out = np.empty((x.shape[0], k), dtype=np.int64)
    for start in range(0, x.shape[0], chunk):
        q = x[start : start + chunk]
        d2 = np.einsum("ij,ij->i", q, q)[:, None] - 2.0 * (q @ train.T) + train_sq
        order = np.argsort(d2, axis=1, kind="stable")[:, :k]
        out[start : start + chunk] = model.train_labels[order]
    return out


def _vote(neighbor_labels: np.ndarray, num_classes: int) -> int:
    """Majority vote; vote ties resolve to the nearest tied-class neighbor."""
    counts = np.bincount(neighbor_labels, minlength=num_classes)
    top = counts.max()
    winners = np.flatnonzero(counts == top)
    if len(winners) == 1:
        return int(winners[0])
    tied = set(winners.tolist())
    for label in neighbor_labels:
        if int(label) in tied:
            return int(label)
    raise AssertionError("unreachable: some neighbor must carry a winning class")


def knn_predict(model: KnnModel, x: np.ndarray) -> int:
    """Classify one feature vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"single query must be rank 1, got shape {x.shape}")
    return int(knn_predict_batch(model, x[None, :])[0])


def knn_predict_batch(model: KnnModel, queries: np.ndarray) -> np.ndarray:
    num_classes = int(model.train_labels.max()) + 1
    labels = _neighbor_labels(model, queries, model.k)
    return np.array([_vote(row, num_classes) for row in labels], dtype=np.int64)


def knn_error_sweep(train_features, train_labels, test_features, test_labels,
                    ks) -> list[tuple[int, float]]:
    """Test error rate (1 - accuracy) for each k; neighbor ranking computed once."""
    ks = list(ks)
    if not ks:
        raise ValueError("empty k range")
    n = np.asarray(train_features).shape[0]
    if min(ks) < 1 or max(ks) > n:
        raise ValueError(f"k range {min(ks)}..{max(ks)} outside 1..{n}")
    model = KnnModel(train_features, train_labels, k=max(ks))
    num_classes = int(model.train_labels.max()) + 1
    labels = _neighbor_labels(model, np.asarray(test_features, dtype=np.float64), max(ks))
    truths = np.asarray(test_labels, dtype=np.int64)
    rows = []
    for k in ks:
        preds = np.array([_vote(row[:k], num_classes) for row in labels], dtype=np.int64)
        rows.append((int(k), float(np.mean(preds != truths))))
    return rows


def sweep_csv(rows: list[tuple[int, float]]) -> str:
    lines = ["k,error"]
    for k, error in rows:
        lines.append(f"{k},{error:.6f}")
    return "\n".join(lines) + "\n"
