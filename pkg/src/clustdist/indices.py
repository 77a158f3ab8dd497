"""Label-based cluster statistics: average between, separation index, ARI."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from math import comb

import numpy as np
from numpy.typing import NDArray
from scipy.spatial.distance import cdist

__all__ = [
    "LabeledDataset",
    "RecoveryBand",
    "scale_columns",
    "average_between",
    "separation_index",
    "adjusted_rand",
    "recovery_band",
]


@dataclass
class LabeledDataset:
    """Observation matrix plus integer cluster labels."""

    data: NDArray
    labels: NDArray

    def __post_init__(self):
        self.data = np.atleast_2d(np.asarray(self.data, dtype=float))
        self.labels = np.asarray(self.labels, dtype=int)
        n = self.data.shape[0]
        if n < 2:
            raise ValueError("dataset needs at least 2 observations")
        if self.labels.shape != (n,):
            raise ValueError("labels length must match number of rows")

    def members(self, label: int) -> NDArray:
        mask = self.labels == label
        if not mask.any():
            raise ValueError(f"label {label} not present in dataset")
        return self.data[mask]


class RecoveryBand(str, Enum):
    POOR = "Poor"
    MODERATE = "Moderate"
    GOOD = "Good"
    EXCELLENT = "Excellent"


def scale_columns(data: NDArray) -> NDArray:
    """Standardize each column to mean 0 and sd 1 (denominator N-1)."""
    data = np.atleast_2d(np.asarray(data, dtype=float))
    sd = data.std(axis=0, ddof=1)
    if np.any(sd <= 0):
        bad = np.nonzero(sd <= 0)[0]
        raise ValueError(f"zero-variance column(s): {bad.tolist()}")
    return (data - data.mean(axis=0)) / sd


def average_between(ds: LabeledDataset, cluster_a: int, cluster_b: int) -> float:
    """Mean Euclidean distance over all cross-cluster point pairs."""
    pts_a = ds.members(cluster_a)
    pts_b = ds.members(cluster_b)
    return float(cdist(pts_a, pts_b).mean())


def separation_index(ds: LabeledDataset, cluster_a: int, cluster_b: int,
                     proportion: float = 0.10) -> float:
    """Mean of the smallest fraction of nearest-other-cluster distances.

    For every point, take its distance to the closest point of the other
    cluster; from each cluster keep the ceil(proportion * n) smallest of
    these, and average the kept values pooled over both clusters.
    """
    if not 0 < proportion <= 1:
        raise ValueError("proportion must be in (0, 1]")
    pts_a = ds.members(cluster_a)
    pts_b = ds.members(cluster_b)
    dists = cdist(pts_a, pts_b)
    nearest_a = dists.min(axis=1)
    nearest_b = dists.min(axis=0)
    kept = []
    for nearest in (nearest_a, nearest_b):
        k = int(np.ceil(proportion * nearest.size))
        kept.append(np.sort(nearest)[:k])
    return float(np.concatenate(kept).mean())


def adjusted_rand(labels_a: NDArray, labels_b: NDArray) -> float:
    """Adjusted Rand Index between two partitions via pair counting."""
    labels_a = np.asarray(labels_a)
    labels_b = np.asarray(labels_b)
    if labels_a.shape != labels_b.shape or labels_a.ndim != 1:
        raise ValueError("label vectors must be 1-D and of equal length")
    n = labels_a.size
    _, a_inv = np.unique(labels_a, return_inverse=True)
    _, b_inv = np.unique(labels_b, return_inverse=True)
    table = np.zeros((a_inv.max() + 1, b_inv.max() + 1), dtype=np.int64)
    np.add.at(table, (a_inv, b_inv), 1)
    sum_cells = sum(comb(int(c), 2) for c in table.ravel())
    sum_rows = sum(comb(int(c), 2) for c in table.sum(axis=1))
    sum_cols = sum(comb(int(c), 2) for c in table.sum(axis=0))
    total = comb(n, 2)
    expected = sum_rows * sum_cols / total
    max_index = 0.5 * (sum_rows + sum_cols)
    if max_index == expected:
        # Degenerate partitions (e.g. both all-singleton or both one-cluster).
        return 1.0 if sum_cells == max_index else 0.0
    return float((sum_cells - expected) / (max_index - expected))


def recovery_band(ari: float) -> RecoveryBand:
    """Band an ARI value per the poor/moderate/good/excellent cutoffs."""
    if not -1.0 <= ari <= 1.0:
        raise ValueError("ARI must lie in [-1, 1]")
    if ari < 0.65:
        return RecoveryBand.POOR
    if ari < 0.80:
        return RecoveryBand.MODERATE
    if ari < 0.90:
        return RecoveryBand.GOOD
    return RecoveryBand.EXCELLENT
