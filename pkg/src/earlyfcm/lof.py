"""Local outlier factor scoring and fraction-based removal.

Exact nearest neighbors over full pairwise distances: the point sets scored
here are calibration harvests (at most a few thousand points), where
exactness is worth more than a spatial index. Distances are computed in row
chunks to keep peak memory at O(chunk * n) rather than O(n^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, InputError

# lrd of a point whose neighborhood is all duplicates of itself (reach sum 0).
# Keeps scores finite; co-located duplicates then rate each other ~1.
LRD_CAP = 1e12

_CHUNK = 1024


@dataclass(frozen=True)
class LofConfig:
    """Neighborhood size and removal fraction for anomaly filtering."""

    n_neighbors: int = 40
    outliers_fraction: float = 0.03

    def __post_init__(self) -> None:
        if self.n_neighbors < 1:
            raise ConfigurationError(f"n_neighbors must be >= 1, got {self.n_neighbors}")
        if not 0 < self.outliers_fraction < 1:
            raise ConfigurationError(
                f"outliers_fraction must be in (0, 1), got {self.outliers_fraction}"
            )


def _as_points(points) -> np.ndarray:
    x = np.asarray(points, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise InputError(f"points must be 2-D with >= 2 rows, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise InputError("points contain non-finite values")
    return x


def lof_scores(points, k: int) -> np.ndarray:
    """Local outlier factor of every point, per the classical definition.

    k-distance neighborhoods are tie-inclusive: every other point at distance
    <= the k-th nearest distance is a neighbor. Scores near 1 indicate local
    density typical of the neighborhood; scores well above 1 indicate
    outliers. Always finite, always > 0.
    """
    x = _as_points(points)
    n = x.shape[0]
    if not 1 <= k < n:
        raise InputError(f"need 1 <= k < n_points, got k={k}, n={n}")

    kdist = np.empty(n)
    neigh_idx: list[np.ndarray] = []
    neigh_dist: list[np.ndarray] = []
    for start in range(0, n, _CHUNK):
        stop = min(start + _CHUNK, n)
        diff = x[start:stop, None, :] - x[None, :, :]
        d = np.sqrt(np.einsum("ijd,ijd->ij", diff, diff))
        for row, i in enumerate(range(start, stop)):
            dist = d[row]
            dist[i] = np.inf  # exclude the point itself, not its duplicates
            kd = np.partition(dist, k - 1)[k - 1]
            kdist[i] = kd
            members = np.flatnonzero(dist <= kd)
            neigh_idx.append(members)
            neigh_dist.append(dist[members])

    counts = np.array([len(m) for m in neigh_idx])
    offsets = np.concatenate([[0], np.cumsum(counts)[:-1]])
    flat_idx = np.concatenate(neigh_idx)
    flat_dist = np.concatenate(neigh_dist)

    reach = np.maximum(kdist[flat_idx], flat_dist)
    reach_sums = np.add.reduceat(reach, offsets)
    with np.errstate(divide="ignore"):
        lrd = np.where(reach_sums > 0.0, counts / reach_sums, LRD_CAP)

    neigh_lrd_mean = np.add.reduceat(lrd[flat_idx], offsets) / counts
    return neigh_lrd_mean / lrd


def removal_count(n: int, fraction: float) -> int:
    """How many points a fraction removes from a set of n: ceil(fraction * n).

    Decimal fractions carry binary noise (0.03 * 100 is a hair above 3), so
    the product snaps to the adjacent integer before taking the ceiling.
    """
    if not 0 < fraction < 1:
        raise InputError(f"fraction must be in (0, 1), got {fraction}")
    raw = fraction * n
    nearest = round(raw)
    return nearest if nearest >= 1 and abs(raw - nearest) < 1e-9 else math.ceil(raw)


def remove_outliers(points, scores, fraction: float) -> tuple[np.ndarray, np.ndarray]:
    """Drop the ceil(fraction * N) highest-scoring points.

    Ties at the cut are resolved by removing the lower index first. Returns
    (kept points in input order, removed indices in ascending order).
    """
    x = _as_points(points)
    s = np.asarray(scores, dtype=np.float64)
    if s.shape != (x.shape[0],):
        raise InputError(f"scores shape {s.shape} does not align with {x.shape[0]} points")
    n = x.shape[0]
    n_remove = removal_count(n, fraction)
    if n_remove >= n:
        raise InputError(f"fraction {fraction} would remove all {n} points")
    order = np.lexsort((np.arange(n), -s))
    removed = np.sort(order[:n_remove])
    keep = np.ones(n, dtype=bool)
    keep[removed] = False
    return x[keep], removed
