"""Fuzzy c-means clustering with per-iteration tracing and injectable stopping.

Every function here is pure: no globals, no hidden state. Memberships are
stored cluster-major, shape (n_clusters, n_points), so a point's memberships
form one column that always sums to 1.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, DegenerateClusterError, InputError, NumericError

# A point closer than this to a center is treated as coincident with it
# (continuous extension of the membership update at the singularity).
COINCIDENCE_DISTANCE = 1e-12

Timer = Callable[[], float]
StopPredicate = Callable[["ClusterTrace"], bool]


class VirtualClock:
    """Deterministic stand-in for a wall clock: advances 1.0 per reading.

    run_fcm reads the clock once per iteration boundary, so under this clock
    every iteration appears to take exactly one time unit. Used for
    bit-reproducible output files; the units are synthetic.
    """

    def __init__(self) -> None:
        self._now = 0.0

    def __call__(self) -> float:
        self._now += 1.0
        return self._now


@dataclass(frozen=True)
class FcmConfig:
    """Fuzzy c-means parameters.

    Parameters
    ----------
    n_clusters : int
        Number of clusters (>= 2).
    fuzzifier : float
        Membership softness exponent, > 1. 2.0 is the conventional choice.
    epsilon : float
        Termination criterion on the max absolute membership change, in (0, 1).
    max_iterations : int
        Hard cap on iterations (>= 2); bounds cost near saddle points.
    seed : int
        Seed for the membership initialization.
    """

    n_clusters: int = 6
    fuzzifier: float = 2.0
    epsilon: float = 0.005
    max_iterations: int = 300
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_clusters < 2:
            raise ConfigurationError(f"n_clusters must be >= 2, got {self.n_clusters}")
        if not self.fuzzifier > 1:
            raise ConfigurationError(f"fuzzifier must be > 1, got {self.fuzzifier}")
        if not 0 < self.epsilon < 1:
            raise ConfigurationError(f"epsilon must be in (0, 1), got {self.epsilon}")
        if self.max_iterations < 2:
            raise ConfigurationError(
                f"max_iterations must be >= 2, got {self.max_iterations}"
            )


@dataclass
class FuzzyState:
    """Membership matrix (n_clusters, n_points) and centers (n_clusters, n_dims)."""

    memberships: np.ndarray
    centers: np.ndarray


@dataclass
class ClusterTrace:
    """Per-iteration record of one clustering run.

    objectives[m-1], labels[m-1], iter_times[m-1] belong to iteration m
    (1-indexed). `converged` is True only when the membership-change
    criterion fired, not on an iteration-cap or predicate stop.
    """

    objectives: list[float] = field(default_factory=list)
    labels: list[np.ndarray] = field(default_factory=list)
    iter_times: list[float] = field(default_factory=list)
    converged: bool = False

    @property
    def n_iterations(self) -> int:
        return len(self.objectives)


def as_feature_matrix(values: np.ndarray | Sequence) -> np.ndarray:
    """Validate and return features as a float64 array of shape (n_points, n_dims)."""
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
        raise InputError(f"feature matrix must be 2-D and non-empty, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise InputError("feature matrix contains non-finite values")
    return x


def init_membership(n_points: int, n_clusters: int, seed: int) -> np.ndarray:
    """Draw an initial membership matrix from a flat Dirichlet per point.

    Returns an (n_clusters, n_points) column-stochastic matrix with strictly
    positive entries; identical seeds give bit-identical matrices.
    """
    if n_points < 1 or n_clusters < 2:
        raise ConfigurationError(
            f"need n_points >= 1 and n_clusters >= 2, got {n_points}, {n_clusters}"
        )
    rng = np.random.default_rng(seed)
    u = rng.dirichlet(np.ones(n_clusters), size=n_points).T
    # Guard against gamma underflow producing exact zeros.
    u = np.maximum(u, 1e-12)
    u /= u.sum(axis=0)
    return u


def _sq_distances(features: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances, shape (n_clusters, n_points).

    Computed from explicit differences (not the expanded quadratic form) so
    that a point bitwise-equal to a center yields an exact zero, which the
    coincidence rule in update_memberships relies on.
    """
    diff = centers[:, None, :] - features[None, :, :]
    return np.einsum("cnd,cnd->cn", diff, diff)


def compute_centers(
    features: np.ndarray, memberships: np.ndarray, fuzzifier: float
) -> np.ndarray:
    """Weighted cluster centers: c_j = sum_i u_ij^m x_i / sum_i u_ij^m."""
    w = memberships**fuzzifier
    totals = w.sum(axis=1)
    if (totals < 1e-300).any():
        bad = int(np.argmin(totals))
        raise DegenerateClusterError(
            f"cluster {bad} has vanishing total membership weight"
        )
    return (w @ features) / totals[:, None]


def update_memberships(
    features: np.ndarray, centers: np.ndarray, fuzzifier: float
) -> np.ndarray:
    """Membership update u_ij = 1 / sum_k (d_ij / d_ik)^(2/(m-1)).

    A point within COINCIDENCE_DISTANCE of one or more centers gets its
    membership split equally among the coincident centers (full membership
    when there is exactly one), keeping columns stochastic.
    """
    d2 = _sq_distances(features, centers)
    coincident = d2 < COINCIDENCE_DISTANCE**2
    with np.errstate(divide="ignore", invalid="ignore"):
        p = d2 ** (-1.0 / (fuzzifier - 1.0))
        u = p / p.sum(axis=0)
    has_coincident = coincident.any(axis=0)
    if has_coincident.any():
        cols = coincident[:, has_coincident].astype(np.float64)
        u[:, has_coincident] = cols / cols.sum(axis=0)
    if not np.isfinite(u).all():
        raise NumericError("membership update produced non-finite values")
    return u


def objective(features: np.ndarray, state: FuzzyState, fuzzifier: float) -> float:
    """Weighted within-cluster scatter: J = sum_ij u_ij^m ||x_i - c_j||^2."""
    d2 = _sq_distances(features, state.centers)
    j = float((state.memberships**fuzzifier * d2).sum())
    if not np.isfinite(j):
        raise NumericError("objective evaluated to a non-finite value")
    return j


def hard_labels(memberships: np.ndarray) -> np.ndarray:
    """Cluster index with maximal membership per point; ties go to the lowest index."""
    return np.argmax(memberships, axis=0).astype(np.int32)


def run_fcm(
    features: np.ndarray,
    config: FcmConfig,
    stop_predicate: StopPredicate | None = None,
    timer: Timer | None = None,
) -> tuple[FuzzyState, ClusterTrace]:
    """Iterate fuzzy c-means, recording objective, labels and time per iteration.

    Each iteration recomputes centers from the current memberships, updates
    the memberships from those centers, and records the objective of the
    updated state. The run stops at the first of:

    * ``stop_predicate(trace)`` returning True (checked from iteration 2 on),
    * the membership change ``max_ij |u^(k) - u^(k-1)|`` between recorded
      iterations dropping below ``config.epsilon`` (sets ``converged``),
    * ``config.max_iterations``.

    Deterministic for identical (features, config): objectives and labels are
    reproducible bit-for-bit. ``timer`` defaults to the wall clock.
    """
    x = as_feature_matrix(features)
    if timer is None:
        timer = time.perf_counter
    u = init_membership(x.shape[0], config.n_clusters, config.seed)
    trace = ClusterTrace()
    state = FuzzyState(memberships=u, centers=np.empty((config.n_clusters, x.shape[1])))
    t_prev = timer()
    u_prev = None
    for _ in range(config.max_iterations):
        centers = compute_centers(x, u, config.fuzzifier)
        u_prev, u = u, update_memberships(x, centers, config.fuzzifier)
        state = FuzzyState(memberships=u, centers=centers)
        now = timer()
        trace.objectives.append(objective(x, state, config.fuzzifier))
        trace.labels.append(hard_labels(u))
        trace.iter_times.append(now - t_prev)
        t_prev = now
        if trace.n_iterations < 2:
            continue
        if stop_predicate is not None and stop_predicate(trace):
            break
        if float(np.abs(u - u_prev).max()) < config.epsilon:
            trace.converged = True
            break
    return state, trace
