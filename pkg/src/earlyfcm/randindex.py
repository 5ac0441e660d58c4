"""Rand index between hard partitions, plus per-iteration accuracy traces.

Two interchangeable forms are provided: an explicit pair-enumeration form
(quadratic, kept as the readable reference) and a contingency-table form
(linear in n, used everywhere real data is involved). Both do their counting
in exact integer arithmetic, so at equal inputs they return the identical
float.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .fcm import ClusterTrace


@dataclass(frozen=True)
class PairCounts:
    """Agreement counts over all unordered point pairs.

    m11: pairs together in both partitions; m00: apart in both;
    m01: together in the first only; m10: together in the second only.
    Plain Python ints, so counts never overflow.
    """

    m00: int
    m01: int
    m10: int
    m11: int

    @property
    def total(self) -> int:
        return self.m00 + self.m01 + self.m10 + self.m11


def _label_pair(labels_a, labels_b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.ndim != 1 or b.ndim != 1:
        raise InputError("label arrays must be 1-D")
    if a.shape[0] != b.shape[0]:
        raise InputError(f"label lengths differ: {a.shape[0]} vs {b.shape[0]}")
    if a.shape[0] < 2:
        raise InputError("need at least 2 labeled points")
    return a, b


def pair_counts(labels_a, labels_b) -> PairCounts:
    """Count pair agreements by enumerating all n(n-1)/2 pairs.

    Quadratic; intended for small n and as the ground truth the fast form is
    tested against.
    """
    a, b = _label_pair(labels_a, labels_b)
    n = a.shape[0]
    m01 = m10 = m11 = 0
    for i in range(n - 1):
        same_a = a[i] == a[i + 1 :]
        same_b = b[i] == b[i + 1 :]
        m11 += int(np.count_nonzero(same_a & same_b))
        m01 += int(np.count_nonzero(same_a & ~same_b))
        m10 += int(np.count_nonzero(~same_a & same_b))
    total = n * (n - 1) // 2
    return PairCounts(m00=total - m01 - m10 - m11, m01=m01, m10=m10, m11=m11)


def rand_index_pairwise(labels_a, labels_b) -> float:
    """Fraction of point pairs the two partitions agree on: (m00+m11)/C(n,2)."""
    counts = pair_counts(labels_a, labels_b)
    return (counts.m00 + counts.m11) / counts.total


def _comb2(k: int) -> int:
    return k * (k - 1) // 2


def rand_index_contingency(labels_a, labels_b) -> float:
    """Rand index via the contingency table, linear in the number of points.

    With table counts n_ij, row sums a_i and column sums b_j:

        [C(n,2) + 2*sum C(n_ij,2) - sum C(a_i,2) - sum C(b_j,2)] / C(n,2)

    All counting is done in Python ints, so the result equals the pairwise
    form exactly, not merely to rounding.
    """
    a, b = _label_pair(labels_a, labels_b)
    n = a.shape[0]
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    ka = int(ia.max()) + 1
    kb = int(ib.max()) + 1
    table = np.bincount(ia * kb + ib, minlength=ka * kb).reshape(ka, kb)
    sum_cells = sum(_comb2(v) for v in table.ravel().tolist())
    sum_rows = sum(_comb2(v) for v in table.sum(axis=1).tolist())
    sum_cols = sum(_comb2(v) for v in table.sum(axis=0).tolist())
    total = _comb2(n)
    return (total + 2 * sum_cells - sum_rows - sum_cols) / total


def accuracy_trace(trace: ClusterTrace) -> list[float]:
    """Accuracy of each iteration's partition against the final one.

    r_m = Rand(L_m, L_n); the last entry is exactly 1.0 by self-similarity.
    """
    if trace.n_iterations < 2:
        raise InputError("trace must contain at least 2 iterations")
    final = trace.labels[-1]
    return [rand_index_contingency(labels, final) for labels in trace.labels]
