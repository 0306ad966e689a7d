"""Partition-agreement metrics and the probit response transform.

ARI is the usual chance-corrected pair-counting index.  cARI shrinks every
value slightly toward 0.5 so that the probit transform stays finite even
when an algorithm returns a single cluster (plain ARI is exactly zero
there).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError
from .stattests import probit

__all__ = [
    "PairCounts",
    "pair_counts",
    "ari",
    "cari",
    "k_deviation",
    "response_transform",
]


@dataclass
class PairCounts:
    """Pair counts of two partitions over the n(n-1)/2 sample pairs.

    T: pairs together in both; P: together in the first; Q: together in the
    second; H: all pairs.
    """

    T: int
    P: int
    Q: int
    H: int


def _choose2(counts: np.ndarray) -> int:
    c = counts.astype(np.int64)
    return int(np.sum(c * (c - 1) // 2))


def pair_counts(u, v) -> PairCounts:
    """Contingency pair counts between label vectors ``u`` and ``v``."""
    u = np.asarray(u, dtype=int)
    v = np.asarray(v, dtype=int)
    if u.shape != v.shape:
        raise DimensionError("partitions must label the same samples")
    n = u.shape[0]
    _, ui = np.unique(u, return_inverse=True)
    _, vi = np.unique(v, return_inverse=True)
    table = np.zeros((ui.max() + 1, vi.max() + 1), dtype=np.int64)
    np.add.at(table, (ui, vi), 1)
    return PairCounts(
        T=_choose2(table.ravel()),
        P=_choose2(table.sum(axis=1)),
        Q=_choose2(table.sum(axis=0)),
        H=n * (n - 1) // 2,
    )


def ari(u, v) -> float:
    """Adjusted Rand Index; 0 for the fully degenerate case."""
    c = pair_counts(u, v)
    e = c.Q * c.P / c.H
    m = 0.5 * (c.Q + c.P)
    if m == e:
        return 0.0
    return (c.T - e) / (m - e)


def cari(u, v) -> float:
    """ARI shrunk toward 0.5: (T - E + n/2) / (M - E + n).

    Strictly inside (0, 1) whenever M > E, which keeps probit(cARI) finite.
    """
    u = np.asarray(u)
    c = pair_counts(u, v)
    n = u.shape[0]
    e = c.Q * c.P / c.H
    m = 0.5 * (c.Q + c.P)
    return (c.T - e + 0.5 * n) / (m - e + n)


def k_deviation(khat: float, kstar: int) -> float:
    """Normalized cluster-count deviation (Khat - K*) / (K* - 1).

    Equals -1 when a method collapses to one cluster and 0 at the truth.
    """
    if kstar < 2:
        raise DomainError(f"k_deviation needs K* >= 2, got {kstar}")
    return (khat - kstar) / (kstar - 1)


def response_transform(cari_mean: float) -> float:
    """Probit transform of a mean cARI, the regression response."""
    return probit(cari_mean)
