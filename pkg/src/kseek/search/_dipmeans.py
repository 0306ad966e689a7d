"""Dip-means: split the cluster with the largest share of multimodal viewers.

Every member of a cluster "views" the distances to its siblings; a viewer
is significant when a bootstrap dip test rejects unimodality of those
distances.  The bootstrap null distribution of the dip depends only on the
sample size, so one table per cluster size is shared by all its viewers.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.spatial.distance import cdist

from ..gmm import Dataset, bic_xmeans
from ..rng import derive
from ..stattests import _dip_sorted, bootstrap_null_dips
from . import SearchConfig, SearchResult, initial_centers, resolve_rng
from ._kmeans import kmeans, reflection_init

# Distance vectors shorter than this are meaningless to test.
_MIN_TEST_SIZE = 5

# The bootstrap null distribution of the dip depends only on the sample
# size, so tables are built once per (size, b) from a fixed stream and
# shared across clusters, runs, and datasets.
_NULL_STREAM = 1729


@lru_cache(maxsize=512)
def _null_table(size: int, b: int) -> np.ndarray:
    table = bootstrap_null_dips(size, b, derive(_NULL_STREAM, size, b))
    table.flags.writeable = False
    return table


def _viewer_ratio(X_s: np.ndarray, alpha: float, b: int, null_table: np.ndarray) -> float:
    """Fraction of cluster members whose distance vector rejects unimodality."""
    n_k = X_s.shape[0]
    dist = np.sort(cdist(X_s, X_s), axis=1)[:, 1:]  # drop self-distance
    dips = np.empty(n_k)
    for i in range(n_k):
        dips[i] = _dip_sorted(dist[i])
    p_values = 1.0 - np.searchsorted(null_table, dips, side="left") / b
    return float(np.mean(p_values <= alpha))


def dipmeans(data: Dataset, config: SearchConfig, seed=None) -> SearchResult:
    rng = resolve_rng(config, seed)
    X = data.samples
    part, centers = kmeans(data, initial_centers(data, config.k_min, rng))
    trace = [(part.K, bic_xmeans(part, data))]
    while True:
        K = part.K
        ratios = np.zeros(K)
        for k in range(1, K + 1):
            members = part.members(k)
            if members.size < _MIN_TEST_SIZE:
                continue
            ratios[k - 1] = _viewer_ratio(
                X[members],
                config.alpha,
                config.b,
                _null_table(members.size - 1, config.b),
            )
        if K >= config.k_max or not np.any(ratios > config.v_thd):
            break
        target = int(np.argmax(ratios)) + 1
        members = part.members(target)
        X_s = X[members]
        sub, sub_centers = kmeans(
            Dataset(X_s), reflection_init(X_s, X_s.mean(axis=0), rng)
        )
        if sub.K < 2:
            break
        new_centers = [
            X[part.members(k)].mean(axis=0) for k in range(1, K + 1) if k != target
        ]
        new_centers.extend(sub_centers)
        part, centers = kmeans(data, np.vstack(new_centers))
        trace.append((part.K, bic_xmeans(part, data)))
    return SearchResult(
        partition=part,
        khat=part.K,
        criterion=bic_xmeans(part, data),
        trace=trace,
    )
