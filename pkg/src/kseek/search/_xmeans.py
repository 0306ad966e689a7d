"""X-means: grow K by splitting clusters under a local BIC comparison."""

from __future__ import annotations

import numpy as np

from ..gmm import Dataset, Partition, bic_xmeans
from . import SearchConfig, SearchResult, initial_centers, resolve_rng
from ._kmeans import kmeans, reflection_init, split_init


def _two_means(X_s: np.ndarray, mu: np.ndarray, how: str, rng) -> tuple[Partition, np.ndarray]:
    if how == "pca":
        centers = split_init(X_s, mu)
    else:
        centers = reflection_init(X_s, mu, rng)
    return kmeans(Dataset(X_s), centers)


def _local_bics(X_s: np.ndarray, sub: Partition) -> tuple[float, float]:
    """BIC of the one-cluster and two-cluster models of a sample subset,
    both scored with the pooled-spherical-variance convention."""
    ds = Dataset(X_s)
    bic1 = bic_xmeans(Partition(np.ones(X_s.shape[0], dtype=int), 1), ds)
    bic2 = bic_xmeans(sub, ds)
    return bic1, bic2


def xmeans(data: Dataset, config: SearchConfig, seed=None) -> SearchResult:
    """Alternate global K-means refinement with per-cluster split tests.

    Each cluster is split in two (seeded by ``config.split_init``); the
    split is kept iff the two-component local BIC beats the one-component
    BIC.  Stops when no cluster splits or K reaches k_max.
    """
    rng = resolve_rng(config, seed)
    X = data.samples
    centers = initial_centers(data, config.k_min, rng)
    part, centers = kmeans(data, centers)
    trace = [(part.K, bic_xmeans(part, data))]
    while True:
        K = part.K
        new_centers: list[np.ndarray] = []
        budget = config.k_max - K
        split_any = False
        for k in range(1, K + 1):
            members = part.members(k)
            X_s = X[members]
            if budget <= 0 or X_s.shape[0] < 3:
                new_centers.append(X_s.mean(axis=0))
                continue
            sub, sub_centers = _two_means(X_s, X_s.mean(axis=0), config.split_init, rng)
            if sub.K < 2:
                new_centers.append(X_s.mean(axis=0))
                continue
            bic1, bic2 = _local_bics(X_s, sub)
            if bic2 < bic1:
                new_centers.extend(sub_centers)
                budget -= 1
                split_any = True
            else:
                new_centers.append(X_s.mean(axis=0))
        if not split_any:
            break
        part, centers = kmeans(data, np.vstack(new_centers))
        trace.append((part.K, bic_xmeans(part, data)))
    return SearchResult(
        partition=part,
        khat=part.K,
        criterion=bic_xmeans(part, data),
        trace=trace,
    )
