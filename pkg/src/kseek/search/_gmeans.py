"""G-means: split clusters whose 1-D projections fail a normality test."""

from __future__ import annotations

import numpy as np

from ..gmm import Dataset, bic_xmeans
from ..stattests import ad_statistic
from . import SearchConfig, SearchResult, initial_centers
from ._kmeans import kmeans, split_init

# Clusters below this size are never tested (the small-sample correction of
# the AD statistic is unreliable there).
_MIN_TEST_SIZE = 8


def gmeans(data: Dataset, config: SearchConfig, seed=None) -> SearchResult:
    """Deterministic split search driven by the Anderson-Darling statistic.

    Each cluster is 2-means-split from the principal-axis initializer; the
    members are projected on the difference of the two child centroids and
    the cluster splits iff the modified AD statistic of the projections
    exceeds ``config.ad_critical``.  The seed argument is accepted for
    interface uniformity but never used.
    """
    del seed  # deterministic given the data
    X = data.samples
    part, centers = kmeans(data, initial_centers(data, config.k_min, None))
    trace = [(part.K, bic_xmeans(part, data))]
    while True:
        K = part.K
        new_centers: list[np.ndarray] = []
        budget = config.k_max - K
        split_any = False
        for k in range(1, K + 1):
            X_s = X[part.members(k)]
            mu = X_s.mean(axis=0)
            if budget <= 0 or X_s.shape[0] < _MIN_TEST_SIZE:
                new_centers.append(mu)
                continue
            sub, sub_centers = kmeans(Dataset(X_s), split_init(X_s, mu))
            v = sub_centers[0] - sub_centers[1]
            norm = np.linalg.norm(v)
            if sub.K < 2 or norm == 0.0:
                new_centers.append(mu)
                continue
            proj = X_s @ (v / norm)
            if proj.std(ddof=1) == 0.0:
                new_centers.append(mu)
                continue
            if ad_statistic(proj) > config.ad_critical:
                new_centers.extend(sub_centers)
                budget -= 1
                split_any = True
            else:
                new_centers.append(mu)
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
