"""PG-means: grow a full-covariance mixture until random 1-D projections of
model and data agree by the Kolmogorov-Smirnov test."""

from __future__ import annotations

import numpy as np

from ..errors import DegenerateComponent, PgMeansFailed, SingularCovariance
from ..gmm import (
    Dataset,
    GmmModel,
    Partition,
    e_step,
    em_fit,
    standard_bic,
)
from ..stattests import ks_critical_value, ks_statistic, normal_cdf
from . import SearchConfig, SearchResult, initial_centers, resolve_rng
from ._kmeans import kmeans


def _projected_mixture_cdf(model: GmmModel, direction: np.ndarray):
    """CDF of the mixture projected on ``direction`` (a 1-D GMM)."""
    mu = model.means @ direction
    var = np.einsum("i,kij,j->k", direction, model.covariances, direction)
    sd = np.sqrt(var)
    w = model.weights

    def cdf(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return (w * normal_cdf((t[:, None] - mu) / sd)).sum(axis=1)

    return cdf


def _fits_all_projections(
    model: GmmModel, data: Dataset, config: SearchConfig, rng: np.random.Generator
) -> bool:
    threshold = ks_critical_value(config.alpha, data.n)
    for _ in range(config.h):
        direction = rng.normal(0.0, np.sqrt(1.0 / data.p), size=data.p)
        proj = data.samples @ direction
        if ks_statistic(proj, _projected_mixture_cdf(model, direction)) > threshold:
            return False
    return True


def _hard_partition(model: GmmModel, data: Dataset) -> Partition:
    labels = np.argmax(e_step(model, data), axis=1) + 1
    return Partition.from_labels(labels)


def pgmeans(data: Dataset, config: SearchConfig, seed=None) -> SearchResult:
    """Add one component at a time, refitting by EM with restarts, until
    every one of ``h`` random projections passes the KS test.

    Raises PgMeansFailed (carrying the last good model) when all EM
    restarts degenerate at some K.
    """
    rng = resolve_rng(config, seed)
    X = data.samples
    n = data.n
    if config.k_min == 1:
        init = Partition(np.ones(n, dtype=int), 1)
    else:
        init, _ = kmeans(data, initial_centers(data, config.k_min, rng))
    model, loglik = em_fit(data, config.k_min, init, "full", config.epsilon)
    trace = [(model.K, standard_bic(model, data, "full"))]

    while not _fits_all_projections(model, data, config, rng):
        if model.K >= config.k_max:
            break
        K = model.K
        new_cov = model.covariances.mean(axis=0)
        best: tuple[GmmModel, float] | None = None
        for _ in range(config.em_restarts):
            mu_new = X[int(rng.integers(n))]
            weights = np.append(model.weights, 1.0 / K)
            weights /= weights.sum()
            candidate = GmmModel(
                weights,
                np.vstack([model.means, mu_new]),
                np.concatenate([model.covariances, new_cov[None]]),
            )
            try:
                fitted, ll = em_fit(data, K + 1, candidate, "full", config.epsilon)
            except (DegenerateComponent, SingularCovariance):
                continue
            if best is None or ll > best[1]:
                best = (fitted, ll)
        if best is None:
            raise PgMeansFailed(model)
        model, loglik = best
        trace.append((model.K, standard_bic(model, data, "full")))

    partition = _hard_partition(model, data)
    return SearchResult(
        partition=partition,
        khat=partition.K,
        criterion=standard_bic(model, data, "full"),
        trace=trace,
        model=model,
    )
