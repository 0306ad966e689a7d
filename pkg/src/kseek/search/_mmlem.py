"""MML-EM: start from a large mixture and annihilate weak components.

Component-wise EM (one component update per sub-step, responsibilities
refreshed in between) with a weight update that subtracts half the
per-component parameter count from the responsibility mass, so components
that cannot pay for their parameters collapse to zero weight and are
removed.  At every convergence the minimum-message-length score of the
live mixture is recorded; the weakest component is then forced out and the
process repeats down to k_min.  The recorded model with the best score is
returned.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from ..errors import DegenerateComponent
from ..gmm import Dataset, GmmModel, Partition, _repair_spd, e_step, gaussian_log_density
from . import SearchConfig, SearchResult, resolve_rng

_LOG_2PI = np.log(2.0 * np.pi)
_MAX_SWEEPS_PER_LEVEL = 500


def _per_component_params(p: int, cov_type: str) -> float:
    if cov_type == "full":
        return p + p * (p + 1) / 2.0
    if cov_type == "spherical-per-cluster":
        return p + 1.0
    raise ValueError(
        "mmlem supports per-component covariances only "
        f"('full' or 'spherical-per-cluster'), got {cov_type!r}"
    )


class _State:
    """Live mixture with a cached per-component log-density matrix."""

    def __init__(self, X, weights, means, covs):
        self.X = X
        self.weights = weights
        self.means = means
        self.covs = covs
        self.logdens = np.column_stack(
            [gaussian_log_density(X, means[k], covs[k]) for k in range(len(weights))]
        )

    @property
    def K(self) -> int:
        return self.weights.shape[0]

    def loglik(self) -> float:
        return float(
            np.sum(logsumexp(self.logdens + np.log(self.weights), axis=1))
        )

    def responsibilities_for(self, k: int) -> np.ndarray:
        log_r = self.logdens + np.log(self.weights)
        log_r -= logsumexp(log_r, axis=1, keepdims=True)
        return np.exp(log_r[:, k])

    def drop(self, k: int) -> None:
        self.weights = np.delete(self.weights, k)
        self.weights /= self.weights.sum()
        self.means = np.delete(self.means, k, axis=0)
        self.covs = np.delete(self.covs, k, axis=0)
        self.logdens = np.delete(self.logdens, k, axis=1)

    def snapshot(self) -> GmmModel:
        return GmmModel(self.weights.copy(), self.means.copy(), self.covs.copy())


def _update_component(state: _State, k: int, cov_type: str, n_half_params: float) -> bool:
    """One CEM2 sub-step; returns False when the component was annihilated."""
    X = state.X
    n, p = X.shape
    r_k = state.responsibilities_for(k)
    nk = float(r_k.sum())
    w_raw = max(0.0, nk - n_half_params) / n
    if w_raw == 0.0:
        state.drop(k)
        return False
    state.weights[k] = w_raw
    state.weights /= state.weights.sum()
    mu = (r_k @ X) / nk
    diff = X - mu
    if cov_type == "full":
        cov = (r_k * diff.T) @ diff / nk
    else:  # spherical-per-cluster
        s2 = float(np.sum(r_k * np.sum(diff * diff, axis=1))) / (nk * p)
        cov = s2 * np.eye(p)
    try:
        cov, _ = _repair_spd(cov, k)
    except DegenerateComponent:
        state.drop(k)
        return False
    state.means[k] = mu
    state.covs[k] = cov
    state.logdens[:, k] = gaussian_log_density(X, mu, cov)
    return True


def _mml_score(state: _State, comp_params: float, n: int) -> float:
    K = state.K
    return float(
        0.5 * comp_params * np.sum(np.log(n * state.weights / 12.0))
        + 0.5 * K * np.log(n / 12.0)
        + 0.5 * K * (comp_params + 1.0)
        - state.loglik()
    )


def mmlem(data: Dataset, config: SearchConfig, seed=None) -> SearchResult:
    rng = resolve_rng(config, seed)
    X = data.samples
    n, p = X.shape
    comp_params = _per_component_params(p, config.cov_type)
    K0 = min(config.k_max, n)

    idx = rng.choice(n, size=K0, replace=False)
    global_cov = np.atleast_2d(np.cov(X, rowvar=False, bias=True))
    s2 = float(np.trace(global_cov)) / p / 10.0
    if s2 <= 0.0:
        raise DegenerateComponent(-1, "data has zero variance")
    state = _State(
        X,
        np.full(K0, 1.0 / K0),
        X[idx].copy(),
        np.tile(s2 * np.eye(p), (K0, 1, 1)),
    )

    records: list[tuple[float, GmmModel]] = []
    trace: list[tuple[int, float]] = []
    loglik = state.loglik()
    while True:
        for _ in range(_MAX_SWEEPS_PER_LEVEL):
            k = 0
            while k < state.K:
                if _update_component(state, k, config.cov_type, comp_params / 2.0):
                    k += 1
                elif state.K < config.k_min:
                    raise DegenerateComponent(
                        k, "annihilation dropped the mixture below k_min"
                    )
            new_loglik = state.loglik()
            if abs(new_loglik - loglik) / max(abs(new_loglik), 1e-300) < config.epsilon:
                loglik = new_loglik
                break
            loglik = new_loglik
        score = _mml_score(state, comp_params, n)
        records.append((score, state.snapshot()))
        trace.append((state.K, score))
        if state.K <= config.k_min:
            break
        state.drop(int(np.argmin(state.weights)))
        loglik = state.loglik()

    best_score, best_model = min(records, key=lambda rec: rec[0])
    labels = np.argmax(e_step(best_model, data), axis=1) + 1
    partition = Partition.from_labels(labels)
    return SearchResult(
        partition=partition,
        khat=partition.K,
        criterion=best_score,
        trace=trace,
        model=best_model,
    )
