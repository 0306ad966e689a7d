"""SMLSOM: self-organizing Gaussian nodes merged under an MDL criterion.

Nodes learn by stochastic approximation of their moment estimates (mean,
second moment, win frequency): each presented sample updates the node that
scores it highest together with that node's KL-neighborhood, so similar
nodes move together.  Between learning phases the induced hard clustering
is scored by MDL and the single best cluster merge is applied when it
lowers the score; the loop ends when no merge helps or K reaches k_min.
"""

from __future__ import annotations

import numpy as np

from ..errors import DegenerateComponent
from ..gmm import Dataset, GmmModel, Partition, _repair_spd, mixture_log_likelihood
from . import SearchConfig, SearchResult, resolve_rng

_LOG_2PI = np.log(2.0 * np.pi)
_ETA_START = 0.05
_ETA_END = 0.01


class _Nodes:
    """SOM node state: weights, means, second moments, and score caches."""

    def __init__(self, weights, means, mom2):
        self.weights = weights
        self.means = means
        self.mom2 = mom2
        K, p = means.shape
        self.precisions = np.empty((K, p, p))
        self.logdets = np.empty(K)
        for k in range(K):
            self._refresh(k)

    @property
    def K(self) -> int:
        return self.weights.shape[0]

    def covariance(self, k: int) -> np.ndarray:
        m = self.means[k]
        return self.mom2[k] - np.outer(m, m)

    def _refresh(self, k: int) -> None:
        cov, chol = _repair_spd(self.covariance(k), k)
        m = self.means[k]
        self.mom2[k] = cov + np.outer(m, m)
        p = cov.shape[0]
        inv_chol = np.linalg.solve(chol, np.eye(p))
        self.precisions[k] = inv_chol.T @ inv_chol
        self.logdets[k] = 2.0 * np.sum(np.log(np.diag(chol)))

    def scores(self, x: np.ndarray) -> np.ndarray:
        diff = self.means - x
        quad = np.einsum("ki,kij,kj->k", diff, self.precisions, diff)
        p = x.shape[0]
        return np.log(self.weights) - 0.5 * (p * _LOG_2PI + self.logdets + quad)

    def learn(self, x: np.ndarray, eta: float, winner: int, neighborhood) -> None:
        for j in neighborhood:
            self.means[j] += eta * (x - self.means[j])
            self.mom2[j] += eta * (np.outer(x, x) - self.mom2[j])
            self._refresh(j)
        onehot = np.zeros(self.K)
        onehot[winner] = 1.0
        self.weights += eta * (onehot - self.weights)

    def kl_matrix(self) -> np.ndarray:
        """Closed-form Gaussian KL(row -> column) between nodes."""
        K = self.K
        p = self.means.shape[1]
        out = np.zeros((K, K))
        covs = [self.covariance(k) for k in range(K)]
        for a in range(K):
            for b in range(K):
                if a == b:
                    continue
                diff = self.means[b] - self.means[a]
                lam_b = self.precisions[b]
                out[a, b] = 0.5 * (
                    float(np.trace(lam_b @ covs[a]))
                    + float(diff @ lam_b @ diff)
                    - p
                    + self.logdets[b]
                    - self.logdets[a]
                )
        return out

    def assign(self, X: np.ndarray) -> np.ndarray:
        """Winner index per sample (0-based)."""
        n = X.shape[0]
        scores = np.empty((n, self.K))
        for k in range(self.K):
            diff = X - self.means[k]
            quad = np.einsum("ij,jk,ik->i", diff, self.precisions[k], diff)
            scores[:, k] = np.log(self.weights[k]) - 0.5 * (
                X.shape[1] * _LOG_2PI + self.logdets[k] + quad
            )
        return np.argmax(scores, axis=1)

    def drop(self, k: int) -> None:
        keep = np.arange(self.K) != k
        self.weights = self.weights[keep]
        self.weights /= self.weights.sum()
        self.means = self.means[keep]
        self.mom2 = self.mom2[keep]
        self.precisions = self.precisions[keep]
        self.logdets = self.logdets[keep]

    def reset_from_members(self, X: np.ndarray, labels: np.ndarray) -> None:
        """Re-estimate every node from its hard members (ML moments)."""
        n = X.shape[0]
        for k in range(self.K):
            pts = X[labels == k]
            self.weights[k] = pts.shape[0] / n
            self.means[k] = pts.mean(axis=0)
            cov = np.atleast_2d(np.cov(pts, rowvar=False, bias=True))
            if np.trace(cov) <= 0.0:
                cov = _fallback_variance(X) * np.eye(X.shape[1])
            m = self.means[k]
            self.mom2[k] = cov + np.outer(m, m)
            self._refresh(k)


def _fallback_variance(X: np.ndarray) -> float:
    p = X.shape[1]
    return max(float(np.trace(np.atleast_2d(np.cov(X, rowvar=False, bias=True)))) / p, 1e-12) * 1e-2


def _induced_model(X: np.ndarray, labels: np.ndarray, K: int) -> GmmModel:
    """ML mixture implied by a hard clustering; clusters too small to carry
    a covariance get a small spherical fallback."""
    n, p = X.shape
    weights = np.empty(K)
    means = np.empty((K, p))
    covs = np.empty((K, p, p))
    fallback = None
    for k in range(K):
        pts = X[labels == k]
        weights[k] = pts.shape[0] / n
        means[k] = pts.mean(axis=0)
        cov = np.atleast_2d(np.cov(pts, rowvar=False, bias=True)) if pts.shape[0] > 1 else np.zeros((p, p))
        try:
            covs[k], _ = _repair_spd(cov, k)
        except DegenerateComponent:
            if fallback is None:
                fallback = _fallback_variance(X)
            covs[k] = fallback * np.eye(p)
    return GmmModel(weights, means, covs)


def _ensure_min_members(X: np.ndarray, labels: np.ndarray, K: int, min_size: int = 2) -> np.ndarray:
    """Seize far points from large clusters so every cluster has at least
    ``min_size`` members (k_min may force more clusters than the data
    supports)."""
    labels = labels.copy()
    if X.shape[0] < min_size * K:
        raise DegenerateComponent(-1, "not enough samples for k_min clusters")
    while True:
        counts = np.bincount(labels, minlength=K)
        needy = np.flatnonzero(counts < min_size)
        if needy.size == 0:
            return labels
        k = int(needy[0])
        donor = int(np.argmax(counts))
        members = np.flatnonzero(labels == donor)
        centroid = X[members].mean(axis=0)
        far = members[int(np.argmax(np.sum((X[members] - centroid) ** 2, axis=1)))]
        labels[far] = k


def _mdl(model: GmmModel, data: Dataset) -> float:
    comp_params = model.p + model.p * (model.p + 1) / 2.0
    m = model.K * (comp_params + 1.0) - 1.0
    return -mixture_log_likelihood(model, data) + 0.5 * m * np.log2(data.n)


def smlsom(data: Dataset, config: SearchConfig, seed=None) -> SearchResult:
    rng = resolve_rng(config, seed)
    X = data.samples
    n, p = X.shape
    K0 = min(config.k_max, n)
    tau_max = config.tau_max if config.tau_max is not None else n

    idx = rng.choice(n, size=K0, replace=False)
    global_cov = np.atleast_2d(np.cov(X, rowvar=False, bias=True))
    s2 = float(np.trace(global_cov)) / p / 10.0
    if s2 <= 0.0:
        raise DegenerateComponent(-1, "data has zero variance")
    means = X[idx].copy()
    mom2 = s2 * np.eye(p) + means[:, :, None] * means[:, None, :]
    nodes = _Nodes(np.full(K0, 1.0 / K0), means, mom2)

    trace: list[tuple[int, float]] = []
    while True:
        # (a) learning phase.  Nodes within a 1/beta fraction of the median
        # pairwise divergence count as similar and move together; larger
        # beta means a stricter notion of similarity.
        kl = nodes.kl_matrix()
        off_diag = kl[~np.eye(nodes.K, dtype=bool)]
        threshold = float(np.median(off_diag)) / config.beta if off_diag.size else 0.0
        neighborhoods = [
            np.concatenate(
                ([k], np.flatnonzero((kl[k] <= threshold) & (np.arange(nodes.K) != k)))
            )
            for k in range(nodes.K)
        ]
        order = rng.permutation(n)
        denom = max(tau_max - 1, 1)
        for t in range(tau_max):
            x = X[order[t % n]]
            eta = _ETA_START + (_ETA_END - _ETA_START) * (t / denom)
            winner = int(np.argmax(nodes.scores(x)))
            nodes.learn(x, eta, winner, neighborhoods[winner])

        # (b) merge phase
        labels = nodes.assign(X)
        # Starved nodes are removed unconditionally before MDL scoring; at
        # the k_min floor they instead seize members so the partition stays
        # complete.
        while nodes.K > config.k_min:
            counts = np.bincount(labels, minlength=nodes.K)
            starved = np.flatnonzero(counts < 2)
            if starved.size == 0:
                break
            nodes.drop(int(starved[0]))
            labels = nodes.assign(X)
        if np.any(np.bincount(labels, minlength=nodes.K) < 2):
            labels = _ensure_min_members(X, labels, nodes.K)
            model = _induced_model(X, labels, nodes.K)
            trace.append((nodes.K, _mdl(model, data)))
            break
        nodes.reset_from_members(X, labels)

        model = _induced_model(X, labels, nodes.K)
        mdl_current = _mdl(model, data)
        trace.append((nodes.K, mdl_current))
        if nodes.K <= config.k_min:
            break

        kl = nodes.kl_matrix()
        np.fill_diagonal(kl, np.inf)
        best_mdl = np.inf
        best_pair = None
        for c in range(nodes.K):
            target = int(np.argmin(kl[c]))
            merged = labels.copy()
            merged[merged == c] = target
            merged[merged > c] -= 1
            candidate = _induced_model(X, merged, nodes.K - 1)
            mdl_c = _mdl(candidate, data)
            if mdl_c < best_mdl:
                best_mdl = mdl_c
                best_pair = (c, merged)
        if best_pair is None or best_mdl >= mdl_current:
            break
        c, labels = best_pair
        nodes.drop(c)
        nodes.reset_from_members(X, labels)

    partition = Partition.from_labels(labels + 1)
    return SearchResult(
        partition=partition,
        khat=partition.K,
        criterion=trace[-1][1],
        trace=trace,
        model=model,
    )
