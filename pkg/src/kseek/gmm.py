"""Gaussian mixture models: representation, density, sampling, EM, BIC.

The shared numerical conventions live here.  All log-density work goes
through Cholesky factorizations (never an explicit inverse), and every
likelihood accumulation uses log-sum-exp so that high-dimensional densities
do not underflow.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import (
    DegenerateComponent,
    DegenerateVariance,
    DimensionError,
    SingularCovariance,
)
from .rng import as_generator

__all__ = [
    "GmmModel",
    "Dataset",
    "Partition",
    "COV_TYPES",
    "gaussian_log_density",
    "mixture_log_likelihood",
    "sample_model",
    "e_step",
    "em_fit",
    "bic_xmeans",
    "standard_bic",
    "free_parameter_count",
]

# EM covariance constraints: per-component full, one spherical variance shared
# by all components, per-component spherical, one full matrix shared by all.
COV_TYPES = ("full", "spherical-shared", "spherical-per-cluster", "full-shared")

_LOG_2PI = np.log(2.0 * np.pi)

# Ridge factor for repairing a covariance that fails Cholesky (scaled by
# mean diagonal magnitude); a single bounded retry keeps EM deterministic.
_RIDGE = 1e-6


def _cholesky(cov: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise SingularCovariance(str(exc)) from exc


@dataclass
class GmmModel:
    """A K-component Gaussian mixture in p dimensions.

    weights : (K,) mixing probabilities, all positive, summing to one
    means : (K, p) component means
    covariances : (K, p, p) symmetric positive-definite matrices
    """

    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.means = np.atleast_2d(np.asarray(self.means, dtype=float))
        self.covariances = np.asarray(self.covariances, dtype=float)
        if self.covariances.ndim == 2:
            self.covariances = self.covariances[None, :, :]
        K = self.weights.shape[0]
        if self.means.shape[0] != K or self.covariances.shape[0] != K:
            raise DimensionError("weights, means, covariances disagree on K")
        p = self.means.shape[1]
        if self.covariances.shape[1:] != (p, p):
            raise DimensionError("covariance shape does not match mean dimension")
        if np.any(self.weights <= 0):
            raise ValueError("mixing weights must be strictly positive")
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError("mixing weights must sum to 1 within 1e-12")
        for k in range(K):
            if not np.allclose(self.covariances[k], self.covariances[k].T):
                raise ValueError(f"covariance {k} is not symmetric")
            _cholesky(self.covariances[k])

    @property
    def K(self) -> int:
        return self.weights.shape[0]

    @property
    def p(self) -> int:
        return self.means.shape[1]

    def scaled(self, c: float) -> "GmmModel":
        """Return a copy with every covariance multiplied by ``c``."""
        return GmmModel(self.weights.copy(), self.means.copy(), c * self.covariances)

    def to_json(self) -> str:
        return json.dumps(
            {
                "K": self.K,
                "weights": self.weights.tolist(),
                "means": self.means.tolist(),
                "covariances": self.covariances.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "GmmModel":
        obj = json.loads(text)
        model = cls(
            np.asarray(obj["weights"]),
            np.asarray(obj["means"]),
            np.asarray(obj["covariances"]),
        )
        if model.K != obj["K"]:
            raise ValueError("stored K disagrees with weight vector length")
        return model


@dataclass
class Dataset:
    """An n-by-p sample matrix with optional ground-truth labels.

    true_labels, when present, are integers in 1..K* and align with rows of
    ``samples``.  ``provenance`` records how the data were generated.
    """

    samples: np.ndarray
    true_labels: np.ndarray | None = None
    provenance: dict | None = None

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=float))
        if self.samples.shape[0] < 1 or self.samples.shape[1] < 1:
            raise DimensionError("dataset must have n >= 1 and p >= 1")
        if self.true_labels is not None:
            self.true_labels = np.asarray(self.true_labels, dtype=int)
            if self.true_labels.shape != (self.samples.shape[0],):
                raise DimensionError("true_labels length must equal sample count")

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def p(self) -> int:
        return self.samples.shape[1]

    def to_csv(self) -> str:
        """CSV with columns x1..xp and, when labels exist, a final ``label``."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        header = [f"x{j + 1}" for j in range(self.p)]
        if self.true_labels is not None:
            header.append("label")
        writer.writerow(header)
        for i in range(self.n):
            row = [repr(float(v)) for v in self.samples[i]]
            if self.true_labels is not None:
                row.append(str(int(self.true_labels[i])))
            writer.writerow(row)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, provenance: dict | None = None) -> "Dataset":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows:
            raise ValueError("empty CSV")
        header = rows[0]
        has_label = header and header[-1].strip().lower() == "label"
        body = rows[1:] if any(not _is_number(c) for c in header) else rows
        if body is rows:  # headerless file
            has_label = False
        data = []
        labels = []
        for row in body:
            if not row:
                continue
            if has_label:
                data.append([float(v) for v in row[:-1]])
                labels.append(int(row[-1]))
            else:
                data.append([float(v) for v in row])
        return cls(
            np.asarray(data),
            np.asarray(labels) if has_label else None,
            provenance,
        )

    def provenance_json(self) -> str:
        return json.dumps(self.provenance or {}, sort_keys=True)


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


@dataclass
class Partition:
    """An assignment of n samples to clusters 1..K, every cluster nonempty."""

    labels: np.ndarray
    K: int = field(default=0)

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=int)
        present = np.unique(self.labels)
        if self.K == 0:
            self.K = len(present)
        if not np.array_equal(present, np.arange(1, self.K + 1)):
            raise ValueError(
                "labels must cover 1..K with no empty cluster; "
                "use Partition.from_labels to canonicalize"
            )

    @classmethod
    def from_labels(cls, labels) -> "Partition":
        """Relabel arbitrary cluster ids to contiguous 1..K (order of first
        appearance in sorted id order)."""
        labels = np.asarray(labels, dtype=int)
        present = np.unique(labels)
        lut = {old: new + 1 for new, old in enumerate(present)}
        return cls(np.array([lut[v] for v in labels]), len(present))

    @property
    def n(self) -> int:
        return self.labels.shape[0]

    def members(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.labels == k)

    def counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.K + 1)[1:]


# ---------------------------------------------------------------------------
# densities and likelihood


def gaussian_log_density(x, mean, cov) -> float | np.ndarray:
    """Log of the multivariate normal density at ``x``.

    ``x`` may be a single p-vector or an (n, p) matrix; the covariance is
    factorized once (Cholesky).  Raises SingularCovariance when the
    factorization fails.
    """
    x = np.asarray(x, dtype=float)
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    p = mean.shape[0]
    if X.shape[1] != p or cov.shape != (p, p):
        raise DimensionError("x, mean, cov dimensions disagree")
    L = _cholesky(cov)
    diff = X - mean
    z = np.linalg.solve(L, diff.T)  # lower-triangular solve
    log_det = 2.0 * np.sum(np.log(np.diag(L)))
    out = -0.5 * (p * _LOG_2PI + log_det + np.sum(z * z, axis=0))
    return float(out[0]) if single else out


def _component_log_densities(model: GmmModel, X: np.ndarray) -> np.ndarray:
    """(n, K) matrix of per-component log densities."""
    n = X.shape[0]
    out = np.empty((n, model.K))
    for k in range(model.K):
        out[:, k] = gaussian_log_density(X, model.means[k], model.covariances[k])
    return out


def mixture_log_likelihood(model: GmmModel, data: Dataset) -> float:
    """Total log-likelihood of ``data`` under ``model`` (log-sum-exp)."""
    if data.p != model.p:
        raise DimensionError(f"model dimension {model.p} != data dimension {data.p}")
    log_dens = _component_log_densities(model, data.samples)
    return float(np.sum(logsumexp(log_dens + np.log(model.weights), axis=1)))


def sample_model(model: GmmModel, n: int, seed) -> Dataset:
    """Draw ``n`` labelled samples from the mixture, reproducibly.

    Component k is chosen with probability w_k, the point drawn from the
    component via its Cholesky factor; labels record k in 1..K.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = as_generator(seed)
    comps = rng.choice(model.K, size=n, p=model.weights)
    X = np.empty((n, model.p))
    for k in range(model.K):
        idx = np.flatnonzero(comps == k)
        if idx.size == 0:
            continue
        L = _cholesky(model.covariances[k])
        z = rng.standard_normal((idx.size, model.p))
        X[idx] = model.means[k] + z @ L.T
    return Dataset(X, comps + 1)


def e_step(model: GmmModel, data: Dataset) -> np.ndarray:
    """Posterior component responsibilities, one row per sample.

    Rows sum to 1 within 1e-10.
    """
    if data.p != model.p:
        raise DimensionError(f"model dimension {model.p} != data dimension {data.p}")
    log_r = _component_log_densities(model, data.samples) + np.log(model.weights)
    log_r -= logsumexp(log_r, axis=1, keepdims=True)
    return np.exp(log_r)


# ---------------------------------------------------------------------------
# EM estimation


def _repair_spd(cov: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Cholesky with one ridge retry; raises DegenerateComponent after that."""
    try:
        return cov, np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    p = cov.shape[0]
    ridge = _RIDGE * (np.trace(cov) / p)
    if ridge <= 0:
        raise DegenerateComponent(k, f"component {k}: zero-trace covariance")
    repaired = cov + ridge * np.eye(p)
    try:
        return repaired, np.linalg.cholesky(repaired)
    except np.linalg.LinAlgError:
        raise DegenerateComponent(k, f"component {k}: covariance not repairable")


def _m_step(
    X: np.ndarray, resp: np.ndarray, cov_type: str
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Weighted ML updates under one of the COV_TYPES constraints."""
    n, p = X.shape
    K = resp.shape[1]
    nk = resp.sum(axis=0)
    floor = 10 * np.finfo(float).eps
    for k in range(K):
        if nk[k] < floor:
            raise DegenerateComponent(k, f"component {k}: responsibility mass {nk[k]:.3e}")
    weights = nk / n
    means = (resp.T @ X) / nk[:, None]

    covs = np.empty((K, p, p))
    if cov_type == "full":
        for k in range(K):
            diff = X - means[k]
            covs[k] = (resp[:, k] * diff.T) @ diff / nk[k]
    elif cov_type == "full-shared":
        pooled = np.zeros((p, p))
        for k in range(K):
            diff = X - means[k]
            pooled += (resp[:, k] * diff.T) @ diff
        covs[:] = pooled / n
    elif cov_type == "spherical-per-cluster":
        for k in range(K):
            diff = X - means[k]
            s2 = float(np.sum(resp[:, k] * np.sum(diff * diff, axis=1))) / (nk[k] * p)
            covs[k] = s2 * np.eye(p)
    elif cov_type == "spherical-shared":
        total = 0.0
        for k in range(K):
            diff = X - means[k]
            total += float(np.sum(resp[:, k] * np.sum(diff * diff, axis=1)))
        covs[:] = (total / (n * p)) * np.eye(p)
    else:
        raise ValueError(f"unknown cov_type {cov_type!r}; expected one of {COV_TYPES}")

    for k in range(K):
        covs[k], _ = _repair_spd(covs[k], k)
    return weights, means, covs


def _init_model(data: Dataset, K: int, init, cov_type: str) -> GmmModel:
    if isinstance(init, GmmModel):
        if init.K != K or init.p != data.p:
            raise DimensionError("initial model shape disagrees with (K, p)")
        return init
    if isinstance(init, Partition):
        if init.K != K or init.n != data.n:
            raise DimensionError("initial partition disagrees with (K, n)")
        resp = np.zeros((data.n, K))
        resp[np.arange(data.n), init.labels - 1] = 1.0
        w, m, c = _m_step(data.samples, resp, cov_type)
        return GmmModel(w, m, c)
    raise TypeError("init must be a Partition or a GmmModel")


def em_fit(
    data: Dataset,
    K: int,
    init,
    cov_type: str = "full",
    epsilon: float = 1e-4,
    max_iter: int = 500,
) -> tuple[GmmModel, float]:
    """Fit a K-component mixture by EM under a covariance constraint.

    Alternates E and M steps until the relative log-likelihood improvement
    drops below ``epsilon`` or ``max_iter`` is reached.  Returns the model
    and its final log-likelihood.  Raises DegenerateComponent when a
    component collapses and ridge repair cannot restore it.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    model = _init_model(data, K, init, cov_type)
    loglik = mixture_log_likelihood(model, data)
    for _ in range(max_iter):
        resp = e_step(model, data)
        w, m, c = _m_step(data.samples, resp, cov_type)
        model = GmmModel(w, m, c)
        new_loglik = mixture_log_likelihood(model, data)
        if abs(new_loglik - loglik) / max(abs(new_loglik), 1e-300) < epsilon:
            loglik = new_loglik
            break
        loglik = new_loglik
    return model, loglik


# ---------------------------------------------------------------------------
# selection criteria


def bic_xmeans(partition: Partition, data: Dataset) -> float:
    """Whole-partition BIC for centroid methods.

    The model scores each cluster with its centroid, weight n_k/n, and one
    pooled spherical variance  sum_k sum_{i in k} ||x_i - mu_k||^2 / (n - K);
    the score is -loglik + K(p+1)/2 * log n (lower is better).
    """
    X = data.samples
    n, p = X.shape
    K = partition.K
    if partition.n != n:
        raise DimensionError("partition length disagrees with dataset")
    if n <= K:
        raise DegenerateVariance(f"n={n} must exceed K={K}")
    counts = partition.counts()
    ss = 0.0
    centroids = np.empty((K, p))
    for k in range(1, K + 1):
        pts = X[partition.labels == k]
        centroids[k - 1] = pts.mean(axis=0)
        ss += float(np.sum((pts - centroids[k - 1]) ** 2))
    sigma2 = max(ss / (n - K), np.finfo(float).tiny)
    log_w = np.log(counts / n)
    loglik = 0.0
    for k in range(1, K + 1):
        pts = X[partition.labels == k]
        d2 = np.sum((pts - centroids[k - 1]) ** 2, axis=1)
        loglik += float(
            np.sum(log_w[k - 1] - 0.5 * (p * _LOG_2PI + p * np.log(sigma2) + d2 / sigma2))
        )
    return -loglik + 0.5 * K * (p + 1) * np.log(n)


def free_parameter_count(K: int, p: int, cov_type: str = "full") -> int:
    """Number of free parameters of a K-component mixture."""
    base = (K - 1) + K * p
    if cov_type == "full":
        return base + K * (p * (p + 1)) // 2
    if cov_type == "full-shared":
        return base + (p * (p + 1)) // 2
    if cov_type == "spherical-per-cluster":
        return base + K
    if cov_type == "spherical-shared":
        return base + 1
    raise ValueError(f"unknown cov_type {cov_type!r}; expected one of {COV_TYPES}")


def standard_bic(model: GmmModel, data: Dataset, cov_type: str = "full") -> float:
    """-loglik + (m/2) log n with m the free-parameter count (lower wins)."""
    m = free_parameter_count(model.K, model.p, cov_type)
    return -mixture_log_likelihood(model, data) + 0.5 * m * np.log(data.n)
