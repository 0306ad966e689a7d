"""Synthetic GMM benchmarks with controlled average pairwise overlap.

The overlap between two components is the probability that a point drawn
from one scores higher under the other (weighted densities).  A base model
with uniform means and one of four covariance structures is rescaled by a
single covariance inflation factor until the Monte-Carlo estimate of the
average pairwise overlap hits the target.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CalibrationFailed, DomainError, SingularCovariance
from .gmm import Dataset, GmmModel, gaussian_log_density, sample_model
from .rng import as_generator, derive

__all__ = [
    "COVARIANCE_TYPES",
    "OverlapSpec",
    "OverlapReport",
    "pairwise_overlap",
    "generate_base_model",
    "calibrate_overlap",
    "generate_scenario_dataset",
]

# Table of covariance structures: homogeneous/heterogeneous x spherical/full.
COVARIANCE_TYPES = ("hom_spherical", "hom_full", "het_spherical", "het_full")

_COV_ALIASES = {1: "hom_spherical", 2: "hom_full", 3: "het_spherical", 4: "het_full"}


def canonical_cov_type(cov_type) -> str:
    if isinstance(cov_type, (int, np.integer)):
        if int(cov_type) not in _COV_ALIASES:
            raise DomainError(f"covariance type index must be 1..4, got {cov_type}")
        return _COV_ALIASES[int(cov_type)]
    name = str(cov_type)
    if name not in COVARIANCE_TYPES:
        raise DomainError(f"unknown covariance type {cov_type!r}")
    return name


@dataclass
class OverlapSpec:
    """Recipe for one benchmark model: K* components in p dimensions with
    target average pairwise overlap ``omega_bar``."""

    k_star: int
    p: int
    omega_bar: float
    cov_type: str = "hom_spherical"
    mc_samples: int = 100_000
    seed: int = 0

    def __post_init__(self):
        self.cov_type = canonical_cov_type(self.cov_type)
        if not 0.0 < self.omega_bar < 1.0:
            raise DomainError(f"omega_bar must be in (0,1), got {self.omega_bar}")
        if self.k_star < 2:
            raise DomainError("overlap calibration needs K* >= 2")
        if self.p < 1:
            raise DomainError("p must be >= 1")
        if self.mc_samples < 10_000:
            raise DomainError("mc_samples must be >= 10^4")


@dataclass
class OverlapReport:
    """Realized overlap of a calibrated model.

    ``pairwise[k, l]`` holds the probability that a draw from component k
    scores higher under component l (zero diagonal); ``omega_bar_hat``
    averages the symmetrized pair overlaps over unordered pairs.
    """

    pairwise: np.ndarray
    omega_bar_hat: float
    mc_std_err: float
    scale: float = field(default=1.0)

    def to_json_dict(self) -> dict:
        return {
            "pairwise": self.pairwise.tolist(),
            "omegaBarHat": self.omega_bar_hat,
            "mcStdErr": self.mc_std_err,
            "c": self.scale,
        }


def pairwise_overlap(model: GmmModel, k: int, l: int, mc_samples: int, seed) -> float:
    """Monte-Carlo estimate of Pr[w_k f_k(x) < w_l f_l(x)] for x ~ component k.

    Deterministic given the seed.  ``k`` and ``l`` are 0-based component
    indices.
    """
    if k == l:
        raise DomainError("pairwise overlap needs two distinct components")
    rng = as_generator(seed)
    z = rng.standard_normal((mc_samples, model.p))
    L = np.linalg.cholesky(model.covariances[k])
    x = model.means[k] + z @ L.T
    log_k = np.log(model.weights[k]) + gaussian_log_density(
        x, model.means[k], model.covariances[k]
    )
    log_l = np.log(model.weights[l]) + gaussian_log_density(
        x, model.means[l], model.covariances[l]
    )
    return float(np.mean(log_k < log_l))


def _wishart_unit(p: int, rng: np.random.Generator) -> np.ndarray:
    """Draw from Wishart(I_p, p+1) scaled to unit expectation, retrying the
    (almost surely unnecessary) degenerate case."""
    for _ in range(10):
        a = rng.standard_normal((p + 1, p))
        w = (a.T @ a) / (p + 1)
        w = 0.5 * (w + w.T)
        try:
            np.linalg.cholesky(w)
            return w
        except np.linalg.LinAlgError:
            continue
    raise SingularCovariance("Wishart draw not SPD after 10 attempts")


def generate_base_model(spec: OverlapSpec, rng=None) -> GmmModel:
    """Uncalibrated benchmark model: means uniform on [0,1]^p, covariances
    by structure, uniform mixing weights."""
    rng = as_generator(spec.seed if rng is None else rng)
    K, p = spec.k_star, spec.p
    means = rng.random((K, p))
    covs = np.empty((K, p, p))
    if spec.cov_type == "hom_spherical":
        sigma = rng.random()
        covs[:] = sigma**2 * np.eye(p)
    elif spec.cov_type == "het_spherical":
        sigmas = rng.random(K)
        for k in range(K):
            covs[k] = sigmas[k] ** 2 * np.eye(p)
    elif spec.cov_type == "hom_full":
        covs[:] = _wishart_unit(p, rng)
    else:  # het_full
        for k in range(K):
            covs[k] = _wishart_unit(p, rng)
    weights = np.full(K, 1.0 / K)
    return GmmModel(weights, means, covs)


def _overlap_matrix(
    model: GmmModel, mc_samples: int, seed: int
) -> tuple[np.ndarray, float, float]:
    """All directed overlaps plus the average and its Monte-Carlo standard
    error.  Each directed pair uses its own fixed substream, so repeated
    evaluations at different covariance scales share random draws."""
    K = model.K
    pairwise = np.zeros((K, K))
    var_sum = 0.0
    n_pairs = K * (K - 1) // 2
    for k in range(K):
        for l in range(K):
            if k == l:
                continue
            est = pairwise_overlap(model, k, l, mc_samples, derive(seed, k, l))
            pairwise[k, l] = est
            var_sum += est * (1.0 - est) / mc_samples
    omega_pairs = pairwise + pairwise.T
    iu = np.triu_indices(K, 1)
    omega_bar_hat = float(np.mean(omega_pairs[iu]))
    mc_std_err = float(np.sqrt(var_sum) / n_pairs)
    return pairwise, omega_bar_hat, mc_std_err


def calibrate_overlap(spec: OverlapSpec) -> tuple[GmmModel, OverlapReport]:
    """Scale a base model's covariances so the realized average overlap
    matches ``spec.omega_bar``.

    Bisection on the common scale factor c over [1e-6, 1e6] (in log space;
    average overlap is nondecreasing in c) until
    |omega_bar_hat - omega_bar| <= max(0.05 * omega_bar, 2 * mc_std_err),
    with up to 60 steps and up to 20 redraws of the base model when the
    bracket cannot reach the target.
    """
    tol_frac = 0.05 * spec.omega_bar
    best = None
    base_rng = derive(spec.seed, 0)
    for redraw in range(20):
        model = generate_base_model(spec, base_rng)
        mc_seed = spec.seed
        lo, hi = 1e-6, 1e6

        def evaluate(c):
            pw, oh, se = _overlap_matrix(model.scaled(c), spec.mc_samples, mc_seed)
            return OverlapReport(pw, oh, se, scale=c)

        rep_lo, rep_hi = evaluate(lo), evaluate(hi)
        for rep in (rep_lo, rep_hi):
            if abs(rep.omega_bar_hat - spec.omega_bar) <= max(
                tol_frac, 2 * rep.mc_std_err
            ):
                return model.scaled(rep.scale), rep
        if rep_lo.omega_bar_hat > spec.omega_bar or rep_hi.omega_bar_hat < spec.omega_bar:
            for rep in (rep_lo, rep_hi):
                if best is None or abs(rep.omega_bar_hat - spec.omega_bar) < abs(
                    best.omega_bar_hat - spec.omega_bar
                ):
                    best = rep
            continue
        for _ in range(60):
            mid = np.sqrt(lo * hi)
            rep = evaluate(mid)
            if abs(rep.omega_bar_hat - spec.omega_bar) <= max(
                tol_frac, 2 * rep.mc_std_err
            ):
                return model.scaled(mid), rep
            if rep.omega_bar_hat < spec.omega_bar:
                lo = mid
            else:
                hi = mid
        if best is None or abs(rep.omega_bar_hat - spec.omega_bar) < abs(
            best.omega_bar_hat - spec.omega_bar
        ):
            best = rep
    raise CalibrationFailed(best.omega_bar_hat if best is not None else float("nan"))


def generate_scenario_dataset(
    spec: OverlapSpec, n: int, seed
) -> tuple[GmmModel, Dataset]:
    """Calibrate a model for ``spec`` and draw ``n`` labelled samples.

    Provenance records the spec, the calibrated covariance scale, and the
    seeds, so the dataset can be regenerated exactly.
    """
    if n < spec.k_star:
        raise DomainError("n must be at least K*")
    model, report = calibrate_overlap(spec)
    data = sample_model(model, n, seed)
    data.provenance = {
        "k_star": spec.k_star,
        "p": spec.p,
        "omega_bar": spec.omega_bar,
        "cov_type": spec.cov_type,
        "mc_samples": spec.mc_samples,
        "model_seed": spec.seed,
        "sample_seed": seed if not isinstance(seed, np.random.Generator) else None,
        "covariance_scale": float(report.scale),
        "omega_bar_hat": report.omega_bar_hat,
    }
    return model, data
