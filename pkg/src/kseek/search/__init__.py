"""Cluster-count search algorithms.

Six methods share one configuration and result shape.  The centroid family
(x-means, g-means, dip-means) grows K by splitting clusters; pg-means grows
a mixture until projected goodness-of-fit tests pass; mml-em and smlsom
start from a large K and shrink it.  Every method returns the partition,
the estimated K, and the value of its own selection criterion (lower is
better), so repeated runs can be compared.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..gmm import Dataset, GmmModel, Partition
from ..rng import as_generator, derive

__all__ = [
    "METHODS",
    "SearchConfig",
    "SearchResult",
    "default_config",
    "fit",
    "best_of_runs",
    "kmeans",
    "split_init",
]

METHODS = ("xmeans", "gmeans", "dipmeans", "pgmeans", "mmlem", "smlsom")


@dataclass
class SearchConfig:
    """Hyperparameters shared by the search methods.

    Fields that only one method reads are documented there; the defaults
    follow the published settings of each method (see ``default_config``).
    """

    k_min: int = 1
    k_max: int = 50
    alpha: float = 1e-3  # significance level (gmeans/dipmeans/pgmeans)
    v_thd: float = 0.01  # dip-means split-viewer ratio threshold
    h: int = 12  # pg-means projection count
    b: int = 1000  # dip-means bootstrap count
    epsilon: float = 1e-4  # EM relative convergence tolerance
    beta: float = 15.0  # smlsom KL-similarity threshold coefficient
    tau_max: int | None = None  # smlsom learning steps (None: one per sample)
    seed: int = 0
    split_init: str = "reflection"  # 'reflection' or 'pca' two-center seeding
    cov_type: str = "full"  # model-based methods' covariance structure
    ad_critical: float = 1.8692  # gmeans A2* threshold (alpha = 1e-4)
    em_restarts: int = 10  # pg-means restarts per added component

    def __post_init__(self):
        if self.k_min < 1:
            raise ValueError("k_min must be >= 1")
        if self.k_max < self.k_min:
            raise ValueError("k_max must be >= k_min")
        if self.split_init not in ("reflection", "pca"):
            raise ValueError("split_init must be 'reflection' or 'pca'")


_METHOD_DEFAULTS = {
    "xmeans": dict(k_max=50, split_init="reflection"),
    "gmeans": dict(k_max=50, alpha=1e-4, split_init="pca"),
    "dipmeans": dict(k_max=50, alpha=1e-16, v_thd=0.01, b=1000),
    "pgmeans": dict(k_max=50, alpha=1e-3, h=12, epsilon=1e-4),
    "mmlem": dict(k_max=20, epsilon=1e-4),
    "smlsom": dict(k_max=20, beta=15.0),
}


def default_config(method: str, **overrides) -> SearchConfig:
    """The published hyperparameter defaults for ``method``."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    kwargs = dict(_METHOD_DEFAULTS[method])
    kwargs.update(overrides)
    return SearchConfig(**kwargs)


@dataclass
class SearchResult:
    """Outcome of one search run."""

    partition: Partition
    khat: int
    criterion: float
    trace: list[tuple[int, float]] = field(default_factory=list)
    model: GmmModel | None = None
    elapsed: float = 0.0
    method: str = ""

    def to_json_dict(self) -> dict:
        return {
            "method": self.method,
            "khat": self.khat,
            "criterion": self.criterion,
            "labels": self.partition.labels.tolist(),
            "trace": [[int(k), float(c)] for k, c in self.trace],
            "elapsed": self.elapsed,
        }


def fit(method: str, data: Dataset, config: SearchConfig | None = None, seed=None) -> SearchResult:
    """Run one search method on ``data``; see ``METHODS`` for names.

    ``seed`` overrides ``config.seed``; either an int or a Generator.
    The wall-clock time of the search itself lands in ``result.elapsed``.
    """
    from . import _dipmeans, _gmeans, _mmlem, _pgmeans, _smlsom, _xmeans

    runners = {
        "xmeans": _xmeans.xmeans,
        "gmeans": _gmeans.gmeans,
        "dipmeans": _dipmeans.dipmeans,
        "pgmeans": _pgmeans.pgmeans,
        "mmlem": _mmlem.mmlem,
        "smlsom": _smlsom.smlsom,
    }
    if method not in runners:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    if config is None:
        config = default_config(method)
    t0 = time.perf_counter()
    result = runners[method](data, config, seed=seed)
    result.elapsed = time.perf_counter() - t0
    result.method = method
    if not (config.k_min <= result.khat <= config.k_max):
        raise AssertionError(
            f"{method} returned K={result.khat} outside [{config.k_min}, {config.k_max}]"
        )
    return result


def best_of_runs(
    data: Dataset, method: str, R: int, config: SearchConfig | None = None
) -> SearchResult:
    """Best of ``R`` runs on distinct substreams, by the method's criterion.

    g-means is deterministic, so its R is forced to 1.  Failed runs are
    skipped; if every run fails the last error is re-raised.
    """
    if R < 1:
        raise ValueError("R must be >= 1")
    if config is None:
        config = default_config(method)
    if method == "gmeans":
        R = 1
    best: SearchResult | None = None
    last_error: Exception | None = None
    for r in range(R):
        try:
            result = fit(method, data, config, seed=derive(config.seed, 101, r))
        except Exception as exc:  # noqa: BLE001 - per-run failures are data
            last_error = exc
            continue
        if best is None or result.criterion < best.criterion:
            best = result
    if best is None:
        raise last_error if last_error is not None else RuntimeError("no runs")
    return best


def resolve_rng(config: SearchConfig, seed) -> np.random.Generator:
    return as_generator(config.seed if seed is None else seed)


def initial_centers(
    data: Dataset, k_min: int, rng: np.random.Generator | None
) -> np.ndarray:
    """Starting centers for the splitting methods: the grand mean for
    k_min=1, otherwise k_min distinct sample points."""
    X = data.samples
    if k_min == 1:
        return X.mean(axis=0)[None, :]
    if rng is None:  # deterministic fallback: first distinct rows
        _, idx = np.unique(X, axis=0, return_index=True)
        idx = np.sort(idx)[:k_min]
    else:
        idx = rng.choice(X.shape[0], size=k_min, replace=False)
    return X[idx].copy()


from ._kmeans import kmeans, split_init  # noqa: E402  (re-export)
