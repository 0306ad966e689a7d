"""kseek: how many clusters?

A toolkit for estimating the number of clusters in Gaussian-mixture data:
six search algorithms (x-means, g-means, dip-means, pg-means, mml-em,
smlsom), a synthetic benchmark generator with calibrated cluster overlap,
ARI/cARI evaluation, a reproducible simulation harness, and a Group
Lasso / EBIC analysis of the resulting factorial experiment.
"""

__version__ = "0.1.0"

from .datagen import (
    OverlapReport,
    OverlapSpec,
    calibrate_overlap,
    generate_base_model,
    generate_scenario_dataset,
    pairwise_overlap,
)
from .gmm import (
    Dataset,
    GmmModel,
    Partition,
    bic_xmeans,
    e_step,
    em_fit,
    gaussian_log_density,
    mixture_log_likelihood,
    sample_model,
    standard_bic,
)
from .harness import AggregateRecord, RunRecord, Scenario, run_grid, run_scenario
from .metrics import ari, cari, k_deviation, pair_counts, response_transform
from .search import (
    METHODS,
    SearchConfig,
    SearchResult,
    best_of_runs,
    default_config,
    fit,
    kmeans,
    split_init,
)
from .stattests import (
    ad_statistic,
    dip_statistic,
    dip_test,
    ks_critical_value,
    ks_statistic,
    normal_cdf,
    probit,
)

__all__ = [
    "__version__",
    "Dataset",
    "GmmModel",
    "Partition",
    "gaussian_log_density",
    "mixture_log_likelihood",
    "sample_model",
    "e_step",
    "em_fit",
    "bic_xmeans",
    "standard_bic",
    "OverlapSpec",
    "OverlapReport",
    "pairwise_overlap",
    "generate_base_model",
    "calibrate_overlap",
    "generate_scenario_dataset",
    "ad_statistic",
    "dip_statistic",
    "dip_test",
    "ks_statistic",
    "ks_critical_value",
    "probit",
    "normal_cdf",
    "pair_counts",
    "ari",
    "cari",
    "k_deviation",
    "response_transform",
    "METHODS",
    "SearchConfig",
    "SearchResult",
    "default_config",
    "fit",
    "best_of_runs",
    "kmeans",
    "split_init",
    "Scenario",
    "RunRecord",
    "AggregateRecord",
    "run_scenario",
    "run_grid",
]
