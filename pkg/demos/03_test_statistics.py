"""The three test kernels behind the splitting criteria.

Run:  python demos/03_test_statistics.py
"""

import numpy as np

from kseek import (
    ad_statistic,
    dip_statistic,
    dip_test,
    ks_critical_value,
    ks_statistic,
    normal_cdf,
    probit,
)

rng = np.random.default_rng(0)
normal = rng.standard_normal(500)
bimodal = np.concatenate([rng.normal(-2, 1, 250), rng.normal(2, 1, 250)])

# Anderson-Darling: tail-weighted normality statistic, modified for
# estimated mean and variance.  1.8692 is the alpha = 1e-4 critical value.
print("AD on N(0,1) sample:   ", round(ad_statistic(normal), 3))
print("AD on bimodal sample:  ", round(ad_statistic(bimodal), 3), "(threshold 1.8692)")

# Hartigan's dip: distance from the ECDF to the nearest unimodal CDF.
# The bootstrap p-value compares against uniform samples of the same size.
print("\ndip on N(0,1) sample:  ", round(dip_statistic(normal), 4))
print("dip on bimodal sample: ", round(dip_statistic(bimodal), 4))
res = dip_test(bimodal, b=1000, seed=1)
print("bootstrap p-value (bimodal):", res.p_value)

# Kolmogorov-Smirnov distance against any 1-D CDF, with the classic
# finite-sample threshold.
d = ks_statistic(normal, normal_cdf)
print("\nKS distance of the normal sample to Phi:", round(d, 4))
print("KS threshold at alpha=0.05, n=500:      ", round(ks_critical_value(0.05, 500), 4))

# Probit / normal CDF round trip.
print("\nprobit(0.975) =", round(probit(0.975), 6))
print("normal_cdf(probit(0.3)) =", round(float(normal_cdf(probit(0.3))), 12))
