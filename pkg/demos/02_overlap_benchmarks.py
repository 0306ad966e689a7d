"""Generating benchmark datasets with a chosen amount of cluster overlap.

The generator draws a random mixture (uniform means, one of four
covariance structures), then rescales all covariances by one factor until
the Monte-Carlo estimate of the average pairwise misclassification
probability hits the target.

Run:  python demos/02_overlap_benchmarks.py
"""

import numpy as np

from kseek import OverlapSpec, calibrate_overlap, generate_scenario_dataset

for omega in (0.01, 0.05, 0.1):
    spec = OverlapSpec(
        k_star=4, p=2, omega_bar=omega, cov_type="het_full",
        mc_samples=30_000, seed=7,
    )
    model, report = calibrate_overlap(spec)
    print(
        f"target {omega:.2f}: realized {report.omega_bar_hat:.4f} "
        f"(mc se {report.mc_std_err:.1e}), covariance scale c = {report.scale:.4g}"
    )

# The directed overlap matrix is asymmetric: omega[k, l] is the chance a
# point drawn from component k scores higher under component l.
print("\ndirected overlap matrix at the last target:")
print(np.array_str(report.pairwise, precision=3, suppress_small=True))

# One call bundles calibration + sampling and records provenance.
spec = OverlapSpec(k_star=3, p=2, omega_bar=0.05, cov_type="hom_spherical",
                   mc_samples=30_000, seed=3)
model, data = generate_scenario_dataset(spec, n=1500, seed=11)
print("\ndataset:", data.n, "points, labels:", np.bincount(data.true_labels)[1:])
print("provenance:", {k: v for k, v in data.provenance.items()
                      if k in ("omega_bar", "omega_bar_hat", "covariance_scale")})
