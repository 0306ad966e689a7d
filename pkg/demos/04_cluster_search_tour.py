"""All six cluster-count search algorithms on one benchmark dataset.

Each method returns the partition, its own selection criterion (lower is
better across repeated runs of the same method), and the wall-clock time
of the search.

Run:  python demos/04_cluster_search_tour.py
"""

from kseek import (
    METHODS,
    OverlapSpec,
    best_of_runs,
    cari,
    default_config,
    generate_scenario_dataset,
)

spec = OverlapSpec(
    k_star=4, p=2, omega_bar=0.02, cov_type="het_spherical",
    mc_samples=30_000, seed=5,
)
model, data = generate_scenario_dataset(spec, n=2000, seed=9)
print(f"benchmark: K*=4, p=2, n=2000, realized overlap "
      f"{data.provenance['omega_bar_hat']:.4f}\n")

print(f"{'method':10s} {'Khat':>4s} {'cARI':>6s} {'criterion':>12s} {'time':>7s}")
for method in METHODS:
    config = default_config(method, seed=1)
    # best of three runs by each method's own criterion (g-means is
    # deterministic, so it runs once)
    result = best_of_runs(data, method, 3, config)
    score = cari(data.true_labels, result.partition.labels)
    print(
        f"{method:10s} {result.khat:4d} {score:6.3f} "
        f"{result.criterion:12.1f} {result.elapsed:6.2f}s"
    )

print("\ntrace of the x-means run (K, partition BIC):")
result = best_of_runs(data, "xmeans", 3, default_config("xmeans", seed=1))
for k, value in result.trace:
    print(f"  K={k:2d}  {value:10.1f}")
