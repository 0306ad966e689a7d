"""Tour of the mixture-model core: densities, sampling, EM, and BIC.

Run:  python demos/01_mixtures_and_em.py
"""

import numpy as np

from kseek import (
    Dataset,
    GmmModel,
    Partition,
    bic_xmeans,
    em_fit,
    gaussian_log_density,
    mixture_log_likelihood,
    sample_model,
    standard_bic,
)

# A three-component mixture in the plane.
model = GmmModel(
    weights=[0.5, 0.3, 0.2],
    means=[[0.0, 0.0], [4.0, 0.0], [0.0, 5.0]],
    covariances=[np.eye(2), [[1.0, 0.6], [0.6, 1.0]], 0.5 * np.eye(2)],
)
print("log density at the first mean:", gaussian_log_density(
    np.zeros(2), model.means[0], model.covariances[0]))

# Sampling is reproducible given a seed, and labels ride along.
data = sample_model(model, 2000, seed=42)
print("sampled", data.n, "points; per-component counts:",
      np.bincount(data.true_labels)[1:])
print("log-likelihood under the truth:", round(mixture_log_likelihood(model, data), 1))

# Fit mixtures of several orders by EM (warm-started from k-means) and
# compare their BIC scores.
from kseek import kmeans

rng = np.random.default_rng(0)
print("\n K  standard BIC (lower is better)")
for k in range(1, 6):
    init, _ = kmeans(data, data.samples[rng.choice(data.n, k, replace=False)])
    fitted, loglik = em_fit(data, k, init, "full")
    print(f" {k}  {standard_bic(fitted, data, 'full'):10.1f}")

# The centroid-style BIC scores a hard partition instead of a model.
truth_partition = Partition(data.true_labels)
print("\npartition BIC at the true labels:", round(bic_xmeans(truth_partition, data), 1))
