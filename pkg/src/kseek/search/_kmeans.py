"""Lloyd's K-means and the two cluster-split initializers."""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist

from ..gmm import Dataset, Partition

__all__ = ["kmeans", "split_init", "reflection_init"]


def kmeans(
    data: Dataset, centers: np.ndarray, max_iter: int = 100
) -> tuple[Partition, np.ndarray]:
    """Lloyd iterations from the given centers until assignments stabilize.

    Ties go to the lowest center index.  An emptied cluster is repaired by
    seizing the point farthest from its assigned centroid, so the returned
    partition always has K nonempty clusters.
    """
    X = data.samples
    n = X.shape[0]
    centers = np.atleast_2d(np.asarray(centers, dtype=float)).copy()
    K = centers.shape[0]
    if K > n:
        raise ValueError(f"K={K} exceeds sample count n={n}")
    labels = np.full(n, -1)
    for _ in range(max_iter):
        dist = cdist(X, centers)
        new_labels = np.argmin(dist, axis=1)
        # Repair empty clusters, lowest index first.
        for k in range(K):
            if np.any(new_labels == k):
                continue
            assigned = dist[np.arange(n), new_labels]
            # Points alone in their cluster cannot be seized.
            counts = np.bincount(new_labels, minlength=K)
            movable = counts[new_labels] > 1
            if not np.any(movable):
                break
            candidates = np.where(movable, assigned, -np.inf)
            donor = int(np.argmax(candidates))
            new_labels[donor] = k
            dist[donor, :] = 0.0
            dist[donor, k] = -1.0
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for k in range(K):
            centers[k] = X[labels == k].mean(axis=0)
    return Partition(labels + 1, K), centers


def _principal_component(cov: np.ndarray, tol: float = 1e-8, max_iter: int = 1000):
    """Leading eigenpair of an SPD matrix by power iteration."""
    p = cov.shape[0]
    v = np.zeros(p)
    v[int(np.argmax(np.diag(cov)))] = 1.0
    lam = 0.0
    for _ in range(max_iter):
        w = cov @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0, v
        w /= norm
        if min(np.linalg.norm(w - v), np.linalg.norm(w + v)) < tol:
            v = w
            break
        v = w
    lam = float(v @ cov @ v)
    return lam, v


def split_init(cluster_points: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """Two centers at mu +/- u sqrt(2 lambda / pi) along the principal axis.

    lambda and u are the leading eigenvalue and eigenvector of the cluster
    covariance (power iteration).  A zero covariance falls back to a tiny
    symmetric perturbation of mu in the first coordinate.
    """
    X = np.atleast_2d(cluster_points)
    if X.shape[0] < 2:
        raise ValueError("split initialization needs at least 2 points")
    mu = np.asarray(mu, dtype=float)
    cov = np.cov(X, rowvar=False, bias=True)
    cov = np.atleast_2d(cov)
    if np.trace(cov) <= 0.0:
        offset = np.zeros_like(mu)
        offset[0] = 1e-8
        return np.vstack([mu + offset, mu - offset])
    lam, u = _principal_component(cov)
    offset = u * np.sqrt(2.0 * max(lam, 0.0) / np.pi)
    return np.vstack([mu + offset, mu - offset])


def reflection_init(
    cluster_points: np.ndarray, mu: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Two centers at a random member x and its reflection 2 mu - x."""
    X = np.atleast_2d(cluster_points)
    x = X[int(rng.integers(X.shape[0]))]
    return np.vstack([x, 2.0 * np.asarray(mu, dtype=float) - x])
