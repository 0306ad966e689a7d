"""Statistical test kernels used by the cluster-splitting criteria.

Contains the modified Anderson-Darling normality statistic, Hartigan's dip
statistic with a bootstrap p-value, the Kolmogorov-Smirnov distance against
an arbitrary 1-D CDF, and inverse-normal utilities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import kolmogi, ndtr, ndtri

from .errors import DomainError
from .rng import as_generator

__all__ = [
    "DipResult",
    "ad_statistic",
    "AD_CRITICAL",
    "dip_statistic",
    "dip_test",
    "bootstrap_null_dips",
    "ks_statistic",
    "ks_critical_value",
    "probit",
    "normal_cdf",
]

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


# Critical value of the modified Anderson-Darling statistic at alpha=1e-4
# (case with estimated mean and variance).
AD_CRITICAL = 1.8692


def ad_statistic(sample) -> float:
    """Modified Anderson-Darling normality statistic A2*.

    The sample is standardized internally with its mean and unbiased
    variance, so the statistic is invariant under affine transforms of the
    input.  Needs n >= 8; below that the small-sample correction is
    unreliable.
    """
    x = np.sort(np.asarray(sample, dtype=float))
    n = x.shape[0]
    if n < 8:
        raise DomainError(f"AD statistic needs n >= 8, got {n}")
    sd = x.std(ddof=1)
    if sd == 0:
        raise DomainError("AD statistic undefined for a constant sample")
    z = ndtr((x - x.mean()) / sd)
    z = np.clip(z, 1e-300, 1.0 - 1e-16)
    i = np.arange(1, n + 1)
    a2 = -np.mean((2 * i - 1) * (np.log(z) + np.log(1.0 - z[::-1]))) - n
    return float(a2 * (1.0 + 4.0 / n - 25.0 / n**2))


# ---------------------------------------------------------------------------
# Hartigan's dip


@njit(cache=True)
def _dip_sorted(x):  # pragma: no cover - exercised via dip_statistic
    """Dip of a sorted sample (greatest convex minorant / least concave
    majorant algorithm of Hartigan & Hartigan 1985, AS 217)."""
    n = x.shape[0]
    if n < 2 or x[n - 1] == x[0]:
        return 0.0

    low = 0
    high = n - 1
    # Work in "count" units; the returned dip is this value / (2n), so the
    # initialization encodes the 1/(2n) lower bound.
    dip = 1.0

    # Greatest convex minorant touch predecessors over the whole range.
    mn = np.empty(n, dtype=np.int64)
    mn[0] = 0
    for j in range(1, n):
        mn[j] = j - 1
        while True:
            mnj = mn[j]
            mnmnj = mn[mnj]
            if mnj == 0 or (x[j] - x[mnj]) * (mnj - mnmnj) < (x[mnj] - x[mnmnj]) * (
                j - mnj
            ):
                break
            mn[j] = mnmnj

    # Least concave majorant touch successors.
    mj = np.empty(n, dtype=np.int64)
    mj[n - 1] = n - 1
    for k in range(n - 2, -1, -1):
        mj[k] = k + 1
        while True:
            mjk = mj[k]
            mjmjk = mj[mjk]
            if mjk == n - 1 or (x[k] - x[mjk]) * (mjk - mjmjk) < (x[mjk] - x[mjmjk]) * (
                k - mjk
            ):
                break
            mj[k] = mjmjk

    gcm = np.empty(n, dtype=np.int64)
    lcm = np.empty(n, dtype=np.int64)
    while True:
        gcm[0] = high
        i = 0
        while gcm[i] > low:
            gcm[i + 1] = mn[gcm[i]]
            i += 1
        ig = i
        l_gcm = i
        ix = ig - 1

        lcm[0] = low
        i = 0
        while lcm[i] < high:
            lcm[i + 1] = mj[lcm[i]]
            i += 1
        ih = i
        l_lcm = i
        iv = 1

        # Largest distance between the two fits, walking their crossings.
        d = 0.0
        if l_gcm != 1 or l_lcm != 1:
            while True:
                gcmix = gcm[ix]
                lcmiv = lcm[iv]
                if gcmix > lcmiv:
                    gcmil = gcm[ix + 1]
                    dx = (lcmiv - gcmil + 1) - (x[lcmiv] - x[gcmil]) * (
                        gcmix - gcmil
                    ) / (x[gcmix] - x[gcmil])
                    iv += 1
                    if dx >= d:
                        d = dx
                        ig = ix + 1
                        ih = iv - 1
                else:
                    lcmivl = lcm[iv - 1]
                    dx = (x[gcmix] - x[lcmivl]) * (lcmiv - lcmivl) / (
                        x[lcmiv] - x[lcmivl]
                    ) - (gcmix - lcmivl - 1)
                    ix -= 1
                    if dx >= d:
                        d = dx
                        ig = ix + 1
                        ih = iv
                if ix < 0:
                    ix = 0
                if iv > l_lcm:
                    iv = l_lcm
                if gcm[ix] == lcm[iv]:
                    break

        if d < dip:
            break

        # Maximum deviation of the ECDF above the minorant inside the
        # candidate modal interval ...
        dip_l = 0.0
        for j in range(ig, l_gcm):
            max_t = 1.0
            jb = gcm[j + 1]
            je = gcm[j]
            if je - jb > 1 and x[je] != x[jb]:
                c = (je - jb) / (x[je] - x[jb])
                for jj in range(jb, je + 1):
                    t = (jj - jb + 1) - (x[jj] - x[jb]) * c
                    if max_t < t:
                        max_t = t
            if dip_l < max_t:
                dip_l = max_t

        # ... and below the majorant.
        dip_u = 0.0
        for j in range(ih, l_lcm):
            max_t = 1.0
            jb = lcm[j]
            je = lcm[j + 1]
            if je - jb > 1 and x[je] != x[jb]:
                c = (je - jb) / (x[je] - x[jb])
                for jj in range(jb, je + 1):
                    t = (x[jj] - x[jb]) * c - (jj - jb - 1)
                    if max_t < t:
                        max_t = t
            if dip_u < max_t:
                dip_u = max_t

        dip_new = dip_u if dip_u > dip_l else dip_l
        if dip < dip_new:
            dip = dip_new

        if low == gcm[ig] and high == lcm[ih]:
            break
        low = gcm[ig]
        high = lcm[ih]

    return dip / (2.0 * n)


def dip_statistic(sample) -> float:
    """Hartigan's dip: max distance between the ECDF and the closest
    unimodal CDF.

    Lies in [1/(2n), 0.25] for samples with at least two distinct values;
    invariant under affine transforms of the sample.  Needs n >= 4.
    """
    x = np.sort(np.asarray(sample, dtype=float))
    if x.shape[0] < 4:
        raise DomainError(f"dip statistic needs n >= 4, got {x.shape[0]}")
    return float(_dip_sorted(x))


@dataclass
class DipResult:
    dip: float
    p_value: float
    bootstrap_count: int


def bootstrap_null_dips(n: int, b: int, seed) -> np.ndarray:
    """Sorted dips of ``b`` Uniform(0,1) samples of size ``n``.

    The null table depends only on (n, b, seed), so callers testing many
    samples of a common size can share it.
    """
    rng = as_generator(seed)
    u = np.sort(rng.random((b, n)), axis=1)
    dips = np.empty(b)
    for j in range(b):
        dips[j] = _dip_sorted(u[j])
    dips.sort()
    return dips


def dip_test(sample, b: int = 1000, seed=0) -> DipResult:
    """Bootstrap unimodality test: p = #{dip(U_j) >= dip(sample)} / b with
    U_j ~ Uniform(0,1)^n.  Deterministic given the seed."""
    if b < 100:
        raise DomainError(f"bootstrap count must be >= 100, got {b}")
    x = np.asarray(sample, dtype=float)
    d = dip_statistic(x)
    null = bootstrap_null_dips(x.shape[0], b, seed)
    p = 1.0 - np.searchsorted(null, d, side="left") / b
    return DipResult(dip=d, p_value=float(p), bootstrap_count=b)


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov


def ks_statistic(sample, cdf) -> float:
    """Two-sided KS distance between the sample ECDF and ``cdf``.

    D = max_i max(|i/n - F(x_i)|, |(i-1)/n - F(x_i)|).
    """
    x = np.sort(np.asarray(sample, dtype=float))
    n = x.shape[0]
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(np.max(np.maximum(np.abs(i / n - f), np.abs((i - 1) / n - f))))


def ks_critical_value(alpha: float, n: int) -> float:
    """Two-sided KS threshold at level ``alpha`` for sample size ``n``.

    c(alpha) solves the Kolmogorov tail series 2 sum_j (-1)^{j-1}
    exp(-2 j^2 c^2) = alpha; the denominator is Stephens' small-sample
    correction sqrt(n) + 0.12 + 0.11/sqrt(n).
    """
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must be in (0,1), got {alpha}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    c = float(kolmogi(alpha))
    return c / (np.sqrt(n) + 0.12 + 0.11 / np.sqrt(n))


# ---------------------------------------------------------------------------
# normal quantile utilities


def probit(q: float) -> float:
    """Inverse standard normal CDF, accurate to better than 1e-9."""
    q = float(q)
    if not 0.0 < q < 1.0:
        raise DomainError(f"probit argument must lie in (0,1), got {q}")
    return float(ndtri(q))


def normal_cdf(x) -> float | np.ndarray:
    """Standard normal CDF (inverse partner of ``probit``)."""
    out = ndtr(np.asarray(x, dtype=float))
    return float(out) if np.isscalar(x) or np.ndim(x) == 0 else out
