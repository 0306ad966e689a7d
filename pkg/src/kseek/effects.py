"""Factorial effects analysis of the simulation results.

The aggregate table becomes a linear model on the probit-transformed mean
cARI: sum-to-zero contrast columns for every factor, interaction groups up
to four factors (always including the method factor), Group Lasso over the
groups with the penalty weight sqrt(group size), EBIC to pick the penalty,
an OLS refit on the selected groups, and recovery of the redundant
per-level effects alpha = C beta with Wald confidence intervals.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, NoConvergence
from .metrics import response_transform

__all__ = [
    "FactorDesign",
    "LassoPath",
    "SelectionResult",
    "build_design",
    "group_lasso_fit",
    "lambda_max",
    "lambda_grid",
    "ebic",
    "select_and_refit",
    "recover_redundant",
    "absorb_into_supersets",
    "effect_report",
]

FACTOR_ORDER = ("method", "n", "p", "omega_bar", "k_star", "cov_type")


def sum_to_zero_contrast(levels: int) -> np.ndarray:
    """L x (L-1) sum-to-zero contrast: identity rows, last row all -1."""
    c = np.vstack([np.eye(levels - 1), -np.ones(levels - 1)])
    return c


@dataclass
class FactorDesign:
    """Contrast-coded design matrix with grouped columns.

    ``X`` holds only the penalized columns; the (unpenalized) intercept is
    handled by the fitting routines.  ``groups[j]`` names the factors whose
    row-wise Kronecker product makes up columns ``group_slices[j]``.
    """

    factors: list[tuple[str, list]]
    groups: list[tuple[str, ...]]
    X: np.ndarray
    group_slices: list[slice] = field(repr=False)
    contrasts: dict[str, np.ndarray] = field(repr=False)
    _eig_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def group_eig(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        """Eigendecomposition of X_j^T X_j, cached."""
        if j not in self._eig_cache:
            s = self.group_slices[j]
            self._eig_cache[j] = np.linalg.eigh(self.X[:, s].T @ self.X[:, s])
        return self._eig_cache[j]

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_columns(self) -> int:
        return self.X.shape[1]

    def group_size(self, j: int) -> int:
        s = self.group_slices[j]
        return s.stop - s.start

    def levels(self, name: str) -> list:
        for fname, lv in self.factors:
            if fname == name:
                return lv
        raise KeyError(name)

    def contrast_block(self, j: int) -> np.ndarray:
        """Kronecker contrast for group j, mapping its coefficient block to
        the redundant per-level-combination effects.

        Within the group, the first factor's level index varies fastest,
        matching the column construction.
        """
        block = np.ones((1, 1))
        for name in self.groups[j]:
            block = np.kron(self.contrasts[name], block)
        return block


def _column_block(
    rows: list[dict], group: tuple[str, ...], contrasts: dict[str, np.ndarray],
    level_index: dict[str, dict],
) -> np.ndarray:
    n = len(rows)
    cols = np.ones((n, 1))
    for name in group:
        c = contrasts[name]
        coded = np.vstack([c[level_index[name][row[name]]] for row in rows])
        # Row-wise Kronecker: the earlier factors' columns vary fastest.
        cols = coded[:, :, None] * cols[:, None, :]
        cols = cols.reshape(n, -1)
    return cols


def build_design(
    records, interaction_order: int = 4
) -> tuple[FactorDesign, np.ndarray]:
    """Design matrix and probit response from aggregate records.

    Groups: one main effect per factor plus every 2..interaction_order-way
    interaction containing the method factor.  Rows whose aggregate failed
    entirely (NaN mean cARI) are dropped; factors with a single observed
    level are dropped with a warning.
    """
    if not 2 <= interaction_order <= 4:
        raise DomainError("interaction_order must be between 2 and 4")
    rows = []
    for rec in records:
        row = (
            dict(rec)
            if isinstance(rec, dict)
            else {name: getattr(rec, name) for name in FACTOR_ORDER + ("mean_cari",)}
        )
        if np.isnan(row["mean_cari"]):
            continue
        rows.append(row)
    if not rows:
        raise ValueError("no usable records")

    factors: list[tuple[str, list]] = []
    for name in FACTOR_ORDER:
        levels = sorted({row[name] for row in rows})
        if len(levels) < 2:
            warnings.warn(f"factor {name!r} has one observed level; dropped")
            continue
        factors.append((name, levels))
    names = [f[0] for f in factors]
    contrasts = {name: sum_to_zero_contrast(len(lv)) for name, lv in factors}
    level_index = {name: {lv: i for i, lv in enumerate(lvs)} for name, lvs in factors}

    groups: list[tuple[str, ...]] = [(name,) for name in names]
    if "method" in names:
        others = [n for n in names if n != "method"]
        for order in range(2, interaction_order + 1):
            for combo in itertools.combinations(others, order - 1):
                groups.append(("method",) + combo)

    blocks = []
    slices = []
    start = 0
    for g in groups:
        b = _column_block(rows, g, contrasts, level_index)
        blocks.append(b)
        slices.append(slice(start, start + b.shape[1]))
        start += b.shape[1]
    X = np.hstack(blocks)
    y = np.array([response_transform(row["mean_cari"]) for row in rows])
    return FactorDesign(factors, groups, X, slices, contrasts), y


# ---------------------------------------------------------------------------
# Group Lasso by block coordinate descent


def _group_update(
    a: np.ndarray, eigvals: np.ndarray, V: np.ndarray, lam_j: float
) -> np.ndarray:
    """Exact minimizer of  1/2||r - X b||^2 + lam_j ||b||  for one group,
    given the eigendecomposition X^T X = V diag(eigvals) V^T and
    a = V^T X^T r."""
    norm_a = np.linalg.norm(a)
    if norm_a <= lam_j:
        return np.zeros_like(a)
    if lam_j == 0.0:
        return V @ (a / eigvals)

    def g(nu):
        w = a / (eigvals + nu)
        return nu * np.linalg.norm(w) - lam_j

    hi = max(norm_a, 1.0)
    while g(hi) < 0:
        hi *= 2.0
    lo = hi * 1e-16
    while g(lo) > 0:
        lo *= 1e-4
        if lo < 1e-300:
            break
    nu = brentq(g, lo, hi, xtol=1e-14, rtol=1e-14)
    return V @ (a / (eigvals + nu))


def lambda_max(design: FactorDesign, y: np.ndarray) -> float:
    """Smallest penalty at which every group is zero:
    max_j ||X_j^T r0|| / sqrt(D_j) with r0 the intercept-only residual."""
    r0 = y - y.mean()
    return max(
        float(np.linalg.norm(design.X[:, s].T @ r0)) / np.sqrt(design.group_size(j))
        for j, s in enumerate(design.group_slices)
    )


def lambda_grid(design: FactorDesign, y: np.ndarray, num: int = 100) -> np.ndarray:
    """Log-spaced descending penalty grid from lambda_max to 1e-3 of it."""
    lmax = lambda_max(design, y)
    if lmax == 0.0:  # constant response: any penalty gives the empty model
        return np.zeros(num)
    return np.geomspace(lmax, 1e-3 * lmax, num)


def group_lasso_fit(
    design: FactorDesign,
    y: np.ndarray,
    lam: float,
    beta0: np.ndarray | None = None,
    tol: float = 1e-7,
    max_sweeps: int = 100_000,
) -> tuple[float, np.ndarray]:
    """Minimize 1/2||y - b0 - X beta||^2 + lam * sum_j sqrt(D_j) ||beta_j||.

    Block coordinate descent; each block subproblem is solved exactly
    through the group's eigendecomposition, so zero groups satisfy the
    KKT bound ||X_j^T r|| <= lam sqrt(D_j) exactly.  Returns (intercept,
    beta).  Raises NoConvergence with the last iterate after
    ``max_sweeps``.
    """
    if lam < 0:
        raise DomainError("lambda must be >= 0")
    X = design.X
    beta = np.zeros(X.shape[1]) if beta0 is None else beta0.copy()
    fitted = X @ beta
    intercept = float(np.mean(y - fitted))
    for _ in range(max_sweeps):
        delta = 0.0
        for j, s in enumerate(design.group_slices):
            lam_j = lam * np.sqrt(design.group_size(j))
            old = beta[s].copy()
            partial = y - intercept - fitted + X[:, s] @ old
            vals, vecs = design.group_eig(j)
            a = vecs.T @ (X[:, s].T @ partial)
            new = _group_update(a, vals, vecs, lam_j)
            if not np.array_equal(new, old):
                fitted += X[:, s] @ (new - old)
                beta[s] = new
                delta = max(delta, float(np.max(np.abs(new - old))))
        new_intercept = float(np.mean(y - fitted))
        delta = max(delta, abs(new_intercept - intercept))
        intercept = new_intercept
        if delta < tol:
            return intercept, beta
    raise NoConvergence((intercept, beta))


def ebic(rss: float, N: int, m: int, D: int) -> float:
    """Extended BIC: N log(rss/N) + m log N + 2 log C(D, m)."""
    if rss <= 0:
        raise DomainError("rss must be positive")
    if not 0 <= m <= D:
        raise DomainError("m must lie in [0, D]")
    log_binom = (
        math.lgamma(D + 1) - math.lgamma(m + 1) - math.lgamma(D - m + 1)
    )
    return N * math.log(rss / N) + m * math.log(N) + 2.0 * log_binom


@dataclass
class LassoPath:
    lambdas: np.ndarray
    intercepts: np.ndarray
    betas: np.ndarray  # (num_lambdas, D)
    active: list[list[int]]
    rss: np.ndarray
    nonzeros: np.ndarray
    ebic: np.ndarray


def lasso_path(design: FactorDesign, y: np.ndarray, lambdas: np.ndarray) -> LassoPath:
    """Fit the whole descending penalty grid with warm starts."""
    lambdas = np.asarray(lambdas, dtype=float)
    if np.any(np.diff(lambdas) > 0):
        raise DomainError("lambda grid must be descending")
    N = design.n_rows
    D = design.n_columns
    betas = np.empty((lambdas.size, D))
    intercepts = np.empty(lambdas.size)
    rss = np.empty(lambdas.size)
    nonzeros = np.empty(lambdas.size, dtype=int)
    ebics = np.empty(lambdas.size)
    active: list[list[int]] = []
    beta = None
    for i, lam in enumerate(lambdas):
        intercept, beta = group_lasso_fit(design, y, lam, beta0=beta)
        betas[i] = beta
        intercepts[i] = intercept
        resid = y - intercept - design.X @ beta
        rss[i] = float(resid @ resid)
        act = [
            j
            for j, s in enumerate(design.group_slices)
            if np.any(betas[i, s] != 0.0)
        ]
        active.append(act)
        nonzeros[i] = int(np.count_nonzero(beta))
        ebics[i] = ebic(max(rss[i], 1e-300), N, int(nonzeros[i]), D)
    return LassoPath(lambdas, intercepts, betas, active, rss, nonzeros, ebics)


@dataclass
class SelectionResult:
    path: LassoPath
    chosen_index: int
    selected_groups: list[int]
    intercept: float
    beta: np.ndarray  # refit coefficients over all columns (zeros elsewhere)
    rss: float
    sigma2: float
    bic_selected: float
    bic_full: float
    coef_cov: np.ndarray  # covariance of (intercept, selected columns)
    selected_columns: np.ndarray

    @property
    def chosen_lambda(self) -> float:
        return float(self.path.lambdas[self.chosen_index])


def _gaussian_bic(rss: float, N: int, params: int) -> float:
    loglik = -0.5 * N * (math.log(2.0 * math.pi * max(rss, 1e-300) / N) + 1.0)
    return -2.0 * loglik + params * math.log(N)


def _ols(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    return coef


def select_and_refit(
    design: FactorDesign, y: np.ndarray, lambdas: np.ndarray | None = None
) -> SelectionResult:
    """Tune the penalty by EBIC along the path, then refit the selected
    groups by ordinary least squares."""
    if lambdas is None:
        lambdas = lambda_grid(design, y)
    if len(lambdas) < 20:
        raise DomainError("penalty grid needs at least 20 points")
    path = lasso_path(design, y, lambdas)
    chosen = int(np.argmin(path.ebic))
    selected = path.active[chosen]

    cols = np.concatenate(
        [np.arange(design.group_slices[j].start, design.group_slices[j].stop) for j in selected]
    ) if selected else np.array([], dtype=int)
    N = design.n_rows
    X_sel = np.hstack([np.ones((N, 1)), design.X[:, cols]])
    coef = _ols(X_sel, y)
    resid = y - X_sel @ coef
    rss = float(resid @ resid)
    params = X_sel.shape[1]
    dof = max(N - params, 1)
    sigma2 = rss / dof
    gram_inv = np.linalg.pinv(X_sel.T @ X_sel)

    full_cols = np.hstack([np.ones((N, 1)), design.X])
    coef_full = _ols(full_cols, y)
    rss_full = float(np.sum((y - full_cols @ coef_full) ** 2))

    beta = np.zeros(design.n_columns)
    beta[cols] = coef[1:]
    return SelectionResult(
        path=path,
        chosen_index=chosen,
        selected_groups=selected,
        intercept=float(coef[0]),
        beta=beta,
        rss=rss,
        sigma2=sigma2,
        bic_selected=_gaussian_bic(rss, N, params),
        bic_full=_gaussian_bic(max(rss_full, 1e-300), N, full_cols.shape[1]),
        coef_cov=sigma2 * gram_inv,
        selected_columns=cols,
    )


def recover_redundant(
    result: SelectionResult, design: FactorDesign
) -> dict[tuple[str, ...], dict]:
    """Per-level effects alpha = C beta for every selected group, with
    Wald variances diag(C cov(beta) C^T).

    Every marginal of every effect block sums to zero exactly (sum-to-zero
    contrasts).
    """
    out: dict[tuple[str, ...], dict] = {}
    for j in result.selected_groups:
        s = design.group_slices[j]
        C = design.contrast_block(j)
        alpha = C @ result.beta[s]
        # Positions of this group's columns inside the refit coefficient
        # vector (intercept first).
        pos = np.searchsorted(result.selected_columns, np.arange(s.start, s.stop)) + 1
        cov_block = result.coef_cov[np.ix_(pos, pos)]
        variances = np.maximum(np.einsum("ij,jk,ik->i", C, cov_block, C), 0.0)
        shape = tuple(len(design.levels(name)) for name in design.groups[j])
        out[design.groups[j]] = {
            "alpha": alpha,
            "variance": variances,
            "shape": shape,
        }
    return out


def absorb_into_supersets(
    result: SelectionResult, design: FactorDesign
) -> dict[tuple[str, ...], dict]:
    """Effects with every selected group folded into its smallest selected
    strict superset, when one exists.

    A presentation-only restructuring: the fitted values, RSS, and degrees
    of freedom are unchanged; per-level effects of an absorbed group are
    added (broadcast) onto the superset's levels and the Wald variances
    account for the covariance between the combined blocks.
    """
    selected = [design.groups[j] for j in result.selected_groups]
    host_of: dict[tuple[str, ...], tuple[str, ...]] = {}
    for g in selected:
        supersets = [
            h for h in selected if g != h and set(g) <= set(h)
        ]
        if supersets:
            host_of[g] = min(supersets, key=len)
    out: dict[tuple[str, ...], dict] = {}
    index_of = {design.groups[j]: j for j in result.selected_groups}
    for host in selected:
        if host in host_of:
            continue
        members = [host] + [g for g, h in host_of.items() if h == host]
        shape = tuple(len(design.levels(name)) for name in host)
        n_levels = int(np.prod(shape))
        # combined linear map from the refit coefficients to the per-level
        # effects of the host group
        combined = np.zeros((n_levels, result.coef_cov.shape[0]))
        alpha = np.zeros(n_levels)
        grids = np.meshgrid(*[np.arange(L) for L in shape], indexing="ij")
        flat_idx = {name: grids[i].ravel(order="F") for i, name in enumerate(host)}
        for g in members:
            j = index_of[g]
            s = design.group_slices[j]
            C = design.contrast_block(j)
            g_shape = tuple(len(design.levels(name)) for name in g)
            g_flat = np.ravel_multi_index(
                [flat_idx[name] for name in g], g_shape, order="F"
            )
            pos = np.searchsorted(result.selected_columns, np.arange(s.start, s.stop)) + 1
            combined[:, pos] += C[g_flat]
            alpha += (C @ result.beta[s])[g_flat]
        variances = np.maximum(
            np.einsum("ij,jk,ik->i", combined, result.coef_cov, combined), 0.0
        )
        out[host] = {"alpha": alpha, "variance": variances, "shape": shape}
    return out


def effect_report(
    effects: dict[tuple[str, ...], dict], design: FactorDesign, z: float = 1.959964
) -> dict[tuple[str, ...], list[dict]]:
    """Plot-ready rows per group: level labels, effect, stderr, CI bounds,
    and whether the CI excludes zero."""
    report: dict[tuple[str, ...], list[dict]] = {}
    for group, block in effects.items():
        rows = []
        shape = block["shape"]
        for flat, (a, v) in enumerate(zip(block["alpha"], block["variance"])):
            idx = np.unravel_index(flat, shape, order="F")
            se = math.sqrt(v)
            row = {
                name: design.levels(name)[i] for name, i in zip(group, idx)
            }
            row.update(
                {
                    "effect": float(a),
                    "stderr": se,
                    "ci_low": float(a - z * se),
                    "ci_high": float(a + z * se),
                    "significant": bool(a - z * se > 0 or a + z * se < 0),
                }
            )
            rows.append(row)
        report[group] = rows
    return report
