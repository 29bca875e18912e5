"""Fitting loglinear Poisson models on arbitrary cell subsets.

Two estimators are provided: maximum likelihood via Newton scoring
(iteratively reweighted least squares) and the least-absolute-deviations
fit of the log counts, a robust alternative.  Both fit on any full-rank
subset of cells and report fitted means for *all* cells, which is what
the pattern-based outlier detectors need.

The LAD objective is piecewise linear and its minimizer is often not
unique on the small designs used here; ``fit_l1`` therefore refines the
solution by maximizing the Poisson log-likelihood over the optimal face,
which is a strictly concave problem with a unique answer.  This makes
the estimator deterministic and independent of LP solver internals; the
refinement can be switched off to get a plain optimal vertex.

Also here: the trimmed Pearson chi-squared criterion used to score
elemental subsets, and the trimming count with optimal breakdown
behavior for it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import LinearConstraint, linprog, minimize
from scipy.special import gammaln

from .model import DesignMatrix

__all__ = [
    "FitResult",
    "TrimSpec",
    "fit_ml",
    "fit_l1",
    "optimal_h",
    "pearson_components",
    "trimmed_chisq",
]

MEAN_FLOOR = 1e-10  # fitted means are capped below this to keep Pearson terms finite
_ETA_CLIP = 30.0
_RIDGE = 1e-12


def _counts_vector(counts) -> np.ndarray:
    if hasattr(counts, "counts"):
        counts = counts.counts
    return np.asarray(counts, dtype=float)


@dataclass(frozen=True, eq=False)
class FitResult:
    """Outcome of a model fit on a cell subset.

    ``fitted_means`` covers every cell of the table, including cells
    outside the fitted subset.  ``degenerate`` marks fits whose means hit
    the lower cap (saturated subsets containing zero counts).
    """

    beta: np.ndarray
    fitted_means: np.ndarray
    converged: bool
    iterations: int
    objective: float
    method: str
    cells: tuple[int, ...] = field(default=())
    degenerate: bool = False


def _fitted_means(design: DesignMatrix, beta: np.ndarray) -> tuple[np.ndarray, bool]:
    eta = design.entries.T @ beta
    mu = np.exp(np.clip(eta, -700.0, 700.0))
    degenerate = bool((mu < MEAN_FLOOR).any())
    return np.maximum(mu, MEAN_FLOOR), degenerate


def _irls_batch(A, y, tol: float, max_iter: int):
    """Newton scoring on a (W, k, p) stack of subset designs.

    Returns (beta (W,p), converged (W,), iterations).  Rows that fail to
    move below ``tol`` within ``max_iter`` are reported unconverged.
    """
    W, k, p = A.shape
    beta = np.zeros((W, p))
    beta[:, 0] = np.log(y.mean(axis=1) + 0.5)
    alive = np.ones(W, dtype=bool)
    converged = np.zeros(W, dtype=bool)
    it = 0
    eye = np.eye(p)
    while alive.any() and it < max_iter:
        it += 1
        Aw, yw = A[alive], y[alive]
        eta = np.clip(np.einsum("wkp,wp->wk", Aw, beta[alive]), -_ETA_CLIP, _ETA_CLIP)
        mu = np.exp(eta)
        grad = np.einsum("wkp,wk->wp", Aw, yw - mu)
        hess = np.einsum("wkp,wk,wkq->wpq", Aw, mu, Aw) + _RIDGE * eye
        try:
            step = np.linalg.solve(hess, grad[..., None])[..., 0]
        except np.linalg.LinAlgError:
            step = np.array([np.linalg.lstsq(h, g, rcond=None)[0] for h, g in zip(hess, grad)])
        beta[alive] = beta[alive] + step
        done = np.abs(step).max(axis=1) < tol
        idx = np.where(alive)[0]
        converged[idx[done]] = True
        alive[idx[done]] = False
    return beta, converged, it


def fit_ml(design: DesignMatrix, counts, cells=None, *, tol: float = 1e-8,
           max_iter: int = 100) -> FitResult:
    """Maximum likelihood fit of the model on a subset of cells.

    Maximizes ``sum_j (y_j x_j' b - exp(x_j' b))`` over the given cells by
    Newton scoring, starting from ``(log(mean(y) + 0.5), 0, ..., 0)`` and
    stopping when the largest coefficient step falls below ``tol``.
    Non-convergence is reported through ``converged``, not raised.
    """
    y = _counts_vector(counts)
    cells = tuple(range(design.n_cells)) if cells is None else tuple(int(c) for c in cells)
    A = design.entries.T[list(cells)][None, :, :]
    beta, conv, it = _irls_batch(A, y[list(cells)][None, :], tol, max_iter)
    beta = beta[0]
    mu, degen = _fitted_means(design, beta)
    yc = y[list(cells)]
    eta_c = design.entries[:, list(cells)].T @ beta
    loglik = float(np.sum(yc * eta_c - np.exp(np.clip(eta_c, -700, 700)) - gammaln(yc + 1.0)))
    return FitResult(beta=beta, fitted_means=mu, converged=bool(conv[0]), iterations=it,
                     objective=loglik, method="ml", cells=cells, degenerate=degen)


def _lad_response(y: np.ndarray, zero_guard) -> tuple[np.ndarray, np.ndarray]:
    """Log response and row mask for the LAD fit of log counts."""
    if zero_guard is None:
        keep = y > 0
        return np.log(np.where(keep, y, 1.0)), keep
    return np.log(np.maximum(y, float(zero_guard))), np.ones(y.size, dtype=bool)


def _lad_linprog(A: np.ndarray, z: np.ndarray):
    """Plain LAD via the linear-programming split-residual form."""
    n, p = A.shape
    cost = np.concatenate([np.zeros(p), np.ones(2 * n)])
    eq = np.hstack([A, np.eye(n), -np.eye(n)])
    res = linprog(cost, A_eq=eq, b_eq=z,
                  bounds=[(None, None)] * p + [(0, None)] * (2 * n), method="highs")
    if not res.success:
        raise RuntimeError(f"LAD linear program failed: {res.message}")
    return res.x[:p], float(res.fun), int(res.nit)


def _refine_on_face(A, yobs, z, beta0, opt, face_tol=1e-9):
    """Maximize the Poisson log-likelihood subject to staying LAD-optimal.

    The LAD optimal set is a polytope; the likelihood is strictly concave,
    so the refined solution is unique.  Solved in the variables (beta, u)
    with u bounding |z - A beta| row-wise, all constraints linear.
    """
    n, p = A.shape
    k = p + n

    def negll(v):
        eta = np.clip(A @ v[:p], -_ETA_CLIP, _ETA_CLIP)
        return -(yobs @ eta - np.exp(eta).sum())

    def grad(v):
        eta = np.clip(A @ v[:p], -_ETA_CLIP, _ETA_CLIP)
        g = np.zeros(k)
        g[:p] = -(A.T @ (yobs - np.exp(eta)))
        return g

    def hess(v):
        eta = np.clip(A @ v[:p], -_ETA_CLIP, _ETA_CLIP)
        h = np.zeros((k, k))
        h[:p, :p] = (A * np.exp(eta)[:, None]).T @ A
        return h

    upper = np.hstack([A, np.eye(n)])
    lower = np.hstack([-A, np.eye(n)])
    budget = np.zeros((1, k))
    budget[0, p:] = 1.0
    cons = [LinearConstraint(upper, z, np.inf),
            LinearConstraint(lower, -z, np.inf),
            LinearConstraint(budget, -np.inf, opt + face_tol)]
    v0 = np.concatenate([beta0, np.abs(z - A @ beta0) + 1e-12])
    res = minimize(negll, v0, jac=grad, hess=hess, constraints=cons,
                   method="trust-constr",
                   options={"maxiter": 2000, "gtol": 1e-12, "xtol": 1e-14})
    return res.x[:p], int(res.nit)


def fit_l1(design: DesignMatrix, counts, cells=None, *, refine: bool = True,
           zero_guard: float | None = 0.5) -> FitResult:
    """Least-absolute-deviations fit of the log counts on a cell subset.

    Minimizes ``sum_j |log y*_j - x_j' b|`` where ``y* = max(y, zero_guard)``
    guards against zero counts (``zero_guard=None`` drops zero cells from
    the sum instead).  Solved exactly as a linear program; by default the
    returned coefficients are the unique likelihood-best point of the LAD
    optimal set, see the module docstring.
    """
    y = _counts_vector(counts)
    cells = tuple(range(design.n_cells)) if cells is None else tuple(int(c) for c in cells)
    A_full = design.entries.T[list(cells)]
    y_sub = y[list(cells)]
    z, keep = _lad_response(y_sub, zero_guard)
    A, z, yk = A_full[keep], z[keep], y_sub[keep]
    if A.shape[0] < design.p:
        raise ValueError("fewer usable cells than parameters in L1 fit")
    beta, opt, nit = _lad_linprog(A, z)
    iterations = nit
    if refine:
        refined, extra = _refine_on_face(A, yk, z, beta, opt)
        obj = float(np.abs(z - A @ refined).sum())
        if obj <= opt + 1e-7:
            beta, iterations = refined, nit + extra
    mu, degen = _fitted_means(design, beta)
    objective = float(np.abs(z - A @ beta).sum())
    return FitResult(beta=beta, fitted_means=mu, converged=True, iterations=iterations,
                     objective=objective, method="l1", cells=cells, degenerate=degen)


def optimal_h(n_cells: int, rank: int) -> int:
    """Trimming count giving the trimmed chi-squared estimator its best
    breakdown behavior: ``floor((N + G + 2) / 2)`` for ``N`` cells and
    design rank ``G`` (the upper end of the optimal interval)."""
    if n_cells < rank:
        raise ValueError("need at least as many cells as parameters")
    return (n_cells + rank + 2) // 2


@dataclass(frozen=True)
class TrimSpec:
    """Trimming rule: keep the ``h`` smallest ordered Pearson components
    (``ltcs``), or the ``h``-th smallest alone (``lmcs``)."""

    h: int
    variant: str = "ltcs"

    def __post_init__(self):
        if self.variant not in ("ltcs", "lmcs"):
            raise ValueError(f"unknown trimming variant {self.variant!r}")
        if self.h < 1:
            raise ValueError("trimming count must be positive")

    def weights(self, n: int) -> np.ndarray:
        """Weight c_j applied to the j-th ordered component, j = 1..n."""
        if self.h > n:
            raise ValueError(f"trimming count {self.h} exceeds {n} cells")
        c = np.zeros(n)
        if self.variant == "ltcs":
            c[: self.h] = 1.0
        else:
            c[self.h - 1] = 1.0
        return c


def pearson_components(counts, means) -> np.ndarray:
    """Per-cell Pearson terms ``(y - m)^2 / m``."""
    y = _counts_vector(counts)
    m = np.asarray(means, dtype=float)
    if (m == 0).any():
        raise ValueError("Pearson components need positive fitted means")
    return (y - m) ** 2 / m


def trimmed_chisq(fit: FitResult | np.ndarray, counts, trim: TrimSpec, cells=None) -> float:
    """Trimmed Pearson chi-squared of a fit.

    Components are computed for all cells (or for ``cells`` when given,
    the subset-restricted variant), sorted ascending, and combined with
    the trimming weights: the sum of the ``h`` smallest for ``ltcs``, the
    ``h``-th smallest alone for ``lmcs``.
    """
    means = fit.fitted_means if isinstance(fit, FitResult) else np.asarray(fit, float)
    comp = pearson_components(counts, means)
    if cells is not None:
        comp = comp[list(cells)]
    comp = np.sort(comp)
    return float(trim.weights(comp.size) @ comp)
