"""Outlier identification procedures for contingency tables.

Four detectors are implemented on top of the fitting and pattern
machinery:

``ol1``
    One-step identifier: fit the model once on the complete table
    (robust LAD fit by default) and flag every count that falls in the
    alpha-outlier region of its fitted Poisson mean.
``omp``
    Fit on every pattern of a catalog, flag all cells against the
    pattern's fit, and report the flag set(s) of the pattern(s) with the
    fewest outliers.  Ties produce multiple solutions, all reported.
``ompc`` / ``ompcl1``
    Counting variant: for each pattern flag only the cells outside it;
    a cell is an outlier when it is flagged in more than ``g`` (default
    one half) of the usable patterns excluding it.  ``ompcl1`` swaps the
    per-pattern ML fit for the LAD fit.
``oltcs``
    Draw random strictly minimal (elemental) subsets, score each ML fit
    by the trimmed Pearson chi-squared criterion, and flag all cells
    against the best subset's fit.  Exact criterion ties are broken by
    the untrimmed Pearson statistic.

Patterns whose fit does not converge are skipped and removed from both
the vote numerators and denominators; the number skipped is reported.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .estimate import (MEAN_FLOOR, TrimSpec, _counts_vector, _irls_batch,
                       _lad_linprog, fit_l1, fit_ml, optimal_h,
                       pearson_components)
from .model import DesignMatrix
from .patterns import PatternCatalog, sample_strictly_minimal
from .region import inlier_mean_bounds_batch, outlier_flags

__all__ = [
    "DetectionReport",
    "OmpSolution",
    "detect",
    "detect_ol1",
    "detect_omp",
    "detect_ompc",
    "detect_oltcs",
]

_ETA_CLIP_FULL = 700.0
_LAD_ENUM_CAP = 256  # max basic solutions per pattern before falling back to an LP


@dataclass(frozen=True, eq=False)
class OmpSolution:
    """One minimal-outlier-count solution: its flags, how many patterns
    produced it, and the fitted means of the first such pattern."""

    flags: np.ndarray
    n_patterns: int
    fitted_means: np.ndarray
    pattern: tuple[int, ...]


@dataclass(eq=False)
class DetectionReport:
    """Result of a detection run; fields not meaningful for a method are None."""

    method: str
    alpha: float
    flags: np.ndarray
    fitted_means: np.ndarray | None = None
    solutions: list[OmpSolution] | None = None
    numb_out_hist: dict[int, int] | None = None
    detect_counts: np.ndarray | None = None
    exclusion_counts: np.ndarray | None = None
    g: float | None = None
    h: int | None = None
    criterion: float | None = None
    best_pattern: tuple[int, ...] | None = None
    estimator: str | None = None
    n_patterns_used: int = 0
    skipped_patterns: int = 0
    seed: int | None = None

    def outlier_cells(self) -> list[int]:
        return np.where(self.flags)[0].tolist()

    def to_dict(self) -> dict:
        def clean(v):
            if isinstance(v, np.ndarray):
                return v.tolist()
            if isinstance(v, (np.integer, np.floating, np.bool_)):
                return v.item()
            return v

        d = {
            "method": self.method,
            "alpha": self.alpha,
            "flags": self.flags.astype(bool).tolist(),
            "outlier_cells": self.outlier_cells(),
            "estimator": self.estimator,
            "n_patterns_used": self.n_patterns_used,
            "skipped_patterns": self.skipped_patterns,
            "seed": self.seed,
        }
        for key in ("fitted_means", "detect_counts", "exclusion_counts",
                    "g", "h", "criterion", "best_pattern"):
            v = getattr(self, key)
            if v is not None:
                d[key] = clean(v)
        if self.numb_out_hist is not None:
            d["numb_out_hist"] = {str(k): v for k, v in sorted(self.numb_out_hist.items())}
        if self.solutions is not None:
            d["solutions"] = [
                {"outlier_cells": np.where(s.flags)[0].tolist(),
                 "n_patterns": s.n_patterns,
                 "pattern": list(s.pattern),
                 "fitted_means": s.fitted_means.tolist()}
                for s in self.solutions
            ]
        return d


# ---------------------------------------------------------------------------
# batched fitting of many patterns on one table


def _batch_means_ml(design: DesignMatrix, y: np.ndarray, patterns: np.ndarray):
    """ML means for every pattern: (W, N) array plus convergence mask."""
    A = design.entries.T[patterns]  # (W, k, p)
    beta, conv, _ = _irls_batch(A, y[patterns], tol=1e-8, max_iter=100)
    eta = np.clip(beta @ design.entries, -_ETA_CLIP_FULL, _ETA_CLIP_FULL)
    return np.maximum(np.exp(eta), MEAN_FLOOR), conv


def _batch_means_lad(design: DesignMatrix, y: np.ndarray, patterns: np.ndarray,
                     zero_guard: float = 0.5, chunk: int = 512):
    """LAD means for every pattern.

    A LAD optimum is attained at a basic solution interpolating p cells,
    so for small patterns the exact optimum is found by enumerating all
    non-singular p-subsets; larger patterns fall back to one LP each.
    """
    W, k = patterns.shape
    p = design.p
    z_all = np.log(np.maximum(y, zero_guard))
    n_basic = math.comb(k, p)
    means = np.empty((W, design.n_cells))
    ok = np.ones(W, dtype=bool)
    if n_basic <= _LAD_ENUM_CAP:
        subs = np.array(list(itertools.combinations(range(k), p)))  # (S, p)
        for lo in range(0, W, chunk):
            sl = slice(lo, min(lo + chunk, W))
            A = design.entries.T[patterns[sl]]        # (C, k, p)
            zc = z_all[patterns[sl]]                  # (C, k)
            M = A[:, subs, :]                         # (C, S, p, p)
            zz = zc[:, subs]                          # (C, S, p)
            dets = np.abs(np.linalg.det(M))
            sing = dets < 1e-9
            M = np.where(sing[..., None, None], np.eye(p), M)
            betas = np.linalg.solve(M, zz[..., None])[..., 0]       # (C, S, p)
            resid = np.abs(zc[:, None, :] - np.einsum("ckp,csp->csk", A, betas))
            obj = resid.sum(axis=2)
            obj[sing] = np.inf
            pick = obj.argmin(axis=1)
            best = betas[np.arange(betas.shape[0]), pick]           # (C, p)
            eta = np.clip(best @ design.entries, -_ETA_CLIP_FULL, _ETA_CLIP_FULL)
            means[sl] = np.maximum(np.exp(eta), MEAN_FLOOR)
    else:
        for w in range(W):
            A = design.entries.T[patterns[w]]
            try:
                beta, _, _ = _lad_linprog(A, z_all[patterns[w]])
            except RuntimeError:
                ok[w] = False
                means[w] = 1.0
                continue
            eta = np.clip(design.entries.T @ beta, -_ETA_CLIP_FULL, _ETA_CLIP_FULL)
            means[w] = np.maximum(np.exp(eta), MEAN_FLOOR)
    return means, ok


def _batch_means(design, y, patterns, estimator, zero_guard=0.5):
    if estimator == "ml":
        return _batch_means_ml(design, y, patterns)
    if estimator == "l1":
        return _batch_means_lad(design, y, patterns, zero_guard=zero_guard)
    raise ValueError(f"unknown estimator {estimator!r}")


_BOUNDS_CACHE: dict[tuple[float, int], tuple[float, float]] = {}


def _flags_against_means(y: np.ndarray, means: np.ndarray, alpha: float) -> np.ndarray:
    """Outlier flags of the observed counts against a (W, N) stack of means.

    For each cell the set of means keeping its count an inlier is a single
    interval, so the W tests per cell collapse to two comparisons against
    critical means, bisected once per distinct count and cached.
    """
    missing = sorted({int(v) for v in y} - {k for a, k in _BOUNDS_CACHE if a == alpha})
    if missing:
        los, his = inlier_mean_bounds_batch(np.array(missing, dtype=float), alpha)
        for v, l, h in zip(missing, los, his):
            _BOUNDS_CACHE[(alpha, v)] = (float(l), float(h))
    lo = np.array([_BOUNDS_CACHE[(alpha, int(v))][0] for v in y])
    hi = np.array([_BOUNDS_CACHE[(alpha, int(v))][1] for v in y])
    return (means < lo) | (means > hi)


# ---------------------------------------------------------------------------
# detectors


def detect_ol1(table, design: DesignMatrix, alpha: float,
               estimator: str = "l1") -> DetectionReport:
    """One-step identifier: single full-table fit, then region tests."""
    y = _counts_vector(table)
    fit = fit_l1(design, y) if estimator == "l1" else fit_ml(design, y)
    if not fit.converged:
        raise RuntimeError("full-table fit failed; no detection possible")
    flags = outlier_flags(y, fit.fitted_means, alpha)
    return DetectionReport(method="ol1", alpha=alpha, flags=flags,
                           fitted_means=fit.fitted_means, estimator=estimator,
                           n_patterns_used=1)


def detect_omp(table, design: DesignMatrix, alpha: float,
               catalog: PatternCatalog) -> DetectionReport:
    """Minimal-pattern detector reporting the fewest-outlier solutions.

    Every cell (pattern cells included) is tested against each pattern
    fit; all distinct flag sets attaining the minimal outlier count are
    returned, with the number of patterns producing each.
    """
    y = _counts_vector(table)
    if catalog.n_patterns == 0:
        raise ValueError("empty pattern catalog")
    means, conv = _batch_means(design, y, catalog.patterns, "ml")
    if not conv.any():
        raise RuntimeError("all pattern fits failed")
    flags = _flags_against_means(y, means[conv], alpha)
    numb_out = flags.sum(axis=1)
    hist: dict[int, int] = {}
    for v, c in zip(*np.unique(numb_out, return_counts=True)):
        hist[int(v)] = int(c)
    best = int(numb_out.min())
    used = np.where(conv)[0]
    solutions = []
    seen: dict[bytes, int] = {}
    for row in np.where(numb_out == best)[0]:
        key = flags[row].tobytes()
        if key in seen:
            solutions[seen[key]] = OmpSolution(
                flags=solutions[seen[key]].flags,
                n_patterns=solutions[seen[key]].n_patterns + 1,
                fitted_means=solutions[seen[key]].fitted_means,
                pattern=solutions[seen[key]].pattern)
        else:
            seen[key] = len(solutions)
            w = used[row]
            solutions.append(OmpSolution(flags=flags[row], n_patterns=1,
                                         fitted_means=means[w],
                                         pattern=tuple(catalog.patterns[w].tolist())))
    return DetectionReport(method="omp", alpha=alpha, flags=solutions[0].flags,
                           solutions=solutions, numb_out_hist=hist,
                           fitted_means=solutions[0].fitted_means, estimator="ml",
                           n_patterns_used=int(conv.sum()),
                           skipped_patterns=int((~conv).sum()), seed=catalog.seed)


def detect_ompc(table, design: DesignMatrix, alpha: float, catalog: PatternCatalog,
                estimator: str = "ml", g: float = 0.5) -> DetectionReport:
    """Counting detector: flag cells detected in more than ``g`` of the
    usable patterns excluding them (strict inequality)."""
    y = _counts_vector(table)
    if catalog.n_patterns == 0:
        raise ValueError("empty pattern catalog")
    means, conv = _batch_means(design, y, catalog.patterns, estimator)
    if not conv.any():
        raise RuntimeError("all pattern fits failed")
    flags_all = _flags_against_means(y, means[conv], alpha)
    member = catalog.membership()[conv]
    draws = catalog.draw_counts[conv].astype(np.int64)
    outside = ~member
    detect_counts = ((flags_all & outside) * draws[:, None]).sum(axis=0)
    r = (outside * draws[:, None]).sum(axis=0)
    flags = detect_counts > g * r
    return DetectionReport(method="ompc" if estimator == "ml" else "ompcl1",
                           alpha=alpha, flags=flags, detect_counts=detect_counts,
                           exclusion_counts=r, g=g, estimator=estimator,
                           n_patterns_used=int(conv.sum()),
                           skipped_patterns=int((~conv).sum()), seed=catalog.seed)


def detect_oltcs(table, design: DesignMatrix, alpha: float, n_subsets: int = 1000,
                 variant: str = "ltcs", seed=None, shape=None,
                 sampler: str = "uniform", pattern_restricted: bool = False,
                 return_subsets: bool = False) -> DetectionReport:
    """Trimmed chi-squared detector over random elemental subsets.

    Draws ``n_subsets`` strictly minimal patterns, fits each by ML, and
    keeps the fit whose ordered Pearson components minimize the trimmed
    criterion with ``h = floor((N + p + 2)/2)``; all cells are then
    tested against that fit.  ``pattern_restricted=True`` restricts the
    criterion to each pattern's own cells (not the default: with exact
    fits those components are all zero, which makes the criterion blind).
    Criterion ties are broken by the untrimmed Pearson statistic.
    """
    y = _counts_vector(table)
    rng = np.random.default_rng(seed)
    h = optimal_h(design.n_cells, design.p)
    trim = TrimSpec(h=h, variant=variant)
    pats = np.array([sample_strictly_minimal(design, rng, shape=shape, method=sampler)
                     for _ in range(int(n_subsets))], dtype=np.int64)
    means, conv = _batch_means_ml(design, y, pats)
    if not conv.any():
        raise RuntimeError("all elemental-subset fits failed")
    means_ok = means[conv]
    pats_ok = pats[conv]
    comp = (y[None, :] - means_ok) ** 2 / means_ok
    if pattern_restricted:
        # own-cell components only; exact fits make these vanish, which is
        # why this variant is not the default
        crit = np.empty(means_ok.shape[0])
        for w in range(means_ok.shape[0]):
            cw = np.sort(comp[w, pats_ok[w]])
            eff = TrimSpec(h=min(h, cw.size), variant=variant)
            crit[w] = eff.weights(cw.size) @ cw
    else:
        csort = np.sort(comp, axis=1)
        crit = csort @ trim.weights(design.n_cells)
    best = crit.min()
    tied = np.where(crit <= best + 1e-9 * (1.0 + abs(best)))[0]
    full = comp[tied].sum(axis=1)
    w_star = int(tied[full.argmin()])
    flags = outlier_flags(y, means_ok[w_star], alpha)
    return DetectionReport(method="oltcs" if variant == "ltcs" else "olmcs",
                           alpha=alpha, flags=flags, fitted_means=means_ok[w_star],
                           h=h, criterion=float(crit[w_star]),
                           best_pattern=tuple(pats_ok[w_star].tolist()),
                           estimator="ml", n_patterns_used=int(conv.sum()),
                           skipped_patterns=int((~conv).sum()),
                           seed=seed if isinstance(seed, int) else None)


def detect(table, design: DesignMatrix, method: str, alpha: float,
           catalog: PatternCatalog | None = None, **kwargs) -> DetectionReport:
    """Dispatch by method name: ol1, omp, ompc, ompcl1, oltcs, olmcs."""
    method = method.lower()
    if method == "ol1":
        return detect_ol1(table, design, alpha, **kwargs)
    if method in ("omp", "ompc", "ompcl1"):
        if catalog is None:
            raise ValueError(f"method {method!r} needs a pattern catalog")
        if method == "omp":
            return detect_omp(table, design, alpha, catalog)
        est = "l1" if method == "ompcl1" else "ml"
        return detect_ompc(table, design, alpha, catalog, estimator=est, **kwargs)
    if method in ("oltcs", "olmcs"):
        variant = "lmcs" if method == "olmcs" else "ltcs"
        return detect_oltcs(table, design, alpha, variant=variant, **kwargs)
    raise ValueError(f"unknown detection method {method!r}")
