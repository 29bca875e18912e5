"""Exact Poisson alpha-outlier regions.

A count ``y`` is an alpha-outlier for mean ``m`` when its probability falls
strictly below the threshold ``K(alpha)``, the largest value such that the
total mass of all support points with probability <= K stays within
``alpha``.  Because the Poisson pmf is unimodal, the complementary inlier
set is a contiguous interval ``[lo, hi]`` around the mode; points whose pmf
ties the threshold exactly are inliers (the comparison is strict).

The pmf is evaluated in log space with the Catherine Loader
saddle-point expansion, accurate to ~1e-14 relative even for counts in
the millions where the naive ``y*log(m) - m - lgamma(y+1)`` loses digits
to cancellation.  Tail masses come from :mod:`scipy.stats`, whose
Poisson cdf/sf are accurate in relative terms deep into the tails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import poisson as _poisson

__all__ = [
    "poisson_log_pmf",
    "poisson_pmf",
    "OutlierRegion",
    "outlier_region",
    "is_outlier",
    "outlier_flags",
    "inlier_mean_bounds",
    "inlier_mean_bounds_batch",
]

_HALF_LN_2PI = 0.5 * math.log(2.0 * math.pi)

# stirlerr(n) = log n! - log( sqrt(2*pi*n) * (n/e)^n ), exact table for n <= 15
_STIRLERR_TABLE = np.array(
    [math.lgamma(n + 1.0) - (0.5 * math.log(2.0 * math.pi * n) + n * math.log(n) - n) if n else 0.0
     for n in range(16)]
)
_S0, _S1, _S2, _S3, _S4 = (
    1.0 / 12.0,
    1.0 / 360.0,
    1.0 / 1260.0,
    1.0 / 1680.0,
    1.0 / 1188.0,
)


def _stirlerr(n: np.ndarray) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    small = n <= 15
    idx = np.where(small, n, 1.0).astype(int)
    tab = _STIRLERR_TABLE[idx]
    nn = np.where(small, 16.0, n) ** 2
    series = (_S0 - (_S1 - (_S2 - (_S3 - _S4 / nn) / nn) / nn) / nn) / np.where(small, 16.0, n)
    return np.where(small, tab, series)


def _bd0(x: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Deviance term x*log(x/m) + m - x, stable near x == m."""
    x = np.asarray(x, dtype=float)
    m = np.asarray(m, dtype=float)
    near = np.abs(x - m) < 0.1 * (x + m)
    # series branch
    xs = np.where(near, x, 1.0)
    ms = np.where(near, m, 1.0)
    v = (xs - ms) / (xs + ms)
    s = (xs - ms) * v
    ej = 2.0 * xs * v
    v2 = v * v
    out_near = s.copy()
    for j in range(1, 1000):
        ej = ej * v2
        term = ej / (2 * j + 1)
        out_near = out_near + term
        if np.all(np.abs(term) <= 1e-18 * (np.abs(out_near) + 1e-300)):
            break
    with np.errstate(divide="ignore", invalid="ignore"):
        out_far = x * np.log(x / m) + m - x
    return np.where(near, out_near, out_far)


def poisson_log_pmf(y, mean):
    """Log of the Poisson pmf, vectorized, ~1e-14 relative accuracy."""
    y = np.asarray(y, dtype=float)
    m = np.asarray(mean, dtype=float)
    if np.any(m <= 0):
        raise ValueError("Poisson mean must be positive")
    y, m = np.broadcast_arrays(y, m)
    neg = (y < 0) | (y != np.floor(y))
    zero = (y == 0) & ~neg
    ys = np.where(zero | neg, 1.0, y)
    lp = -_stirlerr(ys) - _bd0(ys, m) - 0.5 * np.log(2.0 * math.pi * ys)
    lp = np.where(zero, -m, lp)
    lp = np.where(neg, -np.inf, lp)
    return lp if lp.ndim else float(lp)


def poisson_pmf(y, mean):
    """Poisson pmf ``exp(-m) m^y / y!``, computed in log space."""
    return np.exp(poisson_log_pmf(y, mean))


@dataclass(frozen=True)
class OutlierRegion:
    """Inlier interval ``[lo, hi]`` of ``out(alpha, Poi(mean))``.

    ``threshold`` is the pmf cutoff K(alpha) actually used; membership
    should be decided from ``lo``/``hi``, the threshold is diagnostic.
    """

    mean: float
    alpha: float
    lo: int
    hi: int
    threshold: float

    def __contains__(self, y: int) -> bool:  # inlier test
        return self.lo <= y <= self.hi


def _tail_mass(lo: int, hi: int, m: float) -> float:
    """P(Y < lo) + P(Y > hi)."""
    left = _poisson.cdf(lo - 1, m) if lo > 0 else 0.0
    return float(left + _poisson.sf(hi, m))


def outlier_region(mean: float, alpha: float) -> OutlierRegion:
    """Compute the exact alpha-outlier region of a Poisson distribution.

    Grows the inlier interval outward from the mode in order of
    decreasing pmf (ties extend left first) until the outside mass is
    within ``alpha``; the pmf of the last point admitted is the
    threshold K(alpha), and boundary points tying it exactly are pulled
    into the inlier set, matching the strict-inequality membership rule.
    """
    m = float(mean)
    alpha = float(alpha)
    if m <= 0:
        raise ValueError("Poisson mean must be positive")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    mode = int(math.floor(m))
    lo = hi = mode
    log_k = poisson_log_pmf(mode, m)
    while _tail_mass(lo, hi, m) > alpha:
        lp_left = poisson_log_pmf(lo - 1, m) if lo > 0 else -math.inf
        lp_right = poisson_log_pmf(hi + 1, m)
        if lp_left >= lp_right:
            lo -= 1
            log_k = lp_left
        else:
            hi += 1
            log_k = lp_right
    # strict "< K": points whose pmf equals K(alpha) are inliers
    while lo > 0 and poisson_log_pmf(lo - 1, m) >= log_k:
        lo -= 1
    while poisson_log_pmf(hi + 1, m) >= log_k:
        hi += 1
    return OutlierRegion(mean=m, alpha=alpha, lo=lo, hi=hi, threshold=float(np.exp(log_k)))


def is_outlier(y: int, region: OutlierRegion) -> bool:
    """True iff ``y`` lies outside the inlier interval of ``region``."""
    return y < region.lo or y > region.hi


def outlier_flags(y, means, alpha: float) -> np.ndarray:
    """Vectorized alpha-outlier test of counts against Poisson means.

    Equivalent to ``is_outlier(y, outlier_region(m, alpha))`` per element
    but without constructing interval endpoints: ``y`` is an outlier iff
    the total mass of all support points no more probable than ``y``
    stays within ``alpha``.  That mass is the sum of the two tails cut at
    ``y`` and at its pmf-level mirror point on the other side of the
    mode, found by bisection on the monotone flanks.
    """
    y = np.asarray(y, dtype=float)
    m = np.asarray(means, dtype=float)
    y, m = np.broadcast_arrays(y, m)
    shape = y.shape
    y = y.ravel()
    m = m.ravel()
    mode = np.floor(m)
    target = poisson_log_pmf(y, m)
    right = y > mode
    left = y < mode

    a = np.where(left, y, -1.0)  # inclusive end of the left tail
    b = np.where(right, y, np.inf)  # inclusive start of the right tail
    if right.any():
        # mirror on the increasing flank: largest t in [0, mode] with lp(t) <= target
        has = poisson_log_pmf(np.zeros_like(m), m) <= target
        lo_s = np.zeros_like(m)
        hi_s = mode.copy()
        while True:
            active = right & has & (lo_s < hi_s)
            if not active.any():
                break
            mid = np.floor((lo_s + hi_s + 1.0) / 2.0)
            ok = poisson_log_pmf(mid, m) <= target
            lo_s = np.where(active & ok, mid, lo_s)
            hi_s = np.where(active & ~ok, mid - 1.0, hi_s)
        a = np.where(right, np.where(has, lo_s, -1.0), a)
    if left.any():
        # mirror on the decreasing flank: smallest t >= mode with lp(t) <= target
        hi_s = mode + np.maximum(mode - y, 4.0)
        for _ in range(200):
            bad = left & (poisson_log_pmf(hi_s, m) > target)
            if not bad.any():
                break
            hi_s = np.where(bad, mode + 2.0 * (hi_s - mode), hi_s)
        lo_s = mode.copy()
        while True:
            active = left & (lo_s < hi_s)
            if not active.any():
                break
            mid = np.floor((lo_s + hi_s) / 2.0)
            ok = poisson_log_pmf(mid, m) <= target
            hi_s = np.where(active & ok, mid, hi_s)
            lo_s = np.where(active & ~ok, mid + 1.0, lo_s)
        b = np.where(left, hi_s, b)

    mass = np.where(a >= 0, _poisson.cdf(np.maximum(a, 0), m), 0.0)
    mass = mass + np.where(np.isfinite(b), _poisson.sf(np.maximum(b, 1.0) - 1.0, m), 0.0)
    out = (mass <= alpha) & (y != mode)
    return out.reshape(shape) if shape else bool(out)


def inlier_mean_bounds_batch(ys, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-count ranges of Poisson means keeping each count an inlier.

    For a fixed count ``y`` the inlier property holds on a single mean
    interval ``[m_lo, m_hi]`` (it fails for means far below or far above
    ``y``); both endpoints are located by bisection on the membership
    test, vectorized over the counts.  Turns many outlier tests of the
    same counts against many candidate means into two comparisons each.
    """
    ys = np.asarray(ys, dtype=float)
    # lower endpoints: bracket [~0, y]; a count of 0 is the mode of any
    # tiny mean, so its interval starts at 0
    pos = ys > 0
    a = np.full(ys.shape, 1e-12)
    b = np.maximum(ys, 1.0)
    tiny_out = outlier_flags(ys, a, alpha)
    for _ in range(70):
        mid = 0.5 * (a + b)
        out = outlier_flags(ys, mid, alpha)
        a = np.where(out, mid, a)
        b = np.where(out, b, mid)
    m_lo = np.where(pos & tiny_out, b, 0.0)
    # upper endpoints: grow the bracket from y (its own mode, an inlier)
    lo = np.maximum(ys, 1.0)
    hi = 2.0 * lo + 10.0
    for _ in range(200):
        grow = ~outlier_flags(ys, hi, alpha)
        if not grow.any():
            break
        lo = np.where(grow, hi, lo)
        hi = np.where(grow, hi * 2.0, hi)
    for _ in range(70):
        mid = 0.5 * (lo + hi)
        out = outlier_flags(ys, mid, alpha)
        hi = np.where(out, mid, hi)
        lo = np.where(out, lo, mid)
    return m_lo, lo


def inlier_mean_bounds(y: int, alpha: float) -> tuple[float, float]:
    """Scalar convenience wrapper around :func:`inlier_mean_bounds_batch`."""
    lo, hi = inlier_mean_bounds_batch(np.array([float(y)]), alpha)
    return float(lo[0]), float(hi[0])
