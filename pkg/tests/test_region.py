import math

import numpy as np
import pytest
from scipy.stats import poisson as sp_poisson

from minpat.region import (inlier_mean_bounds, outlier_flags, outlier_region,
                           is_outlier, poisson_log_pmf, poisson_pmf)


def brute_force_region(m, alpha):
    """Sort all masses ascending and peel while the running total stays
    within alpha; points tying the first unpeelable mass stay inliers."""
    top = int(m + 20 * math.sqrt(m) + 50)
    ys = np.arange(top + 1)
    pmf = sp_poisson.pmf(ys, m)
    order = np.argsort(pmf, kind="stable")
    total = 0.0
    threshold = None
    for idx in order:
        if total + pmf[idx] > alpha:
            threshold = pmf[idx]
            break
        total += pmf[idx]
    inliers = ys[pmf >= threshold]
    return int(inliers.min()), int(inliers.max())


def test_pmf_basics():
    assert poisson_pmf(0, 1.0) == pytest.approx(math.exp(-1), rel=1e-14)
    assert poisson_pmf(1, 1.0) == pytest.approx(math.exp(-1), rel=1e-14)
    with pytest.raises(ValueError):
        poisson_pmf(1, 0.0)


def test_pmf_against_high_precision_oracle():
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 60

    def oracle(y, m):
        m = mpmath.mpf(m)
        return float(mpmath.exp(-m + y * mpmath.log(m) - mpmath.loggamma(y + 1)))

    cases = [(200, 99.4843), (0, 0.1), (5, 5.0), (1234, 1200.5),
             (10 ** 6, 10 ** 6 + 12345.6), (999_000, 10 ** 6), (17, 450.0)]
    for y, m in cases:
        assert poisson_pmf(y, m) == pytest.approx(oracle(y, m), rel=1e-12)


def test_region_scenario_anchor():
    reg = outlier_region(math.exp(4.6), 1e-4)
    assert (reg.lo, reg.hi) == (63, 140)
    assert is_outlier(62, reg) and is_outlier(141, reg)
    assert not is_outlier(63, reg) and not is_outlier(140, reg)


def test_region_small_mean():
    reg = outlier_region(1.0, 0.01)
    assert (reg.lo, reg.hi) == (0, 4)


@pytest.mark.parametrize("m", [0.3, 1.0, 2.0, 7.7, 99.484, 350.0])
def test_mode_is_inlier_at_large_alpha(m):
    reg = outlier_region(m, 0.4)
    assert reg.lo <= math.floor(m) <= reg.hi


@pytest.mark.parametrize("m", [0.1, 1.0, 5.0, 99.48431564193378, 1000.0])
@pytest.mark.parametrize("alpha", [1e-8, 1e-4, 1e-2])
def test_region_matches_brute_force(m, alpha):
    reg = outlier_region(m, alpha)
    assert (reg.lo, reg.hi) == brute_force_region(m, alpha)


def test_region_mass_bound_and_maximality():
    rng = np.random.default_rng(42)
    for _ in range(300):
        m = float(np.exp(rng.uniform(np.log(0.05), np.log(500))))
        alpha = float(np.exp(rng.uniform(np.log(1e-8), np.log(0.5))))
        reg = outlier_region(m, alpha)
        out_mass = (sp_poisson.cdf(reg.lo - 1, m) if reg.lo else 0.0) + sp_poisson.sf(reg.hi, m)
        assert out_mass <= alpha * (1 + 1e-9)
        # maximality: the next-smallest-mass inlier point cannot be peeled too
        nxt = min((poisson_pmf(y, m) for y in (reg.lo, reg.hi)))
        assert out_mass + nxt > alpha


def test_region_monotone_in_alpha():
    for m in (0.5, 4.2, 80.0):
        prev = None
        for alpha in (1e-8, 1e-6, 1e-4, 1e-3, 1e-2, 0.1):
            reg = outlier_region(m, alpha)
            if prev is not None:
                assert reg.lo >= prev.lo and reg.hi <= prev.hi
            prev = reg


def test_flags_agree_with_regions_exhaustively():
    for m in (0.1, 0.9, 3.7, 25.0, 99.484, 640.0):
        for alpha in (1e-6, 1e-3, 0.05, 0.3):
            reg = outlier_region(m, alpha)
            ys = np.arange(int(2 * reg.hi + 20))
            want = (ys < reg.lo) | (ys > reg.hi)
            got = outlier_flags(ys, m, alpha)
            assert np.array_equal(got, want), (m, alpha)


def test_flags_broadcasting_and_scalars():
    flags = outlier_flags([[2, 141]], [[99.484], [5.0]], 1e-4)
    assert flags.shape == (2, 2)
    assert outlier_flags(62, 99.48431564193378, 1e-4) is True
    assert outlier_flags(63, 99.48431564193378, 1e-4) is False


def test_inlier_mean_bounds_consistency():
    for y in (0, 1, 7, 45, 200):
        for alpha in (1e-4, 0.01):
            lo, hi = inlier_mean_bounds(y, alpha)
            for m, inside in ((lo * 1.0001 + 1e-9, True), (hi * 0.9999, True),
                              (hi * 1.0001, False)):
                if m <= 0:
                    continue
                assert bool(outlier_flags(y, m, alpha)) != inside, (y, alpha, m)
            if y > 0 and lo > 1e-9:
                assert bool(outlier_flags(y, lo * 0.999, alpha))


def test_region_validates_inputs():
    with pytest.raises(ValueError):
        outlier_region(-1.0, 0.01)
    with pytest.raises(ValueError):
        outlier_region(5.0, 0.0)
    with pytest.raises(ValueError):
        outlier_region(5.0, 1.0)
