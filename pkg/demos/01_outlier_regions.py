"""Poisson alpha-outlier regions.

A count is an alpha-outlier when its probability under the fitted Poisson
law falls strictly below the largest threshold whose sub-threshold mass
still fits into alpha.  For a unimodal pmf that leaves a contiguous
inlier interval around the mode; everything outside it is "surprising at
level alpha".
"""

import numpy as np

from minpat import outlier_region, is_outlier, outlier_flags, poisson_pmf

# A cell with fitted mean exp(4.6) ~ 99.5, probed at a strict level.
mean = np.exp(4.6)
region = outlier_region(mean, alpha=1e-4)
print(f"mean {mean:.3f}, alpha 1e-4 -> inliers [{region.lo}, {region.hi}], "
      f"threshold K = {region.threshold:.3e}")
for y in (62, 63, 140, 141):
    print(f"  y = {y:>3}: {'outlier' if is_outlier(y, region) else 'inlier'}")

# The region shrinks as alpha grows: more counts become surprising.
print("\ninlier interval vs alpha:")
for alpha in (1e-8, 1e-4, 1e-2, 0.1):
    r = outlier_region(mean, alpha)
    print(f"  alpha {alpha:>7}: [{r.lo}, {r.hi}]")

# Total mass outside the interval never exceeds alpha, and the interval
# is as small as possible: peeling one more boundary point would not fit.
from scipy.stats import poisson

alpha = 1e-4
out_mass = poisson.cdf(region.lo - 1, mean) + poisson.sf(region.hi, mean)
print(f"\noutside mass {out_mass:.3e} <= {alpha}")
print(f"plus the lighter boundary point: "
      f"{out_mass + min(poisson_pmf(region.lo, mean), poisson_pmf(region.hi, mean)):.3e} > {alpha}")

# Vectorized membership tests power the detectors: one call, many means.
means = np.array([5.0, 20.0, 99.5, 400.0])
print("\ncount 30 against several means:", outlier_flags(30, means, 0.01))
