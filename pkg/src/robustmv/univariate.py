"""Univariate robust estimators and probability utilities.

The chi-square and normal quantile helpers wrap scipy's regularized
incomplete gamma and inverse normal CDF; everything else downstream
(cutoffs, consistency factors, projection scales) funnels through here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .exceptions import BadProbabilityError, EmptyVectorError, SubsetTooSmallError

__all__ = [
    "UniEstimate",
    "median",
    "mad",
    "univariate_mcd",
    "chi2_quantile",
    "chi2_cdf",
    "normal_quantile",
    "trimming_consistency",
    "MAD_CONSTANT",
]


def chi2_cdf(df: int, x: float) -> float:
    """P(chi-square with ``df`` degrees of freedom <= x)."""
    if df < 1:
        raise ValueError(f"df must be >= 1, got {df}")
    if x < 0:
        raise ValueError(f"x must be >= 0, got {x}")
    return float(special.gammainc(df / 2.0, x / 2.0))


def chi2_quantile(df: int, prob: float) -> float:
    """Quantile q with P(chi-square_df <= q) = prob, for prob in (0, 1)."""
    if df < 1:
        raise ValueError(f"df must be >= 1, got {df}")
    if not 0.0 < prob < 1.0:
        raise BadProbabilityError(f"prob must be in (0, 1), got {prob}")
    return float(2.0 * special.gammaincinv(df / 2.0, prob))


def normal_quantile(prob: float) -> float:
    """Standard normal quantile (inverse CDF)."""
    if not 0.0 < prob < 1.0:
        raise BadProbabilityError(f"prob must be in (0, 1), got {prob}")
    return float(special.ndtri(prob))


# Makes the MAD comparable to a standard deviation under normality.
MAD_CONSTANT = 1.0 / normal_quantile(0.75)


def _as_vector(v) -> np.ndarray:
    arr = np.asarray(v, dtype=float).ravel()
    if arr.size == 0:
        raise EmptyVectorError("expected a nonempty vector")
    return arr


def median(v) -> float:
    """Sample median; mean of the two central order statistics for even length."""
    return float(np.median(_as_vector(v)))


def mad(v) -> float:
    """Median absolute deviation from the median, scaled for normal consistency.

    Returns 0 when at least half the values coincide with the median; callers
    dividing by this scale must guard that case themselves.
    """
    arr = _as_vector(v)
    return MAD_CONSTANT * float(np.median(np.abs(arr - np.median(arr))))


def trimming_consistency(dim: int, alpha: float) -> float:
    """Variance-level consistency factor for keeping the alpha fraction
    of a ``dim``-dimensional Gaussian closest to its center.

    Equals ``alpha / P(chi2_{dim+2} <= chi2_quantile(dim, alpha))`` and 1 at
    alpha = 1.  Scale (standard deviation) estimators need its square root.
    """
    if not 0.0 < alpha <= 1.0:
        raise BadProbabilityError(f"alpha must be in (0, 1], got {alpha}")
    if alpha == 1.0:
        return 1.0
    return alpha / chi2_cdf(dim + 2, chi2_quantile(dim, alpha))


@dataclass(frozen=True)
class UniEstimate:
    """Univariate robust location and nonnegative scale."""

    location: float
    scale: float

    def __post_init__(self):
        if not (np.isfinite(self.location) and np.isfinite(self.scale)):
            raise ValueError("location and scale must be finite")
        if self.scale < 0:
            raise ValueError(f"scale must be >= 0, got {self.scale}")


def univariate_mcd(v, h: int) -> UniEstimate:
    """Location/scale from the minimum-variance window of h sorted values.

    In one dimension the optimal h-subset is contiguous in sorted order, so
    the search scans the n - h + 1 windows of the sorted sample and keeps the
    one with the smallest sample variance (ties resolved toward the lowest
    starting index).  The scale is the window standard deviation times the
    square root of the trimming consistency factor for alpha = h / n.
    """
    arr = _as_vector(v)
    n = arr.size
    if not 2 <= h <= n:
        raise SubsetTooSmallError(f"need 2 <= h <= n, got h={h}, n={n}")
    s = np.sort(arr, kind="stable")
    # Rolling window means and sums of squares via cumulative sums.
    c1 = np.concatenate([[0.0], np.cumsum(s)])
    c2 = np.concatenate([[0.0], np.cumsum(s * s)])
    sums = c1[h:] - c1[:-h]
    sqsums = c2[h:] - c2[:-h]
    variances = (sqsums - sums * sums / h) / (h - 1)
    start = int(np.argmin(variances))  # argmin keeps the first (lowest) index on ties
    factor = float(np.sqrt(trimming_consistency(1, h / n)))
    return UniEstimate(
        location=float(sums[start] / h),
        scale=factor * float(np.sqrt(max(variances[start], 0.0))),
    )
