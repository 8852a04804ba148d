"""Least trimmed squares regression via the fast concentration search.

The estimator minimizes the sum of the h smallest squared residuals, which
amounts to finding the h-subset with the best least squares fit.  The search
mirrors the covariance one: random elemental starts, two concentration steps
each, full iteration of the best candidates, then a robust error scale and a
one-step reweighted refit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset, default_h
from .diagnostics import OutlierMap, classify_map_points
from .exceptions import (
    LengthMismatchError,
    RankDeficientError,
    SubsetTooSmallError,
    TooFewInliersError,
    TooFewRowsError,
)
from .mcd import MAX_CSTEPS, McdConfig, McdResult, robust_distances
from .univariate import chi2_quantile, trimming_consistency

__all__ = ["LtsFit", "fast_lts", "lts_scale", "reweight_lts", "regression_outlier_map"]


@dataclass(frozen=True)
class LtsFit:
    """Coefficients, robust error scale and per-observation diagnostics.

    ``theta`` holds the slope coefficients followed by the intercept when one
    is fitted.  ``std_residuals`` are residuals divided by ``sigma``;
    ``weights`` flag observations whose absolute standardized residual passed
    the chi-square cutoff at the raw fit.
    """

    theta: np.ndarray
    sigma: float
    best_subset: tuple[int, ...]
    weights: np.ndarray
    std_residuals: np.ndarray
    kind: str = "raw"
    intercept: bool = True
    objective: float = np.nan
    exact_fit: bool = field(default=False, compare=False)


def _design(x: Dataset, intercept: bool) -> np.ndarray:
    if intercept:
        return np.column_stack([x.values, np.ones(x.n)])
    return np.asarray(x.values, dtype=float)


def _ls_theta(U: np.ndarray, y: np.ndarray) -> np.ndarray:
    theta, _, rank, _ = np.linalg.lstsq(U, y, rcond=None)
    if rank < U.shape[1]:
        raise RankDeficientError(
            f"design has rank {rank} < {U.shape[1]} on the fitted subset"
        )
    return theta


def _trimmed_objective(residuals: np.ndarray, h: int) -> float:
    r2 = residuals * residuals
    return float(np.sort(r2, kind="stable")[:h].sum())


def lts_scale(residuals, h: int) -> float:
    """Robust error scale from the h smallest squared residuals.

    The root mean of the h smallest squared residuals, multiplied by the
    square root of the trimming consistency factor for alpha = h / n (factor
    1 at h = n).
    """
    r = np.asarray(residuals, dtype=float).ravel()
    n = r.size
    if not 1 <= h <= n:
        raise SubsetTooSmallError(f"need 1 <= h <= n, got h={h}, n={n}")
    trimmed = np.sort(r * r, kind="stable")[:h].mean()
    return float(np.sqrt(trimming_consistency(1, h / n)) * np.sqrt(trimmed))


def _std_residuals(residuals: np.ndarray, sigma: float, y_scale: float):
    if sigma > 0:
        return residuals / sigma
    onfit = np.abs(residuals) <= 1e-10 * (1.0 + y_scale)
    return np.where(onfit, 0.0, np.inf * np.sign(residuals))


def _rule_weights(std_residuals: np.ndarray, cutoff_prob: float) -> np.ndarray:
    cutoff = np.sqrt(chi2_quantile(1, cutoff_prob))
    return (np.abs(std_residuals) <= cutoff).astype(int)


def fast_lts(
    x: Dataset,
    y,
    cfg: McdConfig = McdConfig(),
    intercept: bool = True,
) -> LtsFit:
    """Raw least trimmed squares fit for ``y`` on the columns of ``x``.

    Each random start solves the hyperplane through as many points as there
    are coefficients (extended with further random rows whenever that system
    is not unique), concentrates twice, and the distinct best candidates are
    iterated until their h-subset stops changing.  The winner is refit by
    least squares on its subset; ties on the trimmed objective go to the
    earlier start.  Deterministic given ``cfg.seed``.
    """
    y = np.asarray(y, dtype=float).ravel()
    if y.size != x.n:
        raise LengthMismatchError(f"y has {y.size} entries for {x.n} rows")
    U = _design(x, intercept)
    n, d = U.shape
    if n <= d:
        raise TooFewRowsError(f"need n > {d} coefficients, got n={n}")
    h = cfg.h if cfg.h is not None else default_h(n, x.p, cfg.alpha)
    if not d + 1 <= h <= n:
        raise SubsetTooSmallError(f"need {d + 1} <= h <= n, got h={h}")
    y_scale = float(np.abs(y).max())

    if h == n:
        theta = _ls_theta(U, y)
        best = tuple(range(n))
        return _raw_fit(U, y, theta, best, h, intercept, cfg.cutoff_prob, y_scale)

    rng = np.random.default_rng(cfg.seed)
    candidates = []  # (objective, start_index, subset, theta)
    for s in range(cfg.nstarts):
        theta = _elemental_theta(U, y, d, rng)
        subset = _closest_rows(U, y, theta, h)
        for _ in range(2):
            theta = _ls_theta(U[list(subset)], y[list(subset)])
            subset = _closest_rows(U, y, theta, h)
        theta = _ls_theta(U[list(subset)], y[list(subset)])
        candidates.append((_trimmed_objective(y - U @ theta, h), s, subset, theta))

    candidates.sort(key=lambda c: (c[0], c[1]))
    refine, seen = [], set()
    for obj, s, subset, theta in candidates:
        if subset not in seen:
            seen.add(subset)
            refine.append((obj, s, subset, theta))
        if len(refine) == cfg.n_refine:
            break

    finished = []
    for obj, s, subset, theta in refine:
        for _ in range(MAX_CSTEPS):
            new_subset = _closest_rows(U, y, theta, h)
            if new_subset == subset:
                break
            subset = new_subset
            theta = _ls_theta(U[list(subset)], y[list(subset)])
        finished.append((_trimmed_objective(y - U @ theta, h), s, subset, theta))

    finished.sort(key=lambda c: (c[0], c[1]))
    _, _, best, theta = finished[0]
    return _raw_fit(U, y, theta, best, h, intercept, cfg.cutoff_prob, y_scale)


def _elemental_theta(U, y, d, rng) -> np.ndarray:
    """Hyperplane through d random points, extended until it is unique."""
    n = U.shape[0]
    chosen = list(rng.choice(n, size=d, replace=False))
    extension = [i for i in rng.permutation(n) if i not in set(chosen)]
    while True:
        theta, _, rank, _ = np.linalg.lstsq(U[chosen], y[chosen], rcond=None)
        if rank == d:
            return theta
        if not extension:
            raise RankDeficientError("design matrix does not have full column rank")
        chosen.append(int(extension.pop(0)))


def _closest_rows(U, y, theta, h) -> tuple[int, ...]:
    r = np.abs(y - U @ theta)
    keep = np.argsort(r, kind="stable")[:h]
    return tuple(sorted(int(i) for i in keep))


def _raw_fit(U, y, theta, subset, h, intercept, cutoff_prob, y_scale) -> LtsFit:
    residuals = y - U @ theta
    sigma = lts_scale(residuals, h)
    std = _std_residuals(residuals, sigma, y_scale)
    if sigma > 0:
        weights = _rule_weights(std, cutoff_prob)
    else:
        weights = (np.abs(residuals) <= 1e-10 * (1.0 + y_scale)).astype(int)
    return LtsFit(
        theta=theta,
        sigma=sigma,
        best_subset=subset,
        weights=weights,
        std_residuals=std,
        kind="raw",
        intercept=intercept,
        objective=_trimmed_objective(residuals, h),
        exact_fit=sigma == 0.0,
    )


def reweight_lts(
    x: Dataset, y, raw: LtsFit, cutoff_prob: float = 0.975
) -> LtsFit:
    """Least squares refit on the rows the raw fit did not flag.

    The error scale of the refit is the root mean squared residual over the
    kept rows times the square root of the trimming consistency factor for
    the retained probability mass.
    """
    y = np.asarray(y, dtype=float).ravel()
    U = _design(x, raw.intercept)
    weights = raw.weights
    kept = np.flatnonzero(weights)
    if kept.size <= U.shape[1]:
        raise TooFewInliersError(f"only {kept.size} observations kept by the raw fit")
    theta = _ls_theta(U[kept], y[kept])
    residuals = y - U @ theta
    sigma = float(
        np.sqrt(trimming_consistency(1, cutoff_prob))
        * np.sqrt(np.mean(residuals[kept] ** 2))
    )
    y_scale = float(np.abs(y).max())
    std = _std_residuals(residuals, sigma, y_scale)
    return LtsFit(
        theta=theta,
        sigma=sigma,
        best_subset=raw.best_subset,
        weights=weights,
        std_residuals=std,
        kind="reweighted",
        intercept=raw.intercept,
        objective=_trimmed_objective(residuals, min(len(raw.best_subset), y.size)),
        exact_fit=sigma == 0.0,
    )


def regression_outlier_map(
    x: Dataset,
    y,
    fit: LtsFit,
    mcd_result: McdResult,
    cutoff_prob: float = 0.975,
) -> OutlierMap:
    """Standardized residuals against robust distances of the predictors.

    Classifies each observation as regular, good leverage, vertical outlier
    or bad leverage using the chi-square cutoffs on both axes.
    """
    rd = robust_distances(x, mcd_result)
    std = fit.std_residuals
    if rd.size != std.size:
        raise LengthMismatchError("fit and robust distances cover different rows")
    x_cutoff = float(np.sqrt(chi2_quantile(x.p, cutoff_prob)))
    y_cutoff = float(np.sqrt(chi2_quantile(1, cutoff_prob)))
    flags = classify_map_points(rd > x_cutoff, np.abs(std) > y_cutoff, "vertical_outlier")
    return OutlierMap(
        kind="regression_map",
        x_dist=rd,
        y_dist=std,
        flags=flags,
        x_cutoff=x_cutoff,
        y_cutoff=y_cutoff,
        cutoff_prob=cutoff_prob,
    )
