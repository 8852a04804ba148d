"""Robust multivariate regression through a joint robust covariance plug-in.

The reweighted covariance estimate of the stacked (x, y) data is partitioned
into blocks and pushed through the least squares identities, giving slope
matrix, intercept and error scatter that inherit the covariance estimator's
robustness.  A second weighting step on residual distances then restores
efficiency.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset, validate
from .diagnostics import OutlierMap, classify_map_points
from .exceptions import (
    LengthMismatchError,
    SingularScatterError,
    TooFewInliersError,
    TooFewRowsError,
)
from .mcd import COND_MAX, McdConfig, McdResult, fast_mcd, robust_distances
from .univariate import chi2_quantile, trimming_consistency

__all__ = ["MvRegFit", "mcd_regression", "reweight_mvreg", "mvreg_outlier_map"]


@dataclass(frozen=True)
class MvRegFit:
    """Slope matrix, intercept, error scatter and residual diagnostics.

    ``B`` is p-by-q so predictions are ``x @ B + alpha``.  ``sigma_eps`` can
    be rank-deficient when the responses fit exactly; that case is flagged
    and residual distances are then measured inside the attained subspace.
    """

    B: np.ndarray
    alpha: np.ndarray
    sigma_eps: np.ndarray
    weights: np.ndarray
    residual_distances: np.ndarray
    kind: str = "raw"
    exact_fit: bool = field(default=False, compare=False)

    def predict(self, x_values) -> np.ndarray:
        return np.asarray(x_values, dtype=float) @ self.B + self.alpha

    def residuals(self, x_values, y_values) -> np.ndarray:
        return np.asarray(y_values, dtype=float) - self.predict(x_values)


def _residual_distances(residuals: np.ndarray, sigma_eps: np.ndarray):
    """Mahalanobis-type distances of residual vectors; pseudo-inverse inside
    the attained subspace when the error scatter is rank-deficient."""
    eig, vec = np.linalg.eigh(sigma_eps)
    top = max(eig[-1], 0.0)
    live = eig > top / COND_MAX
    exact = not live.all()
    if not live.any():
        return np.zeros(residuals.shape[0]), True
    z = residuals @ (vec[:, live] / np.sqrt(eig[live]))
    return np.sqrt(np.einsum("ij,ij->i", z, z)), exact


def _plug_in(mu, sigma, p: int, q: int):
    mu_x, mu_y = mu[:p], mu[p:]
    s_xx = sigma[:p, :p]
    s_xy = sigma[:p, p:]
    s_yy = sigma[p:, p:]
    eig = np.linalg.eigvalsh(s_xx)
    if eig[-1] <= 0.0 or eig[0] <= eig[-1] / COND_MAX:
        raise SingularScatterError("x-block of the joint scatter is singular")
    B = np.linalg.solve(s_xx, s_xy)
    alpha = mu_y - B.T @ mu_x
    sigma_eps = s_yy - B.T @ s_xx @ B
    sigma_eps = 0.5 * (sigma_eps + sigma_eps.T)
    return B, alpha, sigma_eps


def mcd_regression(
    x: Dataset, y: Dataset, cfg: McdConfig = McdConfig(), reweight: bool = True
) -> MvRegFit:
    """Robust fit of the q response columns on the p predictor columns.

    Runs the covariance search on the stacked n-by-(p+q) data, partitions the
    reweighted center/scatter into the least squares identities, and (unless
    ``reweight`` is off) applies the residual-distance reweighting step.
    """
    if x.n != y.n:
        raise LengthMismatchError(f"x has {x.n} rows, y has {y.n}")
    p, q = x.p, y.p
    if x.n <= p + q:
        raise TooFewRowsError(f"need n > p + q = {p + q}, got n={x.n}")
    joint = validate(np.column_stack([x.values, y.values]))
    mcd = fast_mcd(joint, cfg)
    B, alpha, sigma_eps = _plug_in(mcd.reweighted.mu, mcd.reweighted.sigma, p, q)
    raw = _with_diagnostics(x, y, B, alpha, sigma_eps, cfg.cutoff_prob, kind="raw")
    if not reweight:
        return raw
    return reweight_mvreg(x, y, raw, cfg.cutoff_prob)


def _with_diagnostics(x, y, B, alpha, sigma_eps, cutoff_prob, kind) -> MvRegFit:
    residuals = y.values - (x.values @ B + alpha)
    distances, exact = _residual_distances(residuals, sigma_eps)
    cutoff = np.sqrt(chi2_quantile(y.p, cutoff_prob))
    weights = (distances <= cutoff).astype(int)
    return MvRegFit(
        B=B,
        alpha=alpha,
        sigma_eps=sigma_eps,
        weights=weights,
        residual_distances=distances,
        kind=kind,
        exact_fit=exact,
    )


def reweight_mvreg(
    x: Dataset, y: Dataset, raw: MvRegFit, cutoff_prob: float = 0.975
) -> MvRegFit:
    """Weighted least squares refit on rows whose raw residual distance passed.

    The refit error scatter is the weighted residual cross-product rescaled
    by the trimming consistency factor for the retained probability mass in
    q dimensions.
    """
    p, q = x.p, y.p
    kept = np.flatnonzero(raw.weights)
    if kept.size <= p:
        raise TooFewInliersError(f"only {kept.size} rows kept by the raw fit")
    U = np.column_stack([x.values, np.ones(x.n)])
    theta, _, rank, _ = np.linalg.lstsq(U[kept], y.values[kept], rcond=None)
    if rank < p + 1:
        raise SingularScatterError("weighted design is rank deficient")
    B, alpha = theta[:p], theta[p]
    residuals = y.values - (x.values @ B + alpha)
    kept_resid = residuals[kept]
    sigma_eps = (kept_resid.T @ kept_resid) / kept.size
    sigma_eps = trimming_consistency(q, cutoff_prob) * 0.5 * (sigma_eps + sigma_eps.T)
    distances, exact = _residual_distances(residuals, sigma_eps)
    return MvRegFit(
        B=B,
        alpha=alpha,
        sigma_eps=sigma_eps,
        weights=raw.weights,
        residual_distances=distances,
        kind="reweighted",
        exact_fit=exact,
    )


def mvreg_outlier_map(
    x: Dataset,
    y: Dataset,
    fit: MvRegFit,
    mcd_x: McdResult,
    cutoff_prob: float = 0.975,
) -> OutlierMap:
    """Residual distances against robust distances of the predictors."""
    rd = robust_distances(x, mcd_x)
    if rd.size != fit.residual_distances.size:
        raise LengthMismatchError("fit and robust distances cover different rows")
    x_cutoff = float(np.sqrt(chi2_quantile(x.p, cutoff_prob)))
    y_cutoff = float(np.sqrt(chi2_quantile(y.p, cutoff_prob)))
    flags = classify_map_points(
        rd > x_cutoff, fit.residual_distances > y_cutoff, "vertical_outlier"
    )
    return OutlierMap(
        kind="mvreg_map",
        x_dist=rd,
        y_dist=fit.residual_distances,
        flags=flags,
        x_cutoff=x_cutoff,
        y_cutoff=y_cutoff,
        cutoff_prob=cutoff_prob,
    )
