"""Multivariate calibration: partial least squares, principal component
regression, their robust counterparts, and cross-validated component selection.

The classical fit extracts weight vectors from the empirical cross-covariance
with score-orthogonality deflation.  The robust variants replace the moments
by the robust principal component model's center/scatter and finish with a
residual-distance-weighted regression in score space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, validate
from .exceptions import (
    LengthMismatchError,
    RankTooLowError,
    TooFewInliersError,
    TooFewRowsError,
)
from .mcd import McdConfig
from .mvreg import MvRegFit, mcd_regression
from .robpca import PcaModel, robpca, scores

__all__ = [
    "PlsModel",
    "PcrModel",
    "CvCurve",
    "simpls",
    "rsimpls",
    "rpcr",
    "rmsecv",
]


@dataclass(frozen=True)
class PlsModel:
    """Weight vectors, loadings and regression coefficients of a PLS fit.

    Columns of ``weights_R`` and ``y_weights_Q`` are unit length; classical
    fits have exactly orthogonal score columns.  ``row_weights`` holds the
    0/1 weights of the robust second-stage regression (all ones classically).
    """

    x_center: np.ndarray
    y_center: np.ndarray
    weights_R: np.ndarray
    y_weights_Q: np.ndarray
    x_loadings: np.ndarray
    coefficients: np.ndarray
    intercept: np.ndarray
    k: int
    robust: bool
    row_weights: np.ndarray
    sigma_eps: np.ndarray

    def predict(self, x_values) -> np.ndarray:
        return np.asarray(x_values, dtype=float) @ self.coefficients + self.intercept


@dataclass(frozen=True)
class PcrModel:
    """Principal component regression: a PCA model plus a score-space fit."""

    pca: PcaModel
    regression: MvRegFit
    coefficients: np.ndarray
    intercept: np.ndarray
    k: int

    def predict(self, x_values) -> np.ndarray:
        return np.asarray(x_values, dtype=float) @ self.coefficients + self.intercept


@dataclass(frozen=True)
class CvCurve:
    """Cross-validation error per component count and the chosen count."""

    k_values: tuple[int, ...]
    rmsecv: tuple[float, ...]
    selected_k: int


def _as_y_matrix(y) -> np.ndarray:
    if isinstance(y, Dataset):
        return np.array(y.values, dtype=float)
    arr = np.asarray(y, dtype=float)
    return arr.reshape(-1, 1) if arr.ndim == 1 else arr


def _simpls_weights(sxy: np.ndarray, sx: np.ndarray, k: int):
    """Weight vectors, y-weights and x-loadings by cross-covariance deflation.

    Each round takes the dominant singular pair of the deflated
    cross-covariance, computes the x-loading, and removes the loading's
    direction from the cross-covariance so later scores stay orthogonal.
    Stops early (returning fewer columns) once the chain is exhausted;
    callers that insist on exactly k components must check the width.
    """
    S = np.array(sxy, dtype=float)
    ref = np.linalg.norm(S)
    R, Q, P, V = [], [], [], []
    for _ in range(k):
        u, s, vt = np.linalg.svd(S, full_matrices=False)
        if s[0] <= 1e-12 * max(ref, 1e-300):
            break
        r, q = u[:, 0], vt[0]
        j = int(np.argmax(np.abs(q)))
        if q[j] < 0:
            r, q = -r, -q
        denom = float(r @ sx @ r)
        if denom <= 0:
            break
        p_a = sx @ r / denom
        v = p_a.copy()
        for _ in range(2):  # twice for numerical orthogonality
            for v_b in V:
                v = v - (v_b @ v) * v_b
        nrm = np.linalg.norm(v)
        if nrm <= 0:
            break
        v = v / nrm
        S = S - np.outer(v, v @ S)
        R.append(r)
        Q.append(q)
        P.append(p_a)
        V.append(v)
    if not R:
        raise RankTooLowError("cross-covariance carries no usable component")
    return np.column_stack(R), np.column_stack(Q), np.column_stack(P)


def simpls(x: Dataset, y, k: int) -> PlsModel:
    """Classical PLS fit with ``k`` components.

    Centers both blocks at their means, extracts the weight vectors from the
    empirical cross-covariance, and regresses the responses on the scores.
    """
    Y = _as_y_matrix(y)
    if Y.shape[0] != x.n:
        raise LengthMismatchError(f"y has {Y.shape[0]} rows for {x.n}")
    n = x.n
    if n <= k:
        raise TooFewRowsError(f"need n > k, got n={n}, k={k}")
    x_center = x.values.mean(axis=0)
    y_center = Y.mean(axis=0)
    Xc = x.values - x_center
    Yc = Y - y_center
    sxy = Xc.T @ Yc / (n - 1)
    sx = Xc.T @ Xc / (n - 1)
    R, Q, P = _simpls_weights(sxy, sx, k)
    if R.shape[1] < k:
        raise RankTooLowError(
            f"cross-covariance exhausted after {R.shape[1]} of {k} components"
        )
    T = Xc @ R
    B_t, *_ = np.linalg.lstsq(T, Yc, rcond=None)
    coefficients = R @ B_t
    resid = Yc - T @ B_t
    sigma_eps = resid.T @ resid / max(n - 1, 1)
    return PlsModel(
        x_center=x_center,
        y_center=y_center,
        weights_R=R,
        y_weights_Q=Q,
        x_loadings=P,
        coefficients=coefficients,
        intercept=y_center - x_center @ coefficients,
        k=k,
        robust=False,
        row_weights=np.ones(n, dtype=int),
        sigma_eps=sigma_eps,
    )


def _robust_joint_moments(
    x: Dataset, Y: np.ndarray, k0: int, cfg: McdConfig, ndirs: int
):
    """Robust center and rank-k0 scatter of the stacked (x, y) data."""
    joint = validate(np.column_stack([x.values, Y]))
    model = robpca(joint, k=k0, cfg=cfg, ndirs=ndirs)
    sigma = model.loadings @ (model.eigenvalues[:, None] * model.loadings.T)
    return model.center, 0.5 * (sigma + sigma.T)


def _joint_rank(x_values: np.ndarray, Y: np.ndarray) -> int:
    joint = np.column_stack([x_values, Y])
    return int(np.linalg.matrix_rank(joint - joint.mean(axis=0)))


def _rsimpls_models(
    x: Dataset,
    Y: np.ndarray,
    k_list,
    cfg: McdConfig,
    ndirs: int,
    k0: int | None,
    clamp: bool = False,
) -> dict[int, PlsModel]:
    """Robust PLS models for several component counts from one joint model.

    The weight-vector sequence from the robust moments is nested, so one
    extraction to ``max(k_list)`` serves every requested count; only the
    score-space regression is redone per k.  With ``clamp`` enabled, counts
    past chain exhaustion reuse the largest attainable model instead of
    raising.
    """
    q = Y.shape[1]
    k_top = max(k_list)
    if k0 is None:
        k0 = min(k_top + q, _joint_rank(x.values, Y))
    if k_top > k0 and not clamp:
        raise RankTooLowError(f"need k <= k0, got k={k_top}, k0={k0}")
    mu, sigma = _robust_joint_moments(x, Y, k0, cfg, ndirs)
    p = x.p
    mu_x, mu_y = mu[:p], mu[p:]
    sx, sxy, syy = sigma[:p, :p], sigma[:p, p:], sigma[p:, p:]
    R, Q, P = _simpls_weights(sxy, sx, min(k_top, k0))
    attained = R.shape[1]

    models = {}
    for k in sorted(k_list):
        if k > attained:
            if not clamp:
                raise RankTooLowError(
                    f"cross-covariance exhausted after {attained} of {k} components"
                )
            models[k] = models[attained] if attained in models else models[max(models)]
            continue
        Rk, Qk, Pk = R[:, :k], Q[:, :k], P[:, :k]
        T = (x.values - mu_x) @ Rk
        # Second stage: the robust multivariate regression of y on the scores,
        # with its own residual-distance reweighting.
        fit = mcd_regression(validate(T), validate(Y), cfg)
        coefficients = Rk @ fit.B
        models[k] = PlsModel(
            x_center=mu_x,
            y_center=mu_y,
            weights_R=Rk,
            y_weights_Q=Qk,
            x_loadings=Pk,
            coefficients=coefficients,
            intercept=fit.alpha - mu_x @ coefficients,
            k=k,
            robust=True,
            row_weights=fit.weights,
            sigma_eps=fit.sigma_eps,
        )
    return models


def rsimpls(
    x: Dataset,
    y,
    k: int,
    cfg: McdConfig = McdConfig(),
    ndirs: int = 250,
    k0: int | None = None,
) -> PlsModel:
    """Robust PLS: robust joint moments feed the weight-vector extraction,
    then a residual-distance-weighted regression on the robust scores.

    ``k0`` is the dimension of the robust joint model, by default k + q
    (capped at the joint rank).
    """
    Y = _as_y_matrix(y)
    if Y.shape[0] != x.n:
        raise LengthMismatchError(f"y has {Y.shape[0]} rows for {x.n}")
    return _rsimpls_models(x, Y, [k], cfg, ndirs, k0)[k]


def rpcr(
    x: Dataset,
    y,
    k: int,
    cfg: McdConfig = McdConfig(),
    ndirs: int = 250,
) -> PcrModel:
    """Robust principal component regression.

    Fits the robust PCA model on the predictors, then the robust multivariate
    regression of the responses on its scores, and composes the two into
    predictor-space coefficients.
    """
    Y = _as_y_matrix(y)
    if Y.shape[0] != x.n:
        raise LengthMismatchError(f"y has {Y.shape[0]} rows for {x.n}")
    pca = robpca(x, k=k, cfg=cfg, ndirs=ndirs)
    T = scores(pca, x)
    fit = mcd_regression(validate(T), validate(Y), cfg)
    coefficients = pca.loadings @ fit.B
    intercept = fit.alpha - pca.center @ coefficients
    return PcrModel(
        pca=pca,
        regression=fit,
        coefficients=coefficients,
        intercept=intercept,
        k=k,
    )


def rmsecv(
    x: Dataset,
    y,
    k_max: int,
    method: str = "simpls",
    robust: bool = False,
    cfg: McdConfig = McdConfig(),
    ndirs: int = 250,
) -> CvCurve:
    """Leave-one-out root mean squared prediction error for k = 1..k_max.

    Plain mode averages the squared prediction errors of every observation.
    Robust mode recomputes the full-data fit's 0/1 weights at every k and
    averages only over the rows kept at all of them (divided by their count):
    a common row set keeps the curve comparable across k, while any row some
    fit deems irregular never judges the candidate order.  Ties select the
    smallest k.  Multi-response inputs use squared residual norms in place
    of squared scalars.
    """
    Y = _as_y_matrix(y)
    n, q = Y.shape
    if Y.shape[0] != x.n:
        raise LengthMismatchError(f"y has {Y.shape[0]} rows for {x.n}")
    if not 1 <= k_max < n - 1:
        raise TooFewRowsError(f"need 1 <= k_max < n - 1, got k_max={k_max}, n={n}")
    if method not in ("simpls", "rsimpls", "rpcr"):
        raise ValueError(f"unknown method {method!r}")

    predictions = np.full((n, k_max, q), np.nan)
    for i in range(n):
        mask = np.ones(n, dtype=bool)
        mask[i] = False
        x_train = validate(x.values[mask])
        y_train = Y[mask]
        x0 = x.values[i]
        predictions[i] = _predict_path(x_train, y_train, x0, k_max, method, cfg, ndirs)

    keep = np.logical_and.reduce(_keep_rows(x, Y, k_max, method, robust, cfg, ndirs))
    if not keep.any():
        raise TooFewInliersError("no row was kept by every full-data fit")
    values = []
    for j in range(k_max):
        err = Y - predictions[:, j, :]
        sq = np.einsum("ij,ij->i", err, err)
        values.append(float(np.sqrt(sq[keep].mean())))
    selected = int(np.argmin(values)) + 1
    return CvCurve(tuple(range(1, k_max + 1)), tuple(values), selected)


def _predict_path(x_train, y_train, x0, k_max, method, cfg, ndirs):
    """Predictions of x0 for every component count on one training split.

    When the component chain is exhausted before k_max, further counts add
    nothing and the prediction path stays flat at the last attainable model.
    """
    q = y_train.shape[1]
    out = np.empty((k_max, q))
    if method == "simpls":
        x_center = x_train.values.mean(axis=0)
        y_center = y_train.mean(axis=0)
        Xc = x_train.values - x_center
        Yc = y_train - y_center
        n = Xc.shape[0]
        R, _, _ = _simpls_weights(Xc.T @ Yc / (n - 1), Xc.T @ Xc / (n - 1), k_max)
        T = Xc @ R
        t0 = (x0 - x_center) @ R
        for j in range(k_max):
            j_eff = min(j + 1, R.shape[1])
            B_t, *_ = np.linalg.lstsq(T[:, :j_eff], Yc, rcond=None)
            out[j] = y_center + t0[:j_eff] @ B_t
        return out
    if method == "rsimpls":
        # One robust joint model of fixed dimension serves every k.
        k0 = min(k_max + q, _joint_rank(x_train.values, y_train))
        models = _rsimpls_models(
            x_train, y_train, range(1, k_max + 1), cfg, ndirs, k0, clamp=True
        )
        for j in range(k_max):
            model = models[j + 1]
            out[j] = x0 @ model.coefficients + model.intercept
        return out
    for j in range(k_max):  # rpcr: plain refit per component count
        model = rpcr(x_train, y_train, j + 1, cfg=cfg, ndirs=ndirs)
        out[j] = x0 @ model.coefficients + model.intercept
    return out


def _keep_rows(x, Y, k_max, method, robust, cfg, ndirs):
    """Per-k boolean masks of rows that count toward the error."""
    n, q = Y.shape
    if not robust or method == "simpls":
        return [np.ones(n, dtype=bool)] * k_max
    masks = []
    if method == "rsimpls":
        k0 = min(k_max + q, _joint_rank(x.values, Y))
        models = _rsimpls_models(
            x, Y, range(1, k_max + 1), cfg, ndirs, k0, clamp=True
        )
        for j in range(k_max):
            masks.append(models[j + 1].row_weights.astype(bool))
        return masks
    for j in range(k_max):
        model = rpcr(x, Y, j + 1, cfg=cfg, ndirs=ndirs)
        masks.append(model.regression.weights.astype(bool))
    return masks
