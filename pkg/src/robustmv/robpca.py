"""Robust principal components by projection pursuit plus covariance refinement.

The algorithm first represents the data inside the affine span of the rows
(singular value decomposition), ranks observations by a projection-based
outlyingness, keeps the h least outlying, projects everything onto the top
eigenvectors of that subset's covariance, and refines center and shape in
the reduced space with the reweighted minimum covariance determinant.  Score
and orthogonal distances with their cutoffs make the model plot-ready.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset, default_h, validate
from .diagnostics import OutlierMap, classify_map_points
from .exceptions import (
    AllDirectionsDegenerateError,
    DegenerateDataError,
    RankTooLowError,
    ZeroEigenvalueError,
)
from .mcd import McdConfig, fast_mcd
from .univariate import (
    chi2_quantile,
    mad,
    normal_quantile,
    trimming_consistency,
)

__all__ = [
    "PcaModel",
    "outlyingness",
    "robpca",
    "scores",
    "orthogonal_distances",
    "score_distances",
    "od_cutoff",
    "pca_outlier_map",
]

# Projection directions with robust scale below this are uninformative.
SCALE_FLOOR = 1e-12


@dataclass(frozen=True)
class PcaModel:
    """Robust center, orthonormal loadings, eigenvalues and outlier cutoffs.

    ``column_scale`` is set only when the variables were robustly scaled
    before the fit; scores and distances are then computed on the scaled
    data.
    """

    center: np.ndarray
    loadings: np.ndarray
    eigenvalues: np.ndarray
    k: int
    od_cutoff: float
    sd_cutoff: float
    od_degenerate: bool = field(default=False, compare=False)
    column_scale: np.ndarray | None = None

    def __post_init__(self):
        P = self.loadings
        gram = P.T @ P
        if np.abs(gram - np.eye(self.k)).max() > 1e-10:
            raise ValueError("loading columns are not orthonormal")
        ev = self.eigenvalues
        if np.any(ev <= 0) or np.any(np.diff(ev) > 0):
            raise ZeroEigenvalueError("eigenvalues must be positive and descending")


def _pair_directions(values: np.ndarray, ndirs: int, rng: np.random.Generator):
    """Unit directions through pairs of distinct data points.

    Uses every pair (in index order) when there are at most ``ndirs`` of
    them, otherwise ``ndirs`` seeded random pairs.  Zero-length differences
    (duplicate points) are dropped.
    """
    n = values.shape[0]
    if math.comb(n, 2) <= ndirs:
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    else:
        pairs = [tuple(rng.choice(n, size=2, replace=False)) for _ in range(ndirs)]
    diffs = np.array([values[a] - values[b] for a, b in pairs])
    norms = np.linalg.norm(diffs, axis=1)
    keep = norms > 0
    return diffs[keep] / norms[keep, None]


def outlyingness(data: Dataset, ndirs: int = 250, seed: int = 0, h: int | None = None):
    """Largest standardized projection distance over many univariate directions.

    Every direction is generated from a pair of data points; along each one
    the minimum-variance-window location and scale standardize the projected
    points, and each observation keeps its maximum over directions.
    Directions with scale below the floor are skipped.
    """
    if data.n < 2:
        raise DegenerateDataError("need at least two observations")
    n = data.n
    if h is None:
        h = default_h(n, 1, 0.75)
    rng = np.random.default_rng(seed)
    directions = _pair_directions(data.values, ndirs, rng)
    if directions.shape[0] == 0:
        raise AllDirectionsDegenerateError("all candidate directions have zero length")
    proj = data.values @ directions.T            # (n, ndirs)
    loc, scale = _window_estimates(proj, h)
    live = scale >= SCALE_FLOOR
    if not live.any():
        raise AllDirectionsDegenerateError("every direction has zero robust scale")
    std = np.abs(proj[:, live] - loc[live]) / scale[live]
    return std.max(axis=1)


def _window_estimates(proj: np.ndarray, h: int):
    """Column-wise minimum-variance-window location and consistent scale.

    Vectorized version of :func:`robustmv.univariate.univariate_mcd` applied
    to every column of ``proj`` at once.
    """
    n = proj.shape[0]
    s = np.sort(proj, axis=0, kind="stable")
    c1 = np.vstack([np.zeros(s.shape[1]), np.cumsum(s, axis=0)])
    c2 = np.vstack([np.zeros(s.shape[1]), np.cumsum(s * s, axis=0)])
    sums = c1[h:] - c1[:-h]
    sqsums = c2[h:] - c2[:-h]
    variances = (sqsums - sums * sums / h) / (h - 1)
    starts = np.argmin(variances, axis=0)
    cols = np.arange(proj.shape[1])
    factor = np.sqrt(trimming_consistency(1, h / n))
    loc = sums[starts, cols] / h
    scale = factor * np.sqrt(np.maximum(variances[starts, cols], 0.0))
    return loc, scale


def _svd_reduce(values: np.ndarray):
    """Represent the rows inside their affine span: scores, basis, origin."""
    center = values.mean(axis=0)
    centered = values - center
    u, s, vt = np.linalg.svd(centered, full_matrices=False)
    tol = s[0] * max(values.shape) * np.finfo(float).eps if s.size else 0.0
    r = int((s > tol).sum())
    if r == 0:
        raise DegenerateDataError("all observations coincide")
    return u[:, :r] * s[:r], vt[:r].T, center


def od_cutoff(ods, prob: float = 0.975) -> tuple[float, bool]:
    """Cutoff for orthogonal distances via their two-thirds power.

    Squared orthogonal distances behave like a scaled chi-square, which the
    Wilson-Hilferty transformation turns into an approximate normal: apply
    the minimum-variance-window estimator to od^(2/3) and return
    (location + scale * z_prob)^(3/2).  Returns ``(max(ods), True)`` when the
    window scale collapses to zero.
    """
    arr = np.asarray(ods, dtype=float).ravel()
    if arr.size == 0 or (arr < 0).any():
        raise ValueError("orthogonal distances must be a nonempty nonnegative vector")
    n = arr.size
    h = min(n, max(2, int(np.floor(0.75 * n))))
    transformed = arr ** (2.0 / 3.0)
    from .univariate import univariate_mcd

    est = univariate_mcd(transformed, h)
    if est.scale == 0.0:
        return float(arr.max()), True
    raw = est.location + est.scale * normal_quantile(prob)
    return float(max(raw, 0.0) ** 1.5), False


def robpca(
    data: Dataset,
    k: int | None = None,
    cfg: McdConfig = McdConfig(),
    ndirs: int = 250,
    scale_columns: bool = False,
    variance_share: float = 0.80,
) -> PcaModel:
    """Fit the robust principal component model with ``k`` components.

    When ``k`` is ``None`` it becomes the smallest count whose eigenvalue sum
    reaches ``variance_share`` of the trimmed subset's total.  Deterministic
    given ``cfg.seed``.
    """
    values = np.array(data.values, dtype=float)
    column_scale = None
    if scale_columns:
        column_scale = np.array([mad(values[:, j]) for j in range(data.p)])
        if np.any(column_scale <= 0):
            raise DegenerateDataError("a column has zero robust scale")
        values = values / column_scale

    n = data.n
    Z, basis, origin = _svd_reduce(values)
    r = Z.shape[1]
    if k is not None and not 1 <= k <= r:
        raise RankTooLowError(f"need 1 <= k <= rank {r}, got k={k}")
    if n <= (k or 1):
        raise RankTooLowError(f"need n > k, got n={n}, k={k}")

    h = cfg.h if cfg.h is not None else default_h(n, k if k is not None else 1, cfg.alpha)
    out = outlyingness(validate(Z), ndirs=ndirs, seed=cfg.seed, h=h)
    keep = np.argsort(out, kind="stable")[:h]

    sub = Z[keep]
    mu_h = sub.mean(axis=0)
    centered = sub - mu_h
    sigma_h = centered.T @ centered / h
    evals, evecs = np.linalg.eigh(sigma_h)
    evals, evecs = evals[::-1], evecs[:, ::-1]
    if k is None:
        total = evals.sum()
        if total <= 0:
            raise DegenerateDataError("trimmed subset has zero variance")
        k = int(np.searchsorted(np.cumsum(evals) / total, variance_share) + 1)
        k = min(k, r)
    W = evecs[:, :k]

    T0 = (Z - mu_h) @ W
    inner = fast_mcd(validate(T0), McdConfig(
        h=h, nstarts=cfg.nstarts, n_refine=cfg.n_refine,
        cutoff_prob=cfg.cutoff_prob, seed=cfg.seed,
    ))
    lam, E = np.linalg.eigh(inner.reweighted.sigma)
    lam, E = lam[::-1], E[:, ::-1]
    if lam[-1] <= 0:
        raise ZeroEigenvalueError("score scatter is singular; reduce k")

    loadings = basis @ W @ E
    center = origin + basis @ (mu_h + W @ inner.reweighted.mu)

    # Orient each component so its largest-magnitude score is positive; the
    # rule depends only on score values, so it survives orthogonal transforms.
    t = (values - center) @ loadings
    for j in range(k):
        i_star = int(np.argmax(np.abs(t[:, j])))
        if t[i_star, j] < 0:
            loadings[:, j] = -loadings[:, j]
            t[:, j] = -t[:, j]

    resid = values - center - t @ loadings.T
    ods = np.sqrt(np.einsum("ij,ij->i", resid, resid))
    cutoff, degenerate = od_cutoff(ods, cfg.cutoff_prob)
    return PcaModel(
        center=center,
        loadings=loadings,
        eigenvalues=lam,
        k=k,
        od_cutoff=cutoff,
        sd_cutoff=float(np.sqrt(chi2_quantile(k, cfg.cutoff_prob))),
        od_degenerate=degenerate,
        column_scale=column_scale,
    )


def _model_values(model: PcaModel, data: Dataset) -> np.ndarray:
    if model.column_scale is not None:
        return data.values / model.column_scale
    return np.asarray(data.values, dtype=float)


def scores(model: PcaModel, data: Dataset) -> np.ndarray:
    """Coordinates of each observation in the component basis."""
    return (_model_values(model, data) - model.center) @ model.loadings


def orthogonal_distances(model: PcaModel, data: Dataset) -> np.ndarray:
    """Euclidean distance from each observation to the fitted subspace."""
    values = _model_values(model, data)
    t = (values - model.center) @ model.loadings
    resid = values - model.center - t @ model.loadings.T
    return np.sqrt(np.einsum("ij,ij->i", resid, resid))


def score_distances(model: PcaModel, data: Dataset) -> np.ndarray:
    """Mahalanobis-type distance of the scores in the eigenvalue metric."""
    if np.any(model.eigenvalues <= 0):
        raise ZeroEigenvalueError("score distances need positive eigenvalues")
    t = scores(model, data)
    return np.sqrt(((t * t) / model.eigenvalues).sum(axis=1))


def pca_outlier_map(model: PcaModel, data: Dataset, cutoff_prob: float = 0.975) -> OutlierMap:
    """Orthogonal distance against score distance with the model's cutoffs."""
    sd = score_distances(model, data)
    od = orthogonal_distances(model, data)
    flags = classify_map_points(
        sd > model.sd_cutoff, od > model.od_cutoff, "orthogonal_outlier"
    )
    return OutlierMap(
        kind="pca_map",
        x_dist=sd,
        y_dist=od,
        flags=flags,
        x_cutoff=model.sd_cutoff,
        y_cutoff=model.od_cutoff,
        cutoff_prob=cutoff_prob,
    )
