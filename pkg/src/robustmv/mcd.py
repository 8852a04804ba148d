"""Minimum covariance determinant location/scatter with the fast two-phase search.

The estimator looks for the h-subset of observations whose covariance matrix
has minimal determinant.  The search draws many small random starts, applies
two concentration steps to each, fully iterates only the most promising
candidates, rescales the winning covariance for Gaussian consistency, and
finally computes the usual one-step reweighted estimate.  Everything is
deterministic given the seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset, LocationScatter, default_h
from .exceptions import (
    DegenerateDataError,
    SingularScatterError,
    SubsetTooSmallError,
    TooFewInliersError,
    TooFewRowsError,
)
from .univariate import chi2_quantile, trimming_consistency

__all__ = [
    "McdConfig",
    "McdResult",
    "mahalanobis_distances",
    "c_step",
    "initial_subsets",
    "consistency_factor",
    "reweight_mcd",
    "fast_mcd",
    "robust_distances",
]

# Condition number at or above which a scatter matrix counts as singular.
COND_MAX = 1e12

# Safety cap only: the concentration sequence provably terminates on its own.
MAX_CSTEPS = 200


@dataclass(frozen=True)
class McdConfig:
    """Tuning knobs for the subset search.

    ``h`` overrides the subset size; when ``None`` it is derived from
    ``alpha`` via :func:`robustmv.dataset.default_h`.  ``nstarts`` random
    starts each get two concentration steps; the ``n_refine`` distinct best
    are iterated to convergence.
    """

    alpha: float = 0.75
    h: int | None = None
    nstarts: int = 500
    n_refine: int = 10
    cutoff_prob: float = 0.975
    seed: int = 0

    def resolve_h(self, n: int, p: int) -> int:
        if self.h is not None:
            if not p + 1 <= self.h <= n:
                raise SubsetTooSmallError(
                    f"need p+1 <= h <= n, got h={self.h}, n={n}, p={p}"
                )
            return self.h
        return default_h(n, p, self.alpha)


@dataclass(frozen=True)
class McdResult:
    """Raw and reweighted estimates plus the diagnostics that came with them.

    ``weights`` flags the observations whose distance at the raw estimates
    passed the chi-square cutoff; ``robust_distances`` are recomputed at the
    reweighted estimates.
    """

    raw: LocationScatter
    reweighted: LocationScatter
    best_subset: tuple[int, ...]
    weights: np.ndarray
    robust_distances: np.ndarray
    exact_fit: bool = field(default=False, compare=False)


def _spd_inverse_sqrt(sigma: np.ndarray):
    """Return M with M M' = sigma^-1, or None when sigma is numerically singular."""
    eig, vec = np.linalg.eigh(sigma)
    if eig[-1] <= 0.0 or eig[0] <= eig[-1] / COND_MAX:
        return None
    return vec / np.sqrt(eig)


def _distances(values: np.ndarray, mu: np.ndarray, inv_sqrt: np.ndarray) -> np.ndarray:
    z = (values - mu) @ inv_sqrt
    return np.sqrt(np.einsum("ij,ij->i", z, z))


def _mean_cov(values: np.ndarray, idx: np.ndarray):
    """Mean and (1/h)-normalized covariance of the selected rows."""
    sub = values[idx]
    mu = sub.mean(axis=0)
    centered = sub - mu
    sigma = centered.T @ centered / len(idx)
    return mu, sigma


def _logdet(sigma: np.ndarray) -> float:
    sign, val = np.linalg.slogdet(sigma)
    return float(val) if sign > 0 else -np.inf


def _det_from_logdet(logdet: float) -> float:
    return float(np.exp(logdet)) if np.isfinite(logdet) else 0.0


def mahalanobis_distances(data: Dataset, est: LocationScatter) -> np.ndarray:
    """Distances sqrt((x - mu)' sigma^-1 (x - mu)) for every row of ``data``."""
    inv_sqrt = _spd_inverse_sqrt(est.sigma)
    if inv_sqrt is None:
        raise SingularScatterError("scatter matrix is numerically singular")
    return _distances(data.values, est.mu, inv_sqrt)


def c_step(data: Dataset, est: LocationScatter, h: int):
    """One concentration step: keep the h rows closest under ``est`` and refit.

    Ties on distance are broken toward the lower row index.  When ``est`` is
    itself the mean/covariance of an h-subset, the determinant of the returned
    scatter never exceeds that of ``est``.
    """
    values = data.values
    if not est.p + 1 <= h <= data.n:
        raise SubsetTooSmallError(f"need p+1 <= h <= n, got h={h}")
    d = mahalanobis_distances(data, est)
    keep = np.argsort(d, kind="stable")[:h]
    subset = tuple(sorted(int(i) for i in keep))
    mu, sigma = _mean_cov(values, np.array(subset))
    logdet = _logdet(sigma)
    new_est = LocationScatter(
        mu, sigma, _det_from_logdet(logdet), h, kind="raw",
        exact_fit=not np.isfinite(logdet),
    )
    return subset, new_est


def initial_subsets(
    data: Dataset, h: int, nstarts: int, seed: int
) -> list[tuple[int, ...]]:
    """Starting h-subsets, each concentrated from a random (p+1)-point draw.

    A draw whose covariance is singular is extended with further random rows
    until it is not; if even the full dataset stays singular the data are
    degenerate.  The returned list is fully determined by ``seed``.
    """
    rng = np.random.default_rng(seed)
    return [_one_initial_subset(data, h, rng) for _ in range(nstarts)]


def _one_initial_subset(data: Dataset, h: int, rng: np.random.Generator):
    values = data.values
    n, p = values.shape
    chosen = list(rng.choice(n, size=p + 1, replace=False))
    extension = [i for i in rng.permutation(n) if i not in set(chosen)]
    while True:
        mu, sigma = _mean_cov(values, np.array(chosen))
        inv_sqrt = _spd_inverse_sqrt(sigma)
        if inv_sqrt is not None:
            break
        if not extension:
            raise DegenerateDataError(
                "covariance of the full dataset is singular; no usable start exists"
            )
        chosen.append(int(extension.pop(0)))
    d = _distances(values, mu, inv_sqrt)
    keep = np.argsort(d, kind="stable")[:h]
    return tuple(sorted(int(i) for i in keep))


def consistency_factor(h: int, n: int, p: int) -> float:
    """Gaussian consistency factor for the raw h-subset covariance; 1 at h = n."""
    if not p + 1 <= h <= n:
        raise SubsetTooSmallError(f"need p+1 <= h <= n, got h={h}, n={n}")
    return trimming_consistency(p, h / n)


def _estimate_of_subset(values, subset, h, n, p) -> LocationScatter:
    """Consistency-scaled raw estimate for a final subset."""
    mu, sigma = _mean_cov(values, np.array(subset))
    factor = consistency_factor(h, n, p)
    sigma_scaled = factor * sigma
    logdet = _logdet(sigma_scaled)
    return LocationScatter(
        mu, sigma_scaled, _det_from_logdet(logdet), h, kind="raw",
        consistency=factor, exact_fit=not np.isfinite(logdet),
    )


def reweight_mcd(data: Dataset, raw: LocationScatter, cutoff_prob: float = 0.975):
    """One-step weighted mean/covariance keeping rows within the chi-square cutoff.

    Weights are 1 exactly when the distance at the raw estimates is at most
    sqrt(chi2_quantile(p, cutoff_prob)).  The weighted covariance is rescaled
    by the trimming consistency factor for the retained probability mass.
    """
    values = data.values
    n, p = values.shape
    d = mahalanobis_distances(data, raw)
    cutoff = np.sqrt(chi2_quantile(p, cutoff_prob))
    weights = (d <= cutoff).astype(int)
    kept = int(weights.sum())
    if kept <= p:
        raise TooFewInliersError(f"only {kept} observations within the cutoff")
    idx = np.flatnonzero(weights)
    mu, sigma = _mean_cov(values, idx)
    factor = trimming_consistency(p, cutoff_prob)
    sigma_scaled = factor * sigma
    logdet = _logdet(sigma_scaled)
    est = LocationScatter(
        mu, sigma_scaled, _det_from_logdet(logdet), kept, kind="reweighted",
        consistency=factor, exact_fit=not np.isfinite(logdet),
    )
    return est, weights


def robust_distances(data: Dataset, result: McdResult) -> np.ndarray:
    """Distances of every row at the reweighted estimates."""
    return mahalanobis_distances(data, result.reweighted)


def fast_mcd(data: Dataset, cfg: McdConfig = McdConfig()) -> McdResult:
    """Approximate MCD location/scatter via the two-phase concentration search.

    Every start receives exactly two concentration steps; the ``n_refine``
    distinct subsets with lowest determinant are then iterated until their
    subset no longer changes.  The winner is the candidate with the smallest
    determinant (ties broken by start order), rescaled for consistency and
    refined by one reweighting step.  An exactly-fitting subset (singular
    covariance) short-circuits the search and is returned flagged.
    """
    values = data.values
    n, p = values.shape
    if n <= p:
        raise TooFewRowsError(f"need n > p, got n={n}, p={p}")
    h = cfg.resolve_h(n, p)

    if h == n:
        all_rows = tuple(range(n))
        raw = _estimate_of_subset(values, all_rows, h, n, p)
        if raw.exact_fit:
            return _exact_fit_result(data, all_rows, raw)
        return _finish(data, all_rows, raw, cfg.cutoff_prob)

    starts = initial_subsets(data, h, cfg.nstarts, cfg.seed)
    candidates = []  # (logdet, start_index, subset)
    for s, subset in enumerate(starts):
        for _ in range(2):
            mu, sigma = _mean_cov(values, np.array(subset))
            inv_sqrt = _spd_inverse_sqrt(sigma)
            if inv_sqrt is None:
                # A singular h-subset already attains the minimal objective.
                raw = _estimate_of_subset(values, subset, h, n, p)
                return _exact_fit_result(data, subset, raw)
            d = _distances(values, mu, inv_sqrt)
            keep = np.argsort(d, kind="stable")[:h]
            subset = tuple(sorted(int(i) for i in keep))
        mu, sigma = _mean_cov(values, np.array(subset))
        candidates.append((_logdet(sigma), s, subset))

    candidates.sort(key=lambda c: (c[0], c[1]))
    refine, seen = [], set()
    for logdet, s, subset in candidates:
        if subset not in seen:
            seen.add(subset)
            refine.append((logdet, s, subset))
        if len(refine) == cfg.n_refine:
            break

    finished = []
    for logdet, s, subset in refine:
        for _ in range(MAX_CSTEPS):
            mu, sigma = _mean_cov(values, np.array(subset))
            inv_sqrt = _spd_inverse_sqrt(sigma)
            if inv_sqrt is None:
                raw = _estimate_of_subset(values, subset, h, n, p)
                return _exact_fit_result(data, subset, raw)
            d = _distances(values, mu, inv_sqrt)
            keep = np.argsort(d, kind="stable")[:h]
            new_subset = tuple(sorted(int(i) for i in keep))
            if new_subset == subset:
                break
            subset = new_subset
        mu, sigma = _mean_cov(values, np.array(subset))
        finished.append((_logdet(sigma), s, subset))

    finished.sort(key=lambda c: (c[0], c[1]))
    _, _, best = finished[0]
    raw = _estimate_of_subset(values, best, h, n, p)
    if raw.exact_fit:
        return _exact_fit_result(data, best, raw)
    return _finish(data, best, raw, cfg.cutoff_prob)


def _finish(data: Dataset, subset, raw: LocationScatter, cutoff_prob: float) -> McdResult:
    reweighted, weights = reweight_mcd(data, raw, cutoff_prob)
    rd = mahalanobis_distances(data, reweighted)
    return McdResult(raw, reweighted, subset, weights, rd, exact_fit=False)


def _exact_fit_result(data: Dataset, subset, raw: LocationScatter) -> McdResult:
    """Result for an h-subset lying on a hyperplane: reported, not fatal.

    Weights mark the rows on that hyperplane; distances are measured inside
    it and are infinite for rows off it.  No reweighting step is possible, so
    the reweighted slot repeats the raw estimate.
    """
    values = data.values
    eig, vec = np.linalg.eigh(raw.sigma)
    scale = max(eig[-1], 0.0)
    null_mask = eig <= scale / COND_MAX
    centered = values - raw.mu
    off_plane = np.zeros(data.n, dtype=bool)
    if null_mask.any():
        resid = centered @ vec[:, null_mask]
        tol = 1e-8 * np.sqrt(scale if scale > 0 else 1.0)
        off_plane = np.sqrt(np.einsum("ij,ij->i", resid, resid)) > tol
    live = ~null_mask & (eig > 0)
    if live.any():
        z = centered @ (vec[:, live] / np.sqrt(eig[live]))
        d = np.sqrt(np.einsum("ij,ij->i", z, z))
    else:
        d = np.zeros(data.n)
    d = np.where(off_plane, np.inf, d)
    weights = (~off_plane).astype(int)
    reweighted = LocationScatter(
        raw.mu, raw.sigma, raw.det, raw.h, kind="reweighted",
        consistency=raw.consistency, exact_fit=True,
    )
    return McdResult(raw, reweighted, subset, weights, d, exact_fit=True)
