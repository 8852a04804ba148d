"""Exhaustive reference solvers and contamination generators.

These make the subset-search estimators checkable at desk scale: the exact
minimizers are found by enumerating every h-subset, and the contamination
helpers replace rows with arbitrarily remote points to probe breakdown
behavior.  Enumeration refuses to start beyond a fixed work guard instead of
silently subsampling.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, LocationScatter, validate
from .exceptions import LengthMismatchError, RankDeficientError, TooLargeError
from .lts import fast_lts
from .mcd import McdConfig, fast_mcd

__all__ = [
    "ContaminationSpec",
    "exact_mcd",
    "exact_lts",
    "contaminate",
    "breakdown_probe",
]

ENUMERATION_GUARD = 10**7
_BATCH = 4096


def _combination_batches(n: int, h: int):
    combos = itertools.combinations(range(n), h)
    while True:
        batch = list(itertools.islice(combos, _BATCH))
        if not batch:
            return
        yield np.array(batch, dtype=int)


def exact_mcd(data: Dataset, h: int):
    """Globally minimal-determinant h-subset by full enumeration.

    Returns the subset and its plain (unscaled) mean/covariance estimate.
    Ties go to the lexicographically smallest index set.  Refuses when
    C(n, h) exceeds the work guard.
    """
    n, p = data.n, data.p
    if not p + 1 <= h <= n:
        raise ValueError(f"need p+1 <= h <= n, got h={h}, n={n}")
    if math.comb(n, h) > ENUMERATION_GUARD:
        raise TooLargeError(f"C({n}, {h}) exceeds the enumeration guard")
    values = data.values
    best_logdet, best_subset = np.inf, None
    for combos in _combination_batches(n, h):
        sub = values[combos]                       # (m, h, p)
        mu = sub.mean(axis=1)
        centered = sub - mu[:, None, :]
        cov = np.einsum("mhi,mhj->mij", centered, centered) / h
        sign, logdet = np.linalg.slogdet(cov)
        logdet = np.where(sign > 0, logdet, -np.inf)
        i = int(np.argmin(logdet))                 # first minimum: lexicographic
        if logdet[i] < best_logdet:
            best_logdet = float(logdet[i])
            best_subset = tuple(int(v) for v in combos[i])
        if best_logdet == -np.inf:
            break
    idx = np.array(best_subset)
    sub = values[idx]
    mu = sub.mean(axis=0)
    sigma = (sub - mu).T @ (sub - mu) / h
    det = float(np.exp(best_logdet)) if np.isfinite(best_logdet) else 0.0
    return best_subset, LocationScatter(mu, sigma, det, h, kind="raw")


def exact_lts(x: Dataset, y, h: int, intercept: bool = True):
    """Globally optimal trimmed-squares h-subset by full enumeration.

    For every h-subset the least squares fit is computed and its objective is
    re-evaluated on all n residuals (sum of the h smallest squares).  Ties go
    to the lexicographically smallest index set.
    """
    y = np.asarray(y, dtype=float).ravel()
    n = x.n
    if y.size != n:
        raise LengthMismatchError(f"y has {y.size} entries for {n} rows")
    if math.comb(n, h) > ENUMERATION_GUARD:
        raise TooLargeError(f"C({n}, {h}) exceeds the enumeration guard")
    U = np.column_stack([x.values, np.ones(n)]) if intercept else np.array(x.values)
    d = U.shape[1]
    if not d <= h <= n:
        raise ValueError(f"need {d} <= h <= n, got h={h}")
    best_obj, best_subset, best_theta = np.inf, None, None
    for combos in _combination_batches(n, h):
        Us = U[combos]                             # (m, h, d)
        ys = y[combos]                             # (m, h)
        G = np.einsum("mhi,mhj->mij", Us, Us)
        b = np.einsum("mhi,mh->mi", Us, ys)
        dets = np.linalg.det(G)
        if np.any(np.abs(dets) <= np.finfo(float).tiny):
            raise RankDeficientError("a candidate subset has a rank-deficient design")
        theta = np.linalg.solve(G, b)              # (m, d)
        resid = y[None, :] - theta @ U.T           # (m, n)
        r2 = resid * resid
        obj = np.partition(r2, h - 1, axis=1)[:, :h].sum(axis=1)
        i = int(np.argmin(obj))
        if obj[i] < best_obj:
            best_obj = float(obj[i])
            best_subset = tuple(int(v) for v in combos[i])
            best_theta = theta[i].copy()
    return best_subset, best_theta


@dataclass(frozen=True)
class ContaminationSpec:
    """How many rows to replace, how far away, and in what shape.

    ``point_mass`` puts all replaced rows on one remote point;
    ``cluster`` scatters them with unit spread around it.  ``direction``
    fixes the displacement axis (unit-normalized); when ``None`` a seeded
    random direction is used.
    """

    m: int
    magnitude: float
    placement: str = "point_mass"
    direction: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.m < 0:
            raise ValueError(f"m must be >= 0, got {self.m}")
        if self.placement not in ("point_mass", "cluster"):
            raise ValueError(f"unknown placement {self.placement!r}")


def contaminate(data: Dataset, spec: ContaminationSpec, seed: int = 0) -> Dataset:
    """Replace ``spec.m`` seeded-random rows by remote points."""
    if spec.m >= data.n:
        raise ValueError(f"m must be < n, got m={spec.m}, n={data.n}")
    if spec.m == 0:
        return data
    rng = np.random.default_rng(seed)
    rows = rng.choice(data.n, size=spec.m, replace=False)
    if spec.direction is not None:
        direction = np.asarray(spec.direction, dtype=float)
        if direction.size != data.p:
            raise LengthMismatchError("direction length must equal p")
    else:
        direction = rng.standard_normal(data.p)
    direction = direction / np.linalg.norm(direction)
    target = spec.magnitude * direction
    values = np.array(data.values, copy=True)
    if spec.placement == "point_mass":
        values[rows] = target
    else:
        values[rows] = target + rng.standard_normal((spec.m, data.p))
    return validate(values, data.names)


def _estimate(name: str, data: Dataset, h: int, seed: int) -> np.ndarray:
    """Location (or coefficient) vector of the named estimator.

    For the regression estimators the last column of ``data`` is the response
    and the rest are predictors.
    """
    if name == "classical-mean":
        return data.values.mean(axis=0)
    if name == "mcd":
        cfg = McdConfig(h=h, nstarts=200, seed=seed)
        return fast_mcd(data, cfg).raw.mu
    x = validate(data.values[:, :-1])
    y = data.values[:, -1]
    if name == "ols":
        U = np.column_stack([x.values, np.ones(x.n)])
        return np.linalg.lstsq(U, y, rcond=None)[0]
    if name == "lts":
        cfg = McdConfig(h=h, nstarts=200, seed=seed)
        return fast_lts(x, y, cfg).theta
    raise ValueError(f"unknown estimator {name!r}")


def breakdown_probe(
    estimator: str,
    data: Dataset,
    h: int,
    magnitudes=(1e2, 1e3, 1e4, 1e5, 1e6),
    seed: int = 0,
    ball_radius: float | None = None,
) -> int:
    """Largest m for which the estimate survives every contamination magnitude.

    "Survives" means staying inside a ball around the clean estimate of
    radius ``100 * ||clean|| + 100`` (overridable).  Regression estimators are
    attacked with vertical outliers (response axis), location estimators with
    a seeded random point mass.  Stops at the first failing m, so the answer
    assumes failure is monotone in m.
    """
    if estimator not in ("mcd", "lts", "classical-mean", "ols"):
        raise ValueError(f"unknown estimator {estimator!r}")
    clean = _estimate(estimator, data, h, seed)
    radius = ball_radius
    if radius is None:
        radius = 100.0 * float(np.linalg.norm(clean)) + 100.0
    regression = estimator in ("lts", "ols")
    direction = tuple(0.0 if j < data.p - 1 else 1.0 for j in range(data.p)) if regression else None
    for m in range(1, data.n):
        for magnitude in magnitudes:
            spec = ContaminationSpec(m, magnitude, "point_mass", direction)
            bad = contaminate(data, spec, seed)
            est = _estimate(estimator, bad, h, seed)
            if np.linalg.norm(est - clean) > radius:
                return m - 1
    return data.n - 1
