"""Core numeric containers and validation shared by all estimators.

Everything downstream consumes a validated, immutable ``Dataset`` and produces
``LocationScatter`` estimates.  Arrays held by these containers are marked
read-only so instances can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    EmptyDataError,
    NonFiniteError,
    RaggedRowsError,
    TooFewRowsError,
)

__all__ = ["Dataset", "LocationScatter", "validate", "default_h"]

# Relative tolerances for structural checks on scatter matrices.
SYMMETRY_RTOL = 1e-10
EIGENVALUE_RTOL = 1e-10


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class Dataset:
    """A validated n-by-p numeric matrix with optional column names."""

    values: np.ndarray
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.names is not None and len(self.names) != self.values.shape[1]:
            raise RaggedRowsError(
                f"got {len(self.names)} column names for {self.values.shape[1]} columns"
            )

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def column(self, name: str) -> np.ndarray:
        if self.names is None:
            raise KeyError("dataset has no column names")
        return self.values[:, self.names.index(name)]


def validate(values, names=None) -> Dataset:
    """Build a :class:`Dataset` from raw input, never coercing bad cells.

    Raises:
        RaggedRowsError: rows have unequal lengths.
        EmptyDataError: zero rows or zero columns.
        NonFiniteError: the first NaN/inf found, with its row and column.
    """
    try:
        arr = np.asarray(values, dtype=float)
    except (TypeError, ValueError) as exc:
        # A ragged nested sequence is the common way float conversion fails.
        raise RaggedRowsError(str(exc)) from exc
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise RaggedRowsError(f"expected a 2-d matrix, got ndim={arr.ndim}")
    if arr.dtype == object:
        raise RaggedRowsError("rows have unequal lengths")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise EmptyDataError(f"matrix of shape {arr.shape} has no data")
    bad = ~np.isfinite(arr)
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise NonFiniteError(int(row), int(col))
    return Dataset(_readonly(arr), tuple(names) if names is not None else None)


def default_h(n: int, p: int, alpha: float = 0.75) -> int:
    """Subset size for a coverage fraction ``alpha`` in [0.5, 1].

    Returns ``max(floor(alpha * n), floor((n + p + 1) / 2))`` capped at ``n``:
    alpha = 0.75 is the usual robustness/efficiency compromise, alpha = 0.5
    lands on the maximal-breakdown size floor((n + p + 1) / 2), and alpha = 1
    gives the classical fit.  Flooring keeps the result platform-independent.
    """
    if not 0.5 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0.5, 1], got {alpha}")
    if n <= p:
        raise TooFewRowsError(f"need n > p, got n={n}, p={p}")
    h_max_breakdown = (n + p + 1) // 2
    return min(n, max(int(np.floor(alpha * n)), h_max_breakdown))


@dataclass(frozen=True)
class LocationScatter:
    """A center vector plus symmetric positive-semidefinite scatter matrix.

    ``kind`` records whether the estimate is the raw subset-based one or the
    one-step reweighted refinement; ``consistency`` is the scalar factor that
    was already applied to ``sigma``; ``h`` is the subset size that produced
    the estimate.
    """

    mu: np.ndarray
    sigma: np.ndarray
    det: float
    h: int
    kind: str = "raw"
    consistency: float = 1.0
    exact_fit: bool = field(default=False, compare=False)

    def __post_init__(self):
        mu = _readonly(np.atleast_1d(self.mu))
        sigma = _readonly(np.atleast_2d(self.sigma))
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        p = mu.shape[0]
        if sigma.shape != (p, p):
            raise ValueError(f"sigma shape {sigma.shape} does not match mu length {p}")
        scale = np.abs(sigma).max()
        if scale > 0 and np.abs(sigma - sigma.T).max() > SYMMETRY_RTOL * scale:
            raise ValueError("scatter matrix is not symmetric")
        eig = np.linalg.eigvalsh(sigma)
        if eig.size and eig[0] < -EIGENVALUE_RTOL * max(eig[-1], 0.0):
            raise ValueError(f"scatter matrix has negative eigenvalue {eig[0]}")
        if self.det < 0:
            raise ValueError(f"determinant must be nonnegative, got {self.det}")

    @property
    def p(self) -> int:
        return self.mu.shape[0]
