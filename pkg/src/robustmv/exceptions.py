"""Semantic exception hierarchy shared by all estimators.

Input-shaped problems (bad matrices, bad probabilities, sizes out of range)
derive from ``ValueError`` so that generic callers can catch them the usual
way; estimation failures that depend on the data content (singular scatter,
degenerate configurations, too few inliers) derive from the package base
only.
"""

from __future__ import annotations


class RobustryError(Exception):
    """Base class for every error raised by this package."""


class DataValidationError(RobustryError, ValueError):
    """Input data failed structural validation."""


class EmptyDataError(DataValidationError):
    """Zero rows or zero columns where at least one is required."""


class RaggedRowsError(DataValidationError):
    """Rows of the input matrix have unequal lengths."""


class NonFiniteError(DataValidationError):
    """A NaN or infinity was found; carries the first offending cell."""

    def __init__(self, row: int, col: int):
        self.row = row
        self.col = col
        super().__init__(f"non-finite value at row {row}, column {col}")


class EmptyVectorError(DataValidationError):
    """A nonempty vector was required."""


class LengthMismatchError(DataValidationError):
    """Paired vectors or row counts disagree."""


class BadProbabilityError(DataValidationError):
    """A probability argument fell outside its open or closed interval."""


class TooFewRowsError(DataValidationError):
    """Not enough observations for the requested fit."""


class SubsetTooSmallError(DataValidationError):
    """Requested subset size h is below the estimator's minimum."""


class TooLargeError(DataValidationError):
    """An exhaustive enumeration would exceed the configured guard."""


class EstimationError(RobustryError):
    """Estimation failed because of the data content, not its shape."""


class SingularScatterError(EstimationError):
    """A scatter matrix is (numerically) singular where invertibility is needed."""


class SingularGroupScatterError(SingularScatterError):
    """A per-group scatter matrix is singular."""

    def __init__(self, group, message: str = ""):
        self.group = group
        super().__init__(message or f"singular scatter in group {group!r}")


class DegenerateDataError(EstimationError):
    """The data carry no usable variation (e.g. all rows identical)."""


class AllDirectionsDegenerateError(DegenerateDataError):
    """Every projection direction had zero robust scale."""


class TooFewInliersError(EstimationError):
    """Reweighting kept too few observations for a classical refit."""


class RankDeficientError(EstimationError):
    """A regression design matrix does not have full column rank."""


class RankTooLowError(EstimationError):
    """More components requested than the data rank supports."""


class ZeroEigenvalueError(EstimationError):
    """A score-space metric requires strictly positive eigenvalues."""


class GroupTooSmallError(EstimationError):
    """A class has too few members for a per-group robust fit."""
