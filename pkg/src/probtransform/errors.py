"""Exception hierarchy.

Every error raised by the library derives from :class:`ProbTransformError`,
which is itself a ``ValueError`` so callers that only care about bad input
can catch the builtin.
"""

from __future__ import annotations


class ProbTransformError(ValueError):
    """Base class for all library errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


class InvalidProbability(ProbTransformError):
    """A probability pair is not normalized or has a negative component."""


class NonNormalizable(ProbTransformError):
    """Deviation coefficients violate the orthogonality constraint for the given input."""


class OutOfRange(ProbTransformError):
    """A transformed probability falls outside [0, 1]."""


class DegenerateInput(ProbTransformError):
    """An input probability (or count) is zero, so relative deviations are undefined."""


class InvalidCoefficients(ProbTransformError):
    """Deviation coefficients outside the admissible set (e.g. a coefficient below -1)."""


class InfeasiblePhase(ProbTransformError):
    """A phase would push some output probability outside [0, 1]."""

    def __init__(self, message: str, theta: float | None = None):
        super().__init__(message)
        self.theta = theta


class DomainError(ProbTransformError):
    """A phase lies outside the domain of a deviation profile."""


class EmptyRange(ProbTransformError):
    """No phase in the profile domain yields valid output probabilities."""


class SizeMismatch(ProbTransformError):
    """Two ensembles that should share a population size do not."""
