"""Exception hierarchy.

Validation problems derive from ``ValueError``; numerical failures derive
from ``ArithmeticError`` so callers (and the CLI exit-code mapping) can
tell the two apart.
"""


class SmilecastError(Exception):
    """Base class for all package errors."""


class InvalidInputError(SmilecastError, ValueError):
    """An argument violates a documented precondition or type invariant."""


class NoSolutionError(SmilecastError, ValueError):
    """A price lies outside the no-arbitrage bounds, so no implied vol exists."""


class TooShortError(InvalidInputError):
    """A series is too short for the requested operation."""


class DegenerateInputError(InvalidInputError):
    """Input is structurally degenerate (duplicate strikes, zero variance...)."""


class DataError(InvalidInputError):
    """A dataset file failed to parse or validate."""


class NumericalError(SmilecastError, ArithmeticError):
    """Base class for numerical failures."""


class ConvergenceError(NumericalError):
    """An iterative solver hit its iteration cap without converging."""


class SingularMatrixError(NumericalError):
    """A regression or Hessian matrix is singular."""
