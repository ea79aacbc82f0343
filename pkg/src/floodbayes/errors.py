"""Exception hierarchy.

Validation-type errors (bad files, bad arguments) subclass ``ValueError``;
numerical failures (sampler start, optimiser, decomposition invariants)
subclass ``RuntimeError``. The CLI maps the first group to exit code 2 and
the second to exit code 3.
"""

from __future__ import annotations


class FloodBayesError(Exception):
    """Base class for all package errors."""


class ValidationError(FloodBayesError, ValueError):
    """Input data violates a documented invariant."""


class FormatError(ValidationError):
    """A file could not be parsed under its canonical schema."""

    def __init__(self, message: str, path=None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)


class AlignmentError(ValidationError):
    """Stage and covariate years do not line up."""


class InsufficientDataError(ValidationError):
    """Too few observations for the requested computation."""


class ParameterError(ValidationError):
    """Distribution parameters outside their admissible domain."""


class DomainError(ValidationError):
    """Argument outside the domain of a function (probability, period)."""


class NumericalError(FloodBayesError, RuntimeError):
    """Base class for numerical failures."""


class InitializationError(NumericalError):
    """No starting point with finite log-posterior could be found."""


class ConvergenceError(NumericalError):
    """Optimiser hit its iteration cap; ``best`` holds the best point found."""

    def __init__(self, message: str, best=None, best_value: float | None = None):
        super().__init__(message)
        self.best = best
        self.best_value = best_value


class DecompositionError(NumericalError):
    """A decomposition invariant (cumulative monotonicity) was violated."""
