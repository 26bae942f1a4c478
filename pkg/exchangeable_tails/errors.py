from __future__ import annotations


class TailsError(Exception):
    """Base class for every error raised by exchangeable_tails."""


class DomainError(TailsError, ValueError):
    """A parameter or argument lies outside its mathematical domain."""


class FormMismatchError(DomainError):
    """An operation received a tail envelope of the wrong form."""


class DegeneratePartitionError(DomainError):
    """A partition cell is too rare to be resolved by the requested trials."""


class NonConvergenceError(TailsError, ArithmeticError):
    """Quadrature refinement exhausted its evaluation budget."""


class IllConditionedError(TailsError, ArithmeticError):
    """A least-squares design matrix is numerically singular."""


class BudgetExceededError(TailsError):
    """A sweep lattice is larger than the configured cap."""


class ConfigError(TailsError):
    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class EndpointSingularityWarning(UserWarning):
    """The integrand has an integrable singularity at the origin."""
