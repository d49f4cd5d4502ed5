"""Exception hierarchy shared across the package."""


class OdeInferError(Exception):
    """Base class for all package errors."""


class DomainError(OdeInferError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class OutOfRangeError(DomainError):
    """A query time falls outside the span covered by a trajectory."""


class SolverError(OdeInferError):
    """A forward solve could not be completed."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class DivergenceError(SolverError):
    """A non-finite state or stage value was produced."""


class StepBudgetExceeded(SolverError):
    """The adaptive solver ran out of its step budget."""


class StepSizeUnderflow(SolverError):
    """The adaptive step size collapsed (usually stiffness)."""


class ScanError(OdeInferError):
    """Every point of a likelihood scan failed."""


class InitializationError(OdeInferError):
    """No MCMC starting point with finite log posterior was found."""


class ConfigError(OdeInferError, ValueError):
    """Invalid experiment configuration."""


class DataError(OdeInferError, ValueError):
    """Malformed input data file."""
