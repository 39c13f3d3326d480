"""Exception hierarchy shared by all subdiff modules."""


class SubdiffError(Exception):
    """Base class for every error raised by this package."""


class DomainError(SubdiffError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class RangeError(SubdiffError, OverflowError):
    """A result would overflow double precision."""


class PreconditionError(SubdiffError, ValueError):
    """An input violates a stated precondition (grid too short, path too short, ...)."""


class ResourceError(SubdiffError, RuntimeError):
    """A configured resource guard (path length, memory) was exceeded."""


class UnsupportedError(SubdiffError, NotImplementedError):
    """The requested case is outside what the implementation supports."""


class SimulationError(SubdiffError, RuntimeError):
    """Non-finite values appeared during path simulation.

    Attributes
    ----------
    step : int
        Operational-time step index at which the failure was detected.
    """

    def __init__(self, message, step=None):
        super().__init__(message if step is None else f"{message} (step {step})")
        self.step = step


class SolverError(SubdiffError, RuntimeError):
    """A linear solve inside a time-stepping scheme failed."""


class ConfigError(SubdiffError, ValueError):
    """An experiment configuration was rejected."""
