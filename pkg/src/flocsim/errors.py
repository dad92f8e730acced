"""Exception hierarchy shared by all modules."""


class FlocsimError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(FlocsimError):
    """Invalid model parameters, scenario files, or solver settings."""


class DomainError(FlocsimError):
    """An input lies outside the mathematical domain of an operation."""


class BracketError(FlocsimError):
    """Root bracketing failed: no sign change on the given interval."""


class NumericsError(FlocsimError):
    """A numerical kernel failed to converge (never silent)."""


class IntegrationError(NumericsError):
    """Time integration aborted before reaching the end of the interval.

    Attributes
    ----------
    t_last : float
        Last time for which a valid state is available.
    trajectory :
        Partial trajectory up to ``t_last``, when the caller may want it.
    """

    def __init__(self, message, t_last=None, trajectory=None):
        super().__init__(message)
        self.t_last = t_last
        self.trajectory = trajectory
