"""Exception types shared across the package."""


class OmqsdError(Exception):
    """Base class for all package errors."""


class DimensionError(OmqsdError):
    """Operator/state dimensions are invalid or inconsistent."""


class TruncationError(OmqsdError):
    """A truncated representation leaks too much weight to be trusted."""


class StiffnessError(OmqsdError):
    """Requested step size too coarse for the fastest rate in the problem."""


class DivergenceError(OmqsdError):
    """An integration blew up; carries the time (and seed, if stochastic)."""

    def __init__(self, message, t=None, seed=None):
        super().__init__(message)
        self.t = t
        self.seed = seed


class GridMismatchError(OmqsdError):
    """Two time series do not share dt and length."""


class ConfigError(OmqsdError):
    """Configuration failed validation; names the offending key."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
