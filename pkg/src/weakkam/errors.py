"""Exception types shared across the toolkit."""


class WeakKamError(Exception):
    """Base class for all toolkit errors."""


class GridMismatchError(WeakKamError):
    """Two objects that must live on the same grid do not."""


class ConvergenceError(WeakKamError):
    """An iterative computation failed to converge.

    Carries the residual history so callers can diagnose whether the
    failure comes from a non-normalized Hamiltonian or a grid that is
    too coarse.
    """

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = list(residuals) if residuals is not None else []


class PreconditionError(WeakKamError):
    """An operation's documented precondition was violated."""


class ConfigError(WeakKamError):
    """Invalid experiment configuration; ``field`` names the offender."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
