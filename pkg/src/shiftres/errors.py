"""Exception hierarchy shared by all modules."""


class ShiftresError(Exception):
    """Base class for every error raised by the package."""


class ConfigurationError(ShiftresError, ValueError):
    """Invalid parameters, shapes or configuration keys."""


class DivergenceError(ShiftresError, ArithmeticError):
    """A numerical integration produced a non-finite state."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class TimescaleUndefinedError(ShiftresError, ValueError):
    """The autocorrelation never decays to one half within the signal."""


class BufferExceededError(ShiftresError, IndexError):
    """A time shift reaches outside the recorded trajectory."""

    def __init__(self, message, node=None, shift=None):
        super().__init__(message)
        self.node = node
        self.shift = shift


class NumericalError(ShiftresError, ArithmeticError):
    """A linear solve failed or returned non-finite values."""


class UndefinedErrorMetric(ShiftresError, ValueError):
    """Normalized error requested for a zero-variance target."""
