"""Exception types shared across the package."""


class MkvError(Exception):
    """Base class for all package errors."""


class DimensionError(MkvError, ValueError):
    """An argument has the wrong shape or dimension."""


class TimeOutOfRangeError(MkvError, ValueError):
    """A time argument falls outside the schedule's [0, T] window."""


class InsufficientEnsembleError(MkvError, ValueError):
    """An ensemble operation requires at least two particles."""


class FullRankViolationError(MkvError, ValueError):
    """A pairwise noise-covariance sum is singular; the diffusion-map
    kernel requires full-rank sigma*sigma^T."""


class NumericalBlowupError(MkvError, RuntimeError):
    """A sweep produced non-finite values.

    Carries enough context (step index, time, particle index) to locate
    the failure in a long integration.
    """

    def __init__(self, message, step=None, time=None, particle=None):
        super().__init__(message)
        self.step = step
        self.time = time
        self.particle = particle


class ConvergenceError(MkvError, RuntimeError):
    """An iterative procedure hit its iteration or time cap."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
