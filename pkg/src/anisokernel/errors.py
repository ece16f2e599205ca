"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class AnisoKernelError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(AnisoKernelError, ValueError):
    """Invalid or unsupported parameter combination."""


class DomainError(AnisoKernelError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class DivergenceError(AnisoKernelError, ArithmeticError):
    """The requested quantity is infinite (e.g. a non-compact operator)."""


class ConvergenceError(AnisoKernelError, RuntimeError):
    """An iterative procedure stopped before reaching its tolerance.

    Carries whatever partial information is available so callers can
    still report a best estimate.
    """

    def __init__(self, message, best_estimate=None, last_delta=None, history=None):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.last_delta = last_delta
        self.history = list(history or [])


class InvariantViolation(AnisoKernelError, AssertionError):
    """A proven inequality failed numerically."""
