"""Spectral toolkit for the anisotropic Lorentzian kernel family."""

from .errors import (AnisoKernelError, ConvergenceError, DivergenceError, DomainError,
                     InvariantViolation, ParameterError)
from .kernel import KernelParams

__version__ = "0.1.0"

__all__ = [
    "AnisoKernelError",
    "ConvergenceError",
    "DivergenceError",
    "DomainError",
    "InvariantViolation",
    "ParameterError",
    "KernelParams",
    "__version__",
]
