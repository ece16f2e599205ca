"""Pointwise evaluation of the anisotropic Lorentzian kernel family.

The full kernel is

    K(x, y) = 1 / (pi * (T^2 + (x - y)^2 + a^2 (x^2 + y^2)^t))

with ``t = 2`` the physically motivated case. For ``a = 0`` it reduces to a
convolution with the Cauchy density of width ``T``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, DomainError, ParameterError

__all__ = [
    "KernelParams",
    "eval_full",
    "eval_antisym",
    "eval_polar_antisym",
    "eval_convolution_symbol",
    "hs_norm_squared",
    "ridge_width",
]


@dataclass(frozen=True)
class KernelParams:
    """One member of the kernel family.

    Attributes
    ----------
    a : float
        Anisotropy strength, ``a >= 0``.
    T : float
        Temperature, ``T > 0``.
    t : float
        Confinement exponent, ``t > 0``; ``t = 2`` is the quartic case.
    """

    a: float
    T: float = 1.0
    t: float = 2.0

    def __post_init__(self):
        for name in ("a", "T", "t"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ParameterError(f"{name} must be finite, got {v!r}")
        if self.a < 0:
            raise ParameterError(f"a must be >= 0, got {self.a}")
        if self.T <= 0:
            raise ParameterError(f"T must be > 0, got {self.T}")
        if self.t <= 0:
            raise ParameterError(f"t must be > 0, got {self.t}")

    def require_quartic(self, what):
        if self.t != 2:
            raise ParameterError(f"{what} is only defined for t = 2 (got t = {self.t})")

    @property
    def reduced_a(self):
        """Anisotropy of the equivalent ``T = 1`` kernel after rescaling ``x -> T x``."""
        return self.a * self.T ** (self.t - 1.0)


def _check_finite(*arrays):
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise DomainError("kernel arguments must be finite")


def _confinement(p, rho2):
    # a^2 (x^2 + y^2)^t, written to stay exact for the default t = 2
    if p.t == 2:
        return (p.a * rho2) ** 2
    return p.a ** 2 * rho2 ** p.t


def eval_full(p, x, y):
    """Full kernel ``K(x, y)``; broadcasts over array arguments."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_finite(x, y)
    d = x - y
    den = p.T ** 2 + d * d + _confinement(p, x * x + y * y)
    out = 1.0 / (math.pi * den)
    return out if out.ndim else float(out)


def eval_antisym(p, x, y):
    """Antisymmetrized kernel ``K'(x, y) = (K(x, y) - K(x, -y)) / 2`` at ``T = 1``.

    Evaluated as the single fraction ``4xy / (2 pi [(1 + x^2 + y^2 + a^2 rho^4)^2 - 4 x^2 y^2])``,
    which has no cancellation for large arguments.
    """
    if p.T != 1:
        raise ParameterError("K' is defined at T = 1 only; rescale with scaling_tc first")
    p.require_quartic("eval_antisym")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_finite(x, y)
    rho2 = x * x + y * y
    c = 1.0 + rho2 + (p.a * rho2) ** 2
    xy = x * y
    # c^2 - 4x^2y^2 factored as (c - 2xy)(c + 2xy), both factors > 0
    den = (c - 2.0 * xy) * (c + 2.0 * xy)
    out = 4.0 * xy / (2.0 * math.pi * den)
    return out if out.ndim else float(out)


def eval_polar_antisym(p, r, phi):
    """``K'`` at ``x = r cos(phi)``, ``y = r sin(phi)`` in polar form."""
    if p.T != 1:
        raise ParameterError("K' is defined at T = 1 only; rescale with scaling_tc first")
    p.require_quartic("eval_polar_antisym")
    r = np.asarray(r, dtype=float)
    phi = np.asarray(phi, dtype=float)
    _check_finite(r, phi)
    if np.any(r < 0):
        raise DomainError("r must be >= 0")
    r2 = r * r
    s = np.sin(2.0 * phi)
    c = 1.0 + r2 + (p.a * r2) ** 2
    den = (c - r2 * s) * (c + r2 * s)
    out = r2 * s / (math.pi * den)
    return out if out.ndim else float(out)


def eval_convolution_symbol(T, s):
    """Fourier symbol ``exp(-T|s|) / T`` of the ``a = 0`` convolution kernel."""
    if not (T > 0):
        raise ParameterError(f"T must be > 0, got {T}")
    s = np.asarray(s, dtype=float)
    out = np.exp(-T * np.abs(s)) / T
    return out if out.ndim else float(out)


def ridge_width(p, x):
    """Local length scale of ``y -> K(x, y)`` near the diagonal.

    Used to grade quadrature panels. The Lorentzian ridge has width
    ``sqrt(T^2 + a^2 (2x^2)^t)``; the confinement term varies on a scale
    proportional to ``|x|``, which caps the width.
    """
    x = np.abs(np.asarray(x, dtype=float))
    ridge = np.sqrt(p.T ** 2 + _confinement(p, 2.0 * x * x))
    return np.minimum(ridge, np.maximum(0.5 * x / p.t, p.T))


def hs_norm_squared(p, resolution=64):
    """Hilbert-Schmidt norm squared ``int int K^2 dx dy``.

    Polar coordinates: trapezoid rule in the angle (periodic integrand) and
    Gauss-Legendre panels in ``log r``. The radial cut-off ``R`` is chosen so
    that the discarded tail ``int_R^inf 2 pi r / (pi^2 a^4 r^8) dr`` is below
    ``1e-12``.

    Raises
    ------
    DivergenceError
        For ``a = 0`` the kernel is a convolution and not square integrable.
    """
    p.require_quartic("hs_norm_squared")
    if p.a == 0:
        raise DivergenceError("a = 0: convolution kernel is not Hilbert-Schmidt")
    resolution = int(resolution)
    if resolution < 8:
        raise ParameterError("resolution must be >= 8")
    r_max = (1.0 / (3.0 * math.pi * p.a ** 4 * 1e-12)) ** (1.0 / 6.0)
    r_min = 1e-6 * p.T

    # radial Gauss-Legendre panels in u = log r; the region r < r_min is
    # integrated exactly using K ~ 1/(pi T^2) there.
    n_panels = max(4, resolution // 4)
    gx, gw = np.polynomial.legendre.leggauss(16)
    edges = np.linspace(math.log(r_min), math.log(r_max), n_panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    u = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
    wu = (half[:, None] * gw[None, :]).ravel()
    r = np.exp(u)

    n_phi = 8 * resolution
    phi = np.arange(n_phi) * (2.0 * math.pi / n_phi)
    sin2 = np.sin(2.0 * phi)
    r2 = (r * r)[:, None]
    den = p.T ** 2 + r2 * (1.0 - sin2[None, :]) + (p.a * r2) ** 2
    ang = (1.0 / (math.pi * den)) ** 2
    angular = ang.sum(axis=1) * (2.0 * math.pi / n_phi)
    core = math.pi * r_min ** 2 / (math.pi * p.T ** 2) ** 2
    return float(np.sum(wu * r * r * angular) + core)
