"""Eigenvalues, Rayleigh quotients and eigenfunctions of discretized operators."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import eigh

from .discretize import DiscretizedOperator, Sector, refine_until
from .errors import ConvergenceError, DomainError, ParameterError

__all__ = [
    "SpectrumResult",
    "Gaussian",
    "TruncatedLinear",
    "Tabulated",
    "top_eigenvalues",
    "largest_eigenvalue",
    "rayleigh_quotient",
    "eigenfunction",
    "rescaled_overlap",
    "UNCERTAINTY_FLOOR",
]

# below this a refinement delta is round-off, not discretization error
UNCERTAINTY_FLOOR = 1e-13


@dataclass
class SpectrumResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    deficiencies: np.ndarray
    grid_meta: dict = field(default_factory=dict)

    @property
    def top(self):
        return float(self.eigenvalues[0])


@dataclass(frozen=True)
class Gaussian:
    """Odd test function ``x exp(-h^2 x^2 / 2)``; ``H = 1/h`` is its width."""

    h: float

    def __post_init__(self):
        if not (self.h > 0):
            raise ParameterError("h must be > 0")

    @property
    def H(self):
        return 1.0 / self.h

    parity = "odd"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return x * np.exp(-0.5 * (self.h * x) ** 2)


@dataclass(frozen=True)
class TruncatedLinear:
    """Odd test function ``x`` on ``|x| <= H``, zero outside."""

    H: float

    def __post_init__(self):
        if not (self.H > 0):
            raise ParameterError("H must be > 0")

    @property
    def h(self):
        return 1.0 / self.H

    parity = "odd"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(np.abs(x) <= self.H, x, 0.0)


@dataclass(frozen=True, eq=False)
class Tabulated:
    """Function sampled on the nodes of a quadrature grid.

    For even/odd sectors only the half-line ``x >= 0`` is stored; ``norm`` is
    taken over that half-line. ``reflect`` produces the full-line samples.
    """

    nodes: np.ndarray
    values: np.ndarray
    weights: np.ndarray
    sector: Sector
    degenerate: bool = False

    @property
    def parity(self):
        return {Sector.EVEN: "even", Sector.ODD: "odd"}.get(self.sector)

    def norm(self):
        return math.sqrt(float(np.dot(self.weights, self.values ** 2)))

    def reflect(self):
        """Full-line nodes and values with unit L2 norm on the line."""
        if self.sector is Sector.FULL:
            return self.nodes.copy(), self.values / self.norm()
        sign = 1.0 if self.sector is Sector.EVEN else -1.0
        x = np.concatenate((-self.nodes[::-1], self.nodes))
        v = np.concatenate((sign * self.values[::-1], self.values))
        return x, v / (math.sqrt(2.0) * self.norm())

    def interpolant(self):
        x, v = self.reflect()
        return CubicSpline(x, v, extrapolate=False)


TestFunction = Union[Gaussian, TruncatedLinear, Tabulated]


def _first_sign_change(vec, tol):
    s = np.sign(vec[np.abs(vec) > tol])
    idx = np.nonzero(s[1:] != s[:-1])[0]
    return int(idx[0]) if idx.size else len(vec)


def top_eigenvalues(op, k=1, tol=1e-10):
    """The ``k`` largest eigenpairs of ``op.matrix``, descending.

    Uses LAPACK's symmetric solver; each pair is certified by its residual
    ``||M v - lambda v|| <= tol * ||M||``. Eigenvalues within round-off of
    each other are ordered by the position of the first sign change of the
    eigenvector, which keeps mode labels stable across resolutions.
    """
    m = op.matrix if isinstance(op, DiscretizedOperator) else np.asarray(op, dtype=float)
    n = m.shape[0]
    if not (1 <= k <= n):
        raise ParameterError(f"k must be in [1, {n}], got {k}")
    vals, vecs = eigh(m, subset_by_index=[n - k, n - 1])
    vals = vals[::-1]
    vecs = vecs[:, ::-1]
    norm = max(abs(vals[0]), abs(float(eigh(m, eigvals_only=True, subset_by_index=[0, 0])[0])))
    res = np.linalg.norm(m @ vecs - vecs * vals[None, :], axis=0)
    scale = max(norm, np.finfo(float).tiny)

    gap_tol = max(float(res.max()), 1e-12 * scale)
    keys = []
    for i in range(k):
        bucket = round(vals[i] / gap_tol)
        keys.append((-bucket, _first_sign_change(vecs[:, i], 1e-8), i))
    order = [key[2] for key in sorted(keys)]
    vals, vecs, res = vals[order], vecs[:, order], res[order]

    # fix the sign: first clearly nonzero component positive
    for i in range(k):
        nz = np.nonzero(np.abs(vecs[:, i]) > 1e-8)[0]
        if nz.size and vecs[nz[0], i] < 0:
            vecs[:, i] = -vecs[:, i]

    meta = {}
    if isinstance(op, DiscretizedOperator):
        meta = {"node_count": op.grid.node_count, "truncation_radius": op.grid.truncation_radius,
                "sector": op.sector.value, "label": op.label}
        if op.params is not None:
            meta.update(a=op.params.a, T=op.params.T, t=op.params.t)
    result = SpectrumResult(vals, vecs, res, 1.0 - vals, meta)
    if np.any(res > tol * scale):
        raise ConvergenceError(f"eigen-residual {res.max():.3e} exceeds {tol:g} * ||M||",
                               best_estimate=result)
    return result


def largest_eigenvalue(p, sector, tol=1e-10, **refine_kw):
    """Grid-converged top eigenvalue of the sector operator.

    Returns
    -------
    (value, uncertainty)
        ``uncertainty`` is the last refinement delta, floored at round-off.
    """
    if not (p.a > 0):
        raise DomainError("largest_eigenvalue needs a > 0 (compact operator)")
    _, report = refine_until(p, sector, tol, **refine_kw)
    return report.estimate, max(report.uncertainty, UNCERTAINTY_FLOOR)


def _samples(op, f):
    if isinstance(f, Tabulated):
        if f.sector is not op.sector or f.nodes.shape != op.grid.nodes.shape \
                or not np.array_equal(f.nodes, op.grid.nodes):
            raise DomainError("tabulated function does not live on this operator's grid")
        return f.values
    if op.sector is Sector.EVEN and getattr(f, "parity", None) == "odd":
        raise DomainError("odd test function cannot be represented in the even sector")
    return f(op.grid.nodes)


def rayleigh_quotient(op, f):
    """``<K f, f> / <f, f>`` by grid quadrature."""
    c = op.to_coefficients(_samples(op, f))
    den = float(c @ c)
    if den == 0 or not math.isfinite(den):
        raise DomainError("test function has zero norm on the grid")
    return float(c @ (op.matrix @ c)) / den


def eigenfunction(op, j=0, tol=1e-10):
    """Unit-norm tabulated ``j``-th eigenfunction of ``op``.

    The degenerate flag is set (with a warning) when the gap to a
    neighbouring eigenvalue is below the eigen-residual.
    """
    if not (0 <= j < op.size):
        raise ParameterError(f"j must be in [0, {op.size})")
    k = min(j + 2, op.size)
    spec = top_eigenvalues(op, k, tol)
    vec = spec.eigenvectors[:, j]
    vals = spec.eigenvalues
    gaps = [abs(vals[j] - vals[i]) for i in (j - 1, j + 1) if 0 <= i < k]
    degenerate = bool(gaps) and min(gaps) < max(spec.residuals[j], 1e-14)
    if degenerate:
        warnings.warn(f"eigenvalue {j} is numerically degenerate", RuntimeWarning, stacklevel=2)
    values = op.to_values(vec)
    values = values / math.sqrt(float(np.dot(op.grid.weights, values ** 2)))
    return Tabulated(op.grid.nodes.copy(), values, op.grid.weights.copy(), op.sector, degenerate)


def rescaled_overlap(f, g, scale_f, scale_g, xi_max=8.0, n=2001):
    """Relative L2 distance between two profiles after ``x -> x * scale``.

    Each profile ``u`` becomes ``sqrt(1/scale) u(x / scale)`` (unit norm is
    preserved), sampled on ``|xi| <= xi_max``.
    """
    xi = np.linspace(-xi_max, xi_max, n)
    out = []
    for fn, s in ((f, scale_f), (g, scale_g)):
        spl = fn.interpolant()
        v = np.nan_to_num(spl(xi / s)) / math.sqrt(s)
        out.append(v)
    diff = np.trapezoid((out[0] - out[1]) ** 2, xi)
    ref = np.trapezoid(out[0] ** 2, xi)
    return math.sqrt(diff / ref)
