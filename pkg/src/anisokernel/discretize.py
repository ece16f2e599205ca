"""Nystrom discretization of the kernel on the line and on parity sectors.

Even and odd functions are represented by their restriction to the
half-line ``[0, X]``; the corresponding kernels are ``K(x, y) + K(x, -y)``
and ``K(x, y) - K(x, -y)``. The full-line grid is the mirror image of the
half-line grid, so parity is exact at every resolution.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh
from scipy.sparse.linalg import eigsh

from .errors import ConvergenceError, ParameterError
from .kernel import KernelParams, ridge_width

log = logging.getLogger(__name__)

__all__ = [
    "Sector",
    "QuadratureGrid",
    "DiscretizedOperator",
    "ConvergenceReport",
    "build_grid",
    "grid_for",
    "assemble",
    "refine_until",
    "default_radius",
    "sector_kernel",
    "VALIDITY_WINDOW",
]

PANEL_ORDER = 16
VALIDITY_WINDOW = (1e-4, 0.3)


class Sector(str, enum.Enum):
    FULL = "full"
    EVEN = "even"
    ODD = "odd"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ParameterError(f"unknown sector {value!r}; expected full, even or odd") from None


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    nodes: np.ndarray
    weights: np.ndarray
    truncation_radius: float
    sector: Sector
    order: int = PANEL_ORDER

    @property
    def node_count(self):
        return len(self.nodes)

    def integrate(self, values):
        return float(np.dot(self.weights, values))


@dataclass(frozen=True, eq=False)
class DiscretizedOperator:
    """Symmetrized Nystrom matrix ``sqrt(w_i) k(x_i, x_j) sqrt(w_j)``."""

    matrix: np.ndarray
    grid: QuadratureGrid
    params: KernelParams | None
    sector: Sector
    label: str = ""

    @property
    def size(self):
        return self.matrix.shape[0]

    def nystrom_matrix(self):
        """Plain (non-symmetric) Nystrom matrix ``k(x_i, x_j) w_j``."""
        sw = np.sqrt(self.grid.weights)
        return self.matrix / sw[:, None] * sw[None, :]

    def to_coefficients(self, values):
        """Map function samples to the coordinates used by ``matrix``."""
        return np.sqrt(self.grid.weights) * np.asarray(values, dtype=float)

    def to_values(self, coeffs):
        return np.asarray(coeffs) / np.sqrt(self.grid.weights)


@dataclass
class ConvergenceReport:
    tol: float
    levels: list = field(default_factory=list)

    @property
    def deltas(self):
        return [lv["delta"] for lv in self.levels if lv["delta"] is not None]

    @property
    def estimate(self):
        return self.levels[-1]["top"] if self.levels else None

    @property
    def uncertainty(self):
        d = self.deltas
        return d[-1] if d else math.inf

    def as_dict(self):
        return {"tol": self.tol, "levels": list(self.levels)}


def _leggauss(order):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def _fine_axis(radius):
    # dense near the origin, geometric further out
    inner = np.linspace(0.0, min(radius, 64.0), 4097)
    if radius <= 64.0:
        return inner
    outer = np.geomspace(64.0, radius, 4097)[1:]
    return np.concatenate((inner, outer))


def _panel_edges(radius, n_panels, width):
    """Panel boundaries on ``[0, radius]`` equidistributing ``int dx / width(x)``."""
    if width is None:
        return np.linspace(0.0, radius, n_panels + 1)
    fine = _fine_axis(radius)
    density = 1.0 / np.asarray(width(fine), dtype=float)
    s = np.concatenate(([0.0], np.cumsum(0.5 * (density[1:] + density[:-1]) * np.diff(fine))))
    targets = np.linspace(0.0, s[-1], n_panels + 1)
    edges = np.interp(targets, s, fine)
    edges[0], edges[-1] = 0.0, radius
    return edges


def _check_exactness(nodes, weights, lo, hi, degree):
    span = hi - lo
    for k in range(degree + 1):
        # monomials in the scaled variable keep the check well conditioned
        u = (nodes - lo) / span
        exact = span / (k + 1)
        got = float(np.dot(weights, u ** k))
        if abs(got - exact) > 1e-10 * span:
            raise ParameterError(f"quadrature grid fails exactness on degree {k}: {got} vs {exact}")


def build_grid(sector, truncation_radius, node_count, *, order=PANEL_ORDER, width=None):
    """Composite Gauss-Legendre grid for a parity sector.

    Parameters
    ----------
    sector : Sector or str
        ``full`` covers ``[-X, X]``; ``even``/``odd`` cover ``[0, X]``.
    truncation_radius : float
        The cut-off ``X``.
    node_count : int
        Requested total number of nodes; rounded down to a whole number of
        panels (and to an even number of panels for the full line).
    order : int
        Gauss-Legendre points per panel.
    width : callable, optional
        Local panel width profile ``w(x)`` for ``x >= 0``; panels are placed so
        that each covers the same amount of ``int dx / w``. Uniform if omitted.
    """
    sector = Sector.parse(sector)
    node_count = int(node_count)
    if node_count < 8:
        raise ParameterError(f"node_count must be >= 8, got {node_count}")
    if not (truncation_radius > 0):
        raise ParameterError(f"truncation_radius must be > 0, got {truncation_radius}")
    order = min(order, node_count // (2 if sector is Sector.FULL else 1))
    half_nodes = node_count // 2 if sector is Sector.FULL else node_count
    n_panels = max(1, half_nodes // order)

    edges = _panel_edges(float(truncation_radius), n_panels, width)
    gx, gw = _leggauss(order)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    if np.any(half <= 0):
        raise ParameterError("degenerate panel layout")
    nodes = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
    weights = (half[:, None] * gw[None, :]).ravel()
    lo = 0.0
    if sector is Sector.FULL:
        nodes = np.concatenate((-nodes[::-1], nodes))
        weights = np.concatenate((weights[::-1], weights))
        lo = -float(truncation_radius)
    _check_exactness(nodes, weights, lo, float(truncation_radius), min(order - 1, 12))
    return QuadratureGrid(nodes, weights, float(truncation_radius), sector, order)


def default_radius(p):
    """Truncation radius ``T * max(40, 25 s^(-2/(1+2t)), 4 s^(-1/t))``, ``s`` the reduced anisotropy.

    The first scale is where the top eigenfunction lives, the second is where
    the confinement term overtakes the Lorentzian; for ``t = 2`` the first
    dominates and this is ``max(40, 25 a^(-2/5))`` at ``T = 1``.
    """
    s = p.reduced_a
    if s == 0:
        return 40.0 * p.T
    x = max(40.0, 25.0 * s ** (-2.0 / (1.0 + 2.0 * p.t)), 4.0 * s ** (-1.0 / p.t))
    return p.T * x


def _panel_count(p, radius, density):
    fine = _fine_axis(radius)
    s = np.trapezoid(1.0 / ridge_width(p, fine), fine)
    return max(2, int(math.ceil(density * s)))


def grid_for(p, sector, *, radius=None, density=1.0, order=PANEL_ORDER):
    """Grid graded to the kernel ``p``: about ``density`` panels per ridge width."""
    sector = Sector.parse(sector)
    radius = default_radius(p) if radius is None else float(radius)
    n_panels = _panel_count(p, radius, density)
    per_side = n_panels * order
    node_count = 2 * per_side if sector is Sector.FULL else per_side
    return build_grid(sector, radius, node_count, order=order, width=lambda x: ridge_width(p, x))


def sector_kernel(p, sector, x, y):
    """Kernel of the operator restricted to a sector (half-line form for even/odd)."""
    sector = Sector.parse(sector)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    rho2 = x * x + y * y
    if p.t == 2:
        conf = (p.a * rho2) ** 2
    else:
        conf = p.a ** 2 * rho2 ** p.t
    c = p.T ** 2 + rho2 + conf
    if sector is Sector.FULL:
        return 1.0 / (math.pi * (c - 2.0 * x * y))
    xy2 = 2.0 * x * y
    den = math.pi * (c - xy2) * (c + xy2)
    if sector is Sector.EVEN:
        return 2.0 * c / den
    return 2.0 * xy2 / den


def assemble(p, sector, grid, *, label="", block=512):
    """Symmetric Nystrom matrix of the sector operator on ``grid``.

    Rows are filled in blocks to bound temporary memory. Entries are
    ``k(x_i, x_j) * (sqrt(w_i) sqrt(w_j))`` with the weight product formed
    first, which makes the matrix exactly symmetric.
    """
    sector = Sector.parse(sector)
    if grid.sector is not sector:
        raise ParameterError(f"grid built for {grid.sector.value} sector, requested {sector.value}")
    x = grid.nodes
    sw = np.sqrt(grid.weights)
    n = len(x)
    m = np.empty((n, n))
    for i0 in range(0, n, block):
        i1 = min(n, i0 + block)
        k = sector_kernel(p, sector, x[i0:i1, None], x[None, :])
        k *= sw[i0:i1, None] * sw[None, :]
        m[i0:i1] = k
    m.setflags(write=False)
    return DiscretizedOperator(m, grid, p, sector, label)


DENSE_LIMIT = 1200


def top_eigenvalue(matrix):
    """Largest eigenvalue; dense LAPACK for small matrices, Lanczos otherwise."""
    n = matrix.shape[0]
    if n <= DENSE_LIMIT:
        return float(eigh(matrix, eigvals_only=True, subset_by_index=[n - 1, n - 1])[0])
    # fixed start vector keeps the result deterministic
    v0 = np.ones(n) / math.sqrt(n)
    val = eigsh(matrix, k=1, which="LA", v0=v0, tol=0, return_eigenvectors=False)
    return float(val[0])


def _in_window(p):
    lo, hi = VALIDITY_WINDOW
    s = p.reduced_a
    if not (lo <= s <= hi):
        log.warning("a = %g (T = %g) lies outside the desk-scale window [%g, %g]", p.a, p.T, lo, hi)


def refine_until(p, sector, tol, *, max_levels=7, radius_growth=4.0, density=0.25,
                 max_nodes=8000, radius=None):
    """Refine the grid until the top eigenvalue settles.

    Each level doubles the panel density (hence the node count) and grows the
    truncation radius by ``radius_growth``. Stops when two successive top
    eigenvalues differ by less than ``tol``.

    Returns
    -------
    (DiscretizedOperator, ConvergenceReport)

    Raises
    ------
    ConvergenceError
        When ``max_levels`` or ``max_nodes`` is reached first; the error carries
        the last estimate and delta. This is the expected outcome at ``a = 0``,
        where the spectrum is continuous.
    """
    sector = Sector.parse(sector)
    if not (tol > 0):
        raise ParameterError("tol must be > 0")
    _in_window(p)
    report = ConvergenceReport(tol)
    r0 = default_radius(p) if radius is None else float(radius)
    prev = None
    for level in range(max_levels):
        rad = r0 * radius_growth ** level
        grid = grid_for(p, sector, radius=rad, density=density * 2 ** level)
        if grid.node_count > max_nodes:
            raise ConvergenceError(
                f"node budget {max_nodes} exceeded at level {level} "
                f"({grid.node_count} nodes) before reaching tol={tol:g}; "
                f"last delta {report.uncertainty:.3g}",
                best_estimate=prev, last_delta=report.uncertainty, history=report.levels)
        op = assemble(p, sector, grid, label=f"level{level}")
        top = top_eigenvalue(op.matrix)
        delta = None if prev is None else abs(top - prev)
        report.levels.append({"level": level, "node_count": grid.node_count,
                              "radius": rad, "top": top, "delta": delta})
        log.debug("refine %s a=%g level=%d n=%d X=%.1f top=%.15f delta=%s",
                  sector.value, p.a, level, grid.node_count, rad, top, delta)
        if delta is not None and delta < tol:
            return op, report
        prev = top
    raise ConvergenceError(
        f"no convergence to tol={tol:g} within {max_levels} levels",
        best_estimate=prev, last_delta=report.uncertainty, history=report.levels)
