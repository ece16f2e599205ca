"""Scaling of operator norms in ``(a, T)`` and the critical temperature shift ``tau(a)``.

Substituting ``x -> b x`` maps the kernel at ``(a b, T / b)`` onto ``b`` times
the kernel at ``(a, T)``, so ``N(a b, T / b) = b N(a, T)``. At ``T = 1 - tau``
the odd-sector criticality condition ``N^o(a, T) = 1`` therefore reads
``N^o(a T; 1) = T``, a scalar equation in ``T`` that is solved by bisection.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from .discretize import Sector, assemble, refine_until, top_eigenvalue
from .errors import AnisoKernelError, ConvergenceError, DomainError, ParameterError
from .kernel import KernelParams
from .spectra import largest_eigenvalue

__all__ = [
    "TcCurvePoint",
    "norm_scaling_check",
    "OddNormSolver",
    "solve_tau",
    "tc_curve",
    "tau_caps",
]

log = logging.getLogger(__name__)

BRACKET = (0.5, 1.0)
# re-refine when a*T has moved more than this fraction from the cached grid
WARM_START_SPAN = 0.10


def tau_caps(a):
    """``((1/12) (a/2)^(2/5), 3 a^(2/5))``."""
    return (a / 2.0) ** 0.4 / 12.0, 3.0 * a ** 0.4


@dataclass
class TcCurvePoint:
    a: float
    tau: float
    iterations: int
    residual: float
    lower_cap: float = 0.0
    upper_cap: float = 0.0
    sandwich_ok: bool = False

    def __post_init__(self):
        if not self.lower_cap and not self.upper_cap:
            self.lower_cap, self.upper_cap = tau_caps(self.a)
        self.sandwich_ok = bool(self.lower_cap <= self.tau <= self.upper_cap)

    def as_dict(self):
        return {"a": self.a, "tau": self.tau, "residual": self.residual,
                "iterations": self.iterations, "lower_cap": self.lower_cap,
                "upper_cap": self.upper_cap}


def norm_scaling_check(a, T, b, sector=Sector.ODD, *, tol=1e-10, return_uncertainty=False):
    """``|N(a b, T / b) - b N(a, T)|`` from two independent refinements.

    With ``return_uncertainty`` the combined grid uncertainty
    ``u(a b, T / b) + b u(a, T)`` is returned as well.
    """
    for name, v in (("a", a), ("T", T), ("b", b)):
        if not (v > 0):
            raise DomainError(f"{name} must be > 0")
    n1, u1 = largest_eigenvalue(KernelParams(a * b, T / b), sector, tol)
    n0, u0 = largest_eigenvalue(KernelParams(a, T), sector, tol)
    res = abs(n1 - b * n0)
    if return_uncertainty:
        return res, u1 + b * u0
    return res


@dataclass
class OddNormSolver:
    """``x -> N^o(x; 1)`` with grid reuse between nearby arguments."""

    tol: float = 1e-10
    solves: int = 0
    refinements: int = 0
    _cache: list = field(default_factory=list)

    def _grid_for(self, x):
        for ref, grid in self._cache:
            if abs(x - ref) <= WARM_START_SPAN * ref:
                return grid
        return None

    def __call__(self, x):
        p = KernelParams(x, 1.0)
        self.solves += 1
        grid = self._grid_for(x)
        if grid is None:
            self.refinements += 1
            op, report = refine_until(p, Sector.ODD, self.tol)
            self._cache.append((x, op.grid))
            return report.estimate
        return top_eigenvalue(assemble(p, Sector.ODD, grid).matrix)

    def psi(self, x):
        """``1 - N^o(x; 1)``."""
        return 1.0 - self(x)


def solve_tau(a, tol=1e-10, *, solver=None, max_iter=80):
    """Root ``T`` of ``N^o(a T; 1) = T`` on ``[1/2, 1]``; returns ``tau = 1 - T``.

    Bisection stops once the bracket is shorter than ``tol`` or the residual
    drops below it.

    Raises
    ------
    ConvergenceError
        When ``g(T) = N^o(a T; 1) - T`` has no sign change on the bracket; the
        message carries ``g`` at both ends.
    """
    if not (a > 0):
        raise DomainError("a must be > 0")
    if not (tol > 0):
        raise ParameterError("tol must be > 0")
    solver = solver or OddNormSolver(tol=min(tol, 1e-10))

    def g(T):
        return solver(a * T) - T

    lo, hi = BRACKET
    g_lo, g_hi = g(lo), g(hi)
    if not (g_lo > 0 > g_hi):
        raise ConvergenceError(
            f"no sign change on [{lo}, {hi}] at a={a:g}: g({lo})={g_lo:.3e}, g({hi})={g_hi:.3e}",
            best_estimate=None)
    it = 0
    mid, g_mid = hi, g_hi
    while it < max_iter:
        it += 1
        mid = 0.5 * (lo + hi)
        g_mid = g(mid)
        if g_mid > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol or abs(g_mid) < tol:
            break
    T_root, res = mid, abs(g_mid)
    return TcCurvePoint(a=a, tau=1.0 - T_root, iterations=it, residual=res)


def tc_curve(a_values, tol=1e-10):
    """``solve_tau`` over ``a_values``, sorted by ``a``.

    Returns
    -------
    (points, errors)
        ``errors`` maps each failed ``a`` to its message; failures do not stop
        the sweep.
    """
    points, errors = [], {}
    for a in sorted(a_values):
        try:
            points.append(solve_tau(a, tol))
        except AnisoKernelError as exc:
            log.warning("tau(%g) failed: %s", a, exc)
            errors[a] = str(exc)
    return points, errors
