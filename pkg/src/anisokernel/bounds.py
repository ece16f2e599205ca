"""Analytic eigenvalue bounds for the quartic kernel at ``T = 1``.

Three independent certificates are computed:

* a variational lower bound for the odd sector from the Gaussian-damped
  test function ``x exp(-h^2 x^2 / 2)``;
* a Schur-test upper bound for the odd sector, ``sup_x int |K'(x, y)| dy``;
* the uncertainty-principle upper bound ``1 - a^(2/5) / 12`` for the full
  operator.

``certify`` compares all of them against converged eigenvalues.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate, optimize

from .discretize import Sector
from .errors import ConvergenceError, DomainError, ParameterError
from .kernel import KernelParams

__all__ = [
    "BoundReport",
    "LAMBDA_STAR",
    "G_STAR",
    "SCHUR_MU_STAR",
    "SCHUR_G_STAR",
    "angular_integral_closed",
    "angular_integral_quadrature",
    "optimal_h",
    "variational_lower_odd",
    "schur_column_bound",
    "schur_column_integral",
    "schur_upper_odd",
    "up_upper_full",
    "up_bound_details",
    "naive_schur_full",
    "naive_schur_deficiency",
    "truncated_linear_bracket",
    "certify",
]

LAMBDA_STAR = (15.0 * math.sqrt(math.pi)) ** 0.2
# value of min_l (2/sqrt(pi)) l + (15/2) l^-4, attained at LAMBDA_STAR
G_STAR = 2.0 / math.sqrt(math.pi) * LAMBDA_STAR + 7.5 / LAMBDA_STAR ** 4
SCHUR_MU_STAR = (35.0 / 18.0) ** 0.2
SCHUR_G_STAR = 35.0 / 44.0 * (18.0 / 35.0) ** 0.2
UP_H_MAX = 0.25

_QUAD_TOL = 1e-13


def _positive(name, v):
    if not (v > 0) or not math.isfinite(v):
        raise DomainError(f"{name} must be a positive finite number, got {v!r}")


# ---------------------------------------------------------------------------
# angular integral


def angular_integral_closed(C, A):
    """``(1/2pi) int_0^{2pi} sin^2(2phi) / (C^2 - A^2 sin^2(2phi)) dphi`` in closed form.

    Equals ``(C/B - 1) / A^2`` with ``B = sqrt(C^2 - A^2)``; evaluated as
    ``1 / (B (C + B))`` which keeps full precision when ``A << C``.
    """
    if not (C > A > 0):
        raise DomainError(f"need C > A > 0, got C={C!r}, A={A!r}")
    B = math.sqrt((C - A) * (C + A))
    return 1.0 / (B * (C + B))


def angular_integral_quadrature(C, A):
    """Adaptive-quadrature reference for :func:`angular_integral_closed`."""
    if not (C > A > 0):
        raise DomainError(f"need C > A > 0, got C={C!r}, A={A!r}")

    def f(phi):
        s2 = math.sin(2.0 * phi) ** 2
        return s2 / ((C - A * math.sin(2.0 * phi)) * (C + A * math.sin(2.0 * phi)))

    # the integrand has period pi/2 and is symmetric about pi/4
    val, _ = integrate.quad(f, 0.0, math.pi / 4, points=[math.pi / 4], limit=400,
                            epsabs=0.0, epsrel=1e-13)
    return 8.0 * val / (2.0 * math.pi)


# ---------------------------------------------------------------------------
# variational lower bound


def optimal_h(a):
    """Inverse width ``h = lambda* a^(2/5)`` with ``lambda* = (15 sqrt(pi))^(1/5)``."""
    _positive("a", a)
    return LAMBDA_STAR * a ** 0.4


def _quad_pieces(f, breaks):
    total, err = 0.0, 0.0
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        v, e = integrate.quad(f, lo, hi, limit=500, epsabs=0.0, epsrel=_QUAD_TOL)
        total += v
        err += e
    return total, err


def variational_lower_odd(a, h, *, return_parts=False):
    """Rayleigh quotient of ``x exp(-h^2 x^2/2)`` for the odd sector at ``T = 1``.

    With ``H = 1/h``, ``||f||^2 = sqrt(pi)/2 H^3``, ``J2 = H^2`` and ``J1``
    the exponentially weighted integral over ``w`` obtained from the polar
    form after ``r^2 = 2 H^2 w``. The difference ``J1 - J2`` is integrated
    directly in the cancellation-free form ``H^2 A^2 / (B (C + B))``.
    """
    _positive("a", a)
    _positive("h", h)
    H = 1.0 / h
    H2 = H * H
    aH2 = a * H2

    def parts(w):
        A = 2.0 * H2 * w
        C = 1.0 + A + (2.0 * aH2 * w) ** 2
        B = math.sqrt((1.0 + (2.0 * aH2 * w) ** 2) * (1.0 + 2.0 * A + (2.0 * aH2 * w) ** 2))
        return A, B, C

    def diff_integrand(w):
        A, B, C = parts(w)
        return math.exp(-w) * H2 * A * A / (B * (C + B))

    def j1_integrand(w):
        A, B, C = parts(w)
        return math.exp(-w) * H2 * C / B

    w_ridge = 0.25 * h * h
    w_conf = 0.5 / aH2
    breaks = sorted({0.0, min(w_ridge, 1.0), min(w_conf, 40.0), 1.0, 40.0, 800.0})
    diff, err = _quad_pieces(diff_integrand, breaks)
    if err > 1e-10 * max(diff, 1e-300):
        raise ConvergenceError(f"J1 - J2 quadrature error {err:.2e} too large", best_estimate=diff,
                               last_delta=err)
    norm2 = 0.5 * math.sqrt(math.pi) * H ** 3
    value = diff / norm2
    if return_parts:
        j1, _ = _quad_pieces(j1_integrand, breaks)
        return value, {"J1": j1, "J2": H2, "norm2": norm2, "J1_minus_J2": diff, "quad_error": err}
    return value


def truncated_linear_bracket(a, H):
    """Bracket for the quotient of the truncated linear test function.

    For ``f = x`` on ``|x| <= H``: ``<f, f> = 2 H^3 / 3`` and the positive
    integrand is integrated over the disc of radius ``H`` (inscribed in the
    square) and ``H sqrt(2)`` (circumscribed), giving ``(low, high)``.
    """
    _positive("a", a)
    _positive("H", H)

    def g(r):
        A = r * r
        C = 1.0 + A + (a * A) ** 2
        B = math.sqrt((1.0 + (a * A) ** 2) * (1.0 + 2.0 * A + (a * A) ** 2))
        return r * A * A / (B * (C + B))  # r (C/B - 1) without cancellation

    norm2 = 2.0 / 3.0 * H ** 3
    out = []
    for R in (H, H * math.sqrt(2.0)):
        v, _ = _quad_pieces(g, sorted({0.0, min(1.0, R), R}))
        out.append(v / norm2)
    return tuple(out)


# ---------------------------------------------------------------------------
# Schur bound, odd sector


def schur_column_bound(a, x):
    """Closed-form majorant ``p(x)`` of the column integral ``int |K'(x, y)| dy``."""
    if a < 0 or x < 0:
        raise DomainError("need a >= 0 and x >= 0")
    q = math.sqrt(1.0 + 0.5 * a * a * x ** 4)
    return (0.5 + math.atan(x / (2.0 * q)) / math.pi) / q


def schur_column_integral(a, x):
    """``int_R |K'(x, y)| dy`` at ``T = 1`` by adaptive quadrature."""
    if a < 0:
        raise DomainError("need a >= 0")
    x = abs(float(x))
    if x == 0:
        return 0.0

    def f(y):
        rho2 = x * x + y * y
        c = 1.0 + rho2 + (a * rho2) ** 2
        return y / ((c - 2.0 * x * y) * (c + 2.0 * x * y))

    # |K'| is even in y; the ridge sits at y = x with unit width
    breaks = sorted({0.0, max(0.0, x - 8.0), x, x + 8.0, 2.0 * x + 16.0})
    v, _ = _quad_pieces(f, breaks)
    tail, _ = integrate.quad(f, breaks[-1], math.inf, limit=500, epsabs=0.0, epsrel=_QUAD_TOL)
    return 4.0 * x / math.pi * (v + tail)


def schur_upper_odd(a, *, scan_points=1000, return_argmax=False):
    """``sup_x int |K'(x, y)| dy``, an upper bound for the top odd eigenvalue.

    A log-spaced scan over ``[x*/10, 10 x*]`` with ``x* = (35/18)^(1/5) a^(-2/5)``
    brackets the maximum, then a bounded scalar search polishes it. If the
    scan maximum sits on the window edge the window is widened tenfold once.
    """
    _positive("a", a)
    x_star = SCHUR_MU_STAR * a ** -0.4
    lo, hi = x_star / 10.0, x_star * 10.0
    for attempt in range(2):
        xs = np.geomspace(lo, hi, scan_points)
        vals = np.array([schur_column_integral(a, x) for x in xs])
        i = int(np.argmax(vals))
        if 0 < i < len(xs) - 1:
            break
        lo, hi = lo / 10.0, hi * 10.0
    else:
        raise ConvergenceError("Schur column integral maximum lies on the search edge",
                               best_estimate=float(vals[i]))
    res = optimize.minimize_scalar(lambda u: -schur_column_integral(a, math.exp(u)),
                                   bounds=(math.log(xs[i - 1]), math.log(xs[i + 1])),
                                   method="bounded", options={"xatol": 1e-10})
    best = max(float(vals[i]), -float(res.fun))
    x_best = math.exp(res.x) if -res.fun >= vals[i] else float(xs[i])
    return (best, x_best) if return_argmax else best


# ---------------------------------------------------------------------------
# uncertainty-principle bound, full operator


def up_bound_details(a):
    """Intermediate quantities of the uncertainty-principle bound.

    With ``h = a^(2/5)`` both cases of the concentration dichotomy give
    ``||K f||^2 <= 1 - h/6``; hence ``||K|| <= sqrt(1 - h/6) <= 1 - h/12``.
    """
    _positive("a", a)
    h = a ** 0.4
    if h > UP_H_MAX:
        raise DomainError(f"uncertainty bound needs h = a^(2/5) <= 1/4 (a <= {4 ** -2.5:g}); "
                          f"got a = {a:g}, h = {h:.4f}")
    H = 1.0 / h
    freq_case = 1.0 - (1.0 - math.exp(-2.0 * h)) / 9.0
    space_case = 1.0 - 0.5 * (1.0 - 1.0 / (1.0 + 0.5 * a * a * H ** 4))
    return {
        "h": h,
        "H": H,
        "frequency_case_sq": freq_case,
        "space_case_sq": space_case,
        "norm_sq_bound": 1.0 - h / 6.0,
        "sqrt_bound": math.sqrt(1.0 - h / 6.0),
        "final_bound": 1.0 - h / 12.0,
    }


def up_upper_full(a):
    """``1 - a^(2/5) / 12``, an upper bound on the full-operator norm for ``a <= 4^(-5/2)``."""
    return up_bound_details(a)["final_bound"]


def naive_schur_deficiency(a):
    """``1 - int K(0, y) dy`` computed without cancellation."""
    _positive("a", a)

    def f(y):
        y2 = y * y
        return y2 * y2 / ((1.0 + y2) * (1.0 + y2 + a * a * y2 * y2))

    s = a ** -0.5
    v, _ = _quad_pieces(f, [0.0, 1.0, s, 10.0 * s])
    tail, _ = integrate.quad(f, 10.0 * s, math.inf, limit=500, epsabs=0.0, epsrel=_QUAD_TOL)
    return 2.0 / math.pi * a * a * (v + tail)


def naive_schur_full(a):
    """Plain Schur column integral ``int K(0, y) dy`` of the full kernel.

    Only captures an ``O(a)`` deficiency; kept as a negative control.
    """
    return 1.0 - naive_schur_deficiency(a)


# ---------------------------------------------------------------------------
# certification


@dataclass
class BoundReport:
    a: float
    lower_odd: float
    upper_odd: float
    upper_full: Optional[float]
    theorem_lower: float
    theorem_upper: float
    numeric_E_even: float
    numeric_E_odd: float
    uncertainty_even: float
    uncertainty_odd: float
    sandwich_ok: bool
    checks: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def as_dict(self):
        return asdict(self)


def certify(a, *, tol=1e-10):
    """Evaluate every bound at ``a`` and check it against converged eigenvalues.

    ``upper_full`` is ``None`` where the uncertainty-principle bound is not
    established (``a^(2/5) > 1/4``); the theorem's stated constants are checked
    at every ``a``.
    """
    from .spectra import largest_eigenvalue

    if not (a > 0):
        raise DomainError("certify needs a > 0: at a = 0 the operator is not compact")
    p = KernelParams(a)
    e_even, u_even = largest_eigenvalue(p, Sector.EVEN, tol)
    e_odd, u_odd = largest_eigenvalue(p, Sector.ODD, tol)
    h = optimal_h(a)
    lower = variational_lower_odd(a, h)
    upper_odd, x_arg = schur_upper_odd(a, return_argmax=True)
    diagnostics = {"h_opt": h, "schur_argmax": x_arg}
    try:
        details = up_bound_details(a)
        upper_full = details["final_bound"]
        diagnostics["up_sqrt_bound"] = details["sqrt_bound"]
    except DomainError as exc:
        upper_full = None
        diagnostics["up_note"] = str(exc)
    th_lower = 1.0 - 3.0 * a ** 0.4
    th_upper = 1.0 - a ** 0.4 / 12.0
    checks = {
        "lower_odd <= E_odd": lower <= e_odd + u_odd,
        "E_odd <= upper_odd": e_odd - u_odd <= upper_odd,
        "E_odd < E_even": e_odd + u_odd < e_even - u_even,
        "E_even <= theorem_upper": e_even - u_even <= th_upper,
        "theorem_lower <= E_odd": th_lower <= e_odd + u_odd,
    }
    if upper_full is not None:
        checks["E_even <= upper_full"] = e_even - u_even <= upper_full
    return BoundReport(a, lower, upper_odd, upper_full, th_lower, th_upper, e_even, e_odd,
                       u_even, u_odd, all(checks.values()), checks, diagnostics)
