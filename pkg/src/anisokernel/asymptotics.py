"""Power-law fits of eigenvalue deficiencies and the ``|s| + 4x^4`` model operator.

For small ``a`` the deficiency ``1 - E(a)`` of the top eigenvalue behaves like
``a^(2/(1+2t))``. At ``t = 2`` the rescaling ``x = a^(-2/5) xi`` makes
``phi_j(a) a^(-2/5)`` a natural candidate for convergence to the spectrum of a
model operator ``|D| + c x^4``; ``c = 4`` is the conjectured symbol. The
comparison is exploratory. A naive expansion of the Lorentzian ridge gives
``c = 2`` instead, so the quartic coefficient is a parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh
from scipy.sparse.linalg import eigsh

from .discretize import DENSE_LIMIT, DiscretizedOperator, QuadratureGrid, Sector, refine_until
from .errors import DomainError, ParameterError
from .kernel import KernelParams
from .spectra import largest_eigenvalue

__all__ = [
    "ExponentFit",
    "fit_exponent",
    "deficiency_sweep",
    "widom_operator",
    "widom_spectrum",
    "WidomReport",
    "widom_compare",
    "richardson_a25",
]


@dataclass
class ExponentFit:
    prefactor: float
    exponent: float
    rms_residual: float
    a_range: tuple

    def predict(self, a):
        return self.prefactor * np.asarray(a, dtype=float) ** self.exponent

    def as_dict(self):
        return {"prefactor": self.prefactor, "exponent": self.exponent,
                "rms_residual": self.rms_residual, "a_range": list(self.a_range)}


def fit_exponent(points):
    """Least-squares line through ``(log a, log value)``.

    ``points`` is a sequence of ``(a, value)`` pairs with at least three
    entries, all positive.
    """
    pts = [(float(a), float(v)) for a, v in points]
    if len(pts) < 3:
        raise ParameterError("need at least 3 points")
    arr = np.array(pts)
    if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
        raise DomainError("fit_exponent needs positive finite a and values")
    la, lv = np.log(arr[:, 0]), np.log(arr[:, 1])
    A = np.column_stack((la, np.ones_like(la)))
    (slope, icpt), *_ = np.linalg.lstsq(A, lv, rcond=None)
    rms = float(np.sqrt(np.mean((A @ np.array([slope, icpt]) - lv) ** 2)))
    return ExponentFit(float(math.exp(icpt)), float(slope), rms,
                       (float(arr[:, 0].min()), float(arr[:, 0].max())))


def _top_k(matrix, k):
    n = matrix.shape[0]
    if n <= DENSE_LIMIT:
        vals = eigh(matrix, eigvals_only=True, subset_by_index=[n - k, n - 1])
    else:
        v0 = np.ones(n) / math.sqrt(n)
        vals = eigsh(matrix, k=k, which="LA", v0=v0, tol=0, return_eigenvectors=False)
    return np.sort(vals)[::-1]


def deficiency_sweep(t, a_values, sector=Sector.EVEN, j=0, *, tol=1e-10):
    """``[(a, 1 - E_j(a)), ...]`` for the kernel with exponent ``t`` at ``T = 1``.

    ``j = 0`` uses the refined top eigenvalue; higher ``j`` are read off the
    grid on which the top eigenvalue converged.
    """
    if not (0 <= int(j) <= 5):
        raise ParameterError("j must be in [0, 5]")
    out = []
    for a in a_values:
        p = KernelParams(float(a), 1.0, float(t))
        if j == 0:
            top, _ = largest_eigenvalue(p, sector, tol)
            out.append((float(a), 1.0 - top))
        else:
            op, _ = refine_until(p, sector, tol)
            out.append((float(a), 1.0 - float(_top_k(op.matrix, j + 1)[j])))
    return out


# ---------------------------------------------------------------------------
# |D| + 4 x^4


def widom_operator(n=256, half_width=12.0, coeff=4.0):
    """Matrix of ``|D| + c x^4`` (default ``c = 4``) on ``n`` periodic points over ``[-L, L)``.

    ``|D|`` is the discrete Fourier multiplier ``|s_k|`` with signed
    frequencies ``s_k``; ``c x^4`` is diagonal in space.
    """
    n = int(n)
    if n < 64 or n & (n - 1):
        raise ParameterError("n must be a power of two >= 64")
    if not (half_width > 0):
        raise ParameterError("half_width must be > 0")
    L = float(half_width)
    dx = 2.0 * L / n
    x = -L + dx * np.arange(n)
    s = 2.0 * math.pi * np.fft.fftfreq(n, d=dx)
    D = np.fft.ifft(np.abs(s)[:, None] * np.fft.fft(np.eye(n), axis=0), axis=0).real
    m = 0.5 * (D + D.T) + np.diag(coeff * x ** 4)
    m.setflags(write=False)
    grid = QuadratureGrid(x, np.full(n, dx), L, Sector.FULL, 1)
    return DiscretizedOperator(m, grid, None, Sector.FULL, label=f"widom-n{n}-L{L:g}")


def _parity(vec):
    # index k <-> -x_k is (n - k) mod n on the periodic grid
    n = len(vec)
    ref = vec[(-np.arange(n)) % n]
    return "even" if np.linalg.norm(vec - ref) < np.linalg.norm(vec + ref) else "odd"


def widom_spectrum(n=256, half_width=12.0, count=6, coeff=4.0):
    """Lowest ``count`` eigenvalues of ``|D| + c x^4`` with parity labels.

    Returns
    -------
    dict
        ``merged`` (ascending), ``even`` and ``odd`` eigenvalue lists.
    """
    op = widom_operator(n, half_width, coeff)
    vals, vecs = eigh(op.matrix, subset_by_index=[0, count - 1])
    out = {"merged": [], "even": [], "odd": []}
    for i in range(count):
        out["merged"].append(float(vals[i]))
        out[_parity(vecs[:, i])].append(float(vals[i]))
    return out


def richardson_a25(a1, r1, a2, r2):
    """Linear extrapolation of ``r`` to ``a^(2/5) = 0`` from two points."""
    u1, u2 = a1 ** 0.4, a2 ** 0.4
    return (r2 * u1 - r1 * u2) / (u1 - u2)


@dataclass
class WidomReport:
    mu: dict
    mu_refined: dict
    convergence: dict
    rows: list = field(default_factory=list)

    def as_dict(self):
        return {"mu": self.mu, "mu_refined": self.mu_refined,
                "convergence": self.convergence, "rows": self.rows}


def _deficiencies(a, j_max, tol):
    p = KernelParams(a, 1.0)
    res = {}
    for sec in (Sector.EVEN, Sector.ODD):
        op, report = refine_until(p, sec, tol)
        vals = _top_k(op.matrix, j_max + 1)
        vals[0] = report.estimate
        res[sec.value] = [1.0 - float(v) for v in vals]
    res["merged"] = sorted(res["even"] + res["odd"])[:j_max + 1]
    return res


def widom_compare(j_max, a_values, *, n=256, half_width=12.0, tol=1e-10):
    """Rescaled deficiencies ``phi_j(a) a^(-2/5)`` next to the eigenvalues of ``M``.

    Three alignments are reported (even sector vs even modes of ``M``, odd vs
    odd, and the merged sequences), since nothing singles one out. Each row
    carries the raw ratio, its relative change from the previous ``a`` and a
    two-point extrapolation in ``a^(2/5)``. Nothing here asserts convergence.
    """
    j_max = int(j_max)
    if not (0 <= j_max <= 5):
        raise ParameterError("j_max must be in [0, 5]")
    count = 2 * (j_max + 1)
    mu = widom_spectrum(n, half_width, count)
    mu_n = widom_spectrum(2 * n, half_width, count)
    mu_l = widom_spectrum(2 * n, 2.0 * half_width, count)
    conv = {"n_doubling": max(abs(x - y) / y for x, y in zip(mu_n["merged"], mu["merged"])),
            "width_doubling": max(abs(x - y) / y for x, y in zip(mu_l["merged"], mu_n["merged"]))}
    report = WidomReport(mu, mu_n, conv)
    prev = {}
    for a in a_values:
        a = float(a)
        defs = _deficiencies(a, j_max, tol)
        for align in ("even", "odd", "merged"):
            for j in range(j_max + 1):
                if j >= len(defs[align]):
                    continue
                ratio = defs[align][j] * a ** -0.4
                target = mu_n[align][j] if j < len(mu_n[align]) else None
                key = (align, j)
                row = {"a": a, "alignment": align, "j": j, "deficiency": defs[align][j],
                       "ratio": ratio, "mu": target,
                       "relative_gap": None if target is None else (ratio - target) / target,
                       "relative_change": None, "extrapolated": None}
                if key in prev:
                    pa, pr = prev[key]
                    row["relative_change"] = abs(ratio - pr) / ratio
                    row["extrapolated"] = richardson_a25(pa, pr, a, ratio)
                prev[key] = (a, ratio)
                report.rows.append(row)
    return report
