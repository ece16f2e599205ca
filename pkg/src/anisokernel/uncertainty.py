"""Additive uncertainty principle: finite-dimensional checks and the sinc operator.

For orthogonal projectors ``P``, ``R`` and a unitary ``V``,

    ||f - P f||^2 + ||V f - R V f||^2 >= 1 - b,   b^2 = ||P V* R V P||,

for every unit vector ``f``. With ``P`` the restriction to ``[-1, 1]``,
``R`` the same in frequency and ``V`` the Fourier transform, ``P V* R V P``
is the sinc-kernel operator on ``[-1, 1]`` whose norm fixes the constant
``1/9`` in the space/frequency concentration dichotomy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize
from scipy.interpolate import CubicSpline
from scipy.linalg import eigvalsh
from scipy.stats import ortho_group, unitary_group

from .discretize import DiscretizedOperator, QuadratureGrid, Sector
from .errors import DomainError, InvariantViolation, ParameterError

__all__ = [
    "ProjectorPair",
    "UPWitness",
    "product_norm",
    "pair_angle_bound",
    "additive_up_check",
    "random_projector",
    "random_unitary",
    "random_up_trials",
    "random_angle_trials",
    "sinc_operator",
    "sinc_top_eigenvalue",
    "sinc_schur_bound",
    "concentration_dichotomy",
    "fourier_transform",
    "fourier_scaling_check",
    "random_bandlimited",
    "random_dichotomy_trials",
    "sinc_monotone_check",
    "SP_SINC_NORM",
    "ONE_NINTH",
]

SP_SINC_NORM = 0.57258
ONE_NINTH = 1.0 / 9.0
_VALIDATION_TOL = 1e-12


def _check_projector(M, name):
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DomainError(f"{name} must be a square matrix")
    if np.max(np.abs(M @ M - M), initial=0.0) > _VALIDATION_TOL * max(1, M.shape[0]):
        raise DomainError(f"{name} is not idempotent")
    if np.max(np.abs(M - M.conj().T), initial=0.0) > _VALIDATION_TOL:
        raise DomainError(f"{name} is not self-adjoint")
    return M


def _check_unitary(V):
    V = np.asarray(V)
    n = V.shape[0]
    if np.max(np.abs(V.conj().T @ V - np.eye(n))) > _VALIDATION_TOL * max(1, n):
        raise DomainError("V is not unitary")
    return V


@dataclass(frozen=True, eq=False)
class ProjectorPair:
    P: np.ndarray
    R: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        _check_projector(self.P, "P")
        _check_projector(self.R, "R")
        _check_unitary(self.V)
        if not (self.P.shape == self.R.shape == self.V.shape):
            raise DomainError("P, R and V must have the same shape")

    @property
    def Q(self):
        """The rotated projector ``V* R V``."""
        return self.V.conj().T @ self.R @ self.V


@dataclass
class UPWitness:
    b: float
    f: np.ndarray
    lhs: float
    slack: float
    max_term: float
    corollary_slack: float


def product_norm(P, R):
    """``||R P|| = sqrt(||P R P||)``, the cosine of the smallest principal angle.

    Taken as the top singular value of ``R P``; the square root of the top
    eigenvalue of ``P R P`` would turn round-off into ``~1e-8`` near ``b = 0``.
    """
    P = _check_projector(P, "P")
    R = _check_projector(R, "R")
    return min(1.0, float(np.linalg.norm(R @ P, 2)))


def _check_unit(v, name):
    v = np.asarray(v)
    if abs(np.linalg.norm(v) - 1.0) > 1e-10:
        raise DomainError(f"{name} must have unit norm")
    return v


def pair_angle_bound(u, v, g):
    """Both sides of ``|<g,u>|^2 + |<g,v>|^2 <= 1 + |<u,v>|``.

    Returns ``(q2, 1 + t)``; raises :class:`InvariantViolation` if the
    inequality fails beyond round-off.
    """
    u = _check_unit(u, "u")
    v = _check_unit(v, "v")
    g = _check_unit(g, "g")
    t = abs(np.vdot(u, v))
    q2 = abs(np.vdot(g, u)) ** 2 + abs(np.vdot(g, v)) ** 2
    if q2 > 1.0 + t + 1e-12:
        raise InvariantViolation(f"q^2 = {q2!r} exceeds 1 + t = {1 + t!r}")
    return float(q2), float(1.0 + t)


def additive_up_check(pair, f):
    """Witness for ``||f - Pf||^2 + ||Vf - RVf||^2 >= 1 - b`` at one unit vector."""
    f = _check_unit(f, "f")
    P, R, V = pair.P, pair.R, pair.V
    if f.shape[0] != P.shape[0]:
        raise DomainError("dimension mismatch between f and the projectors")
    # b^2 = ||P V* R V P|| = ||R V P||^2
    b = min(1.0, float(np.linalg.norm(R @ V @ P, 2)))
    t1 = float(np.linalg.norm(f - P @ f) ** 2)
    vf = V @ f
    t2 = float(np.linalg.norm(vf - R @ vf) ** 2)
    lhs = t1 + t2
    return UPWitness(b, f, lhs, lhs - (1.0 - b), max(t1, t2), max(t1, t2) - 0.5 * (1.0 - b))


def random_unitary(rng, n, complex_=True):
    """Haar-distributed orthogonal/unitary matrix."""
    if n == 1:
        phase = np.exp(2j * math.pi * rng.random()) if complex_ else rng.choice([-1.0, 1.0])
        return np.array([[phase]])
    if complex_:
        return unitary_group.rvs(n, random_state=rng)
    return ortho_group.rvs(n, random_state=rng)


def random_projector(rng, n, rank=None, complex_=True):
    """``U diag(1..1, 0..0) U*`` with ``U`` Haar-distributed."""
    if rank is None:
        rank = int(rng.integers(1, n + 1)) if n > 1 else 1
    U = random_unitary(rng, n, complex_)
    Ur = U[:, :rank]
    Pm = Ur @ Ur.conj().T
    return 0.5 * (Pm + Pm.conj().T)


def _random_unit(rng, n, complex_):
    f = rng.standard_normal(n) + (1j * rng.standard_normal(n) if complex_ else 0.0)
    return f / np.linalg.norm(f)


def _trial_rngs(seed, n_trials):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n_trials)]


def random_up_trials(n_trials, seed=0, dims=(2, 50)):
    """Run the additive inequality on random ``(P, R, V, f)``.

    Trials alternate between real and complex spaces; every trial has its own
    generator spawned from ``seed``, so results do not depend on execution
    order. Returns a summary dict with the minimum slacks.
    """
    min_slack = math.inf
    min_cor = math.inf
    violations = 0
    for i, rng in enumerate(_trial_rngs(seed, n_trials)):
        cplx = bool(i % 2)
        n = int(rng.integers(dims[0], dims[1] + 1))
        pair = ProjectorPair(random_projector(rng, n, complex_=cplx),
                             random_projector(rng, n, complex_=cplx),
                             random_unitary(rng, n, cplx))
        w = additive_up_check(pair, _random_unit(rng, n, cplx))
        min_slack = min(min_slack, w.slack)
        min_cor = min(min_cor, w.corollary_slack)
        if w.slack < -1e-12 or w.corollary_slack < -1e-12:
            violations += 1
    return {"trials": n_trials, "min_slack": min_slack, "min_corollary_slack": min_cor,
            "violations": violations}


def random_angle_trials(n_trials, seed=0, dim=3):
    """Random complex unit triples for ``|<g,u>|^2 + |<g,v>|^2 <= 1 + |<u,v>|``."""
    min_slack = math.inf
    for rng in _trial_rngs(seed, n_trials):
        u, v, g = (_random_unit(rng, dim, True) for _ in range(3))
        q2, rhs = pair_angle_bound(u, v, g)
        min_slack = min(min_slack, rhs - q2)
    return {"trials": n_trials, "min_slack": min_slack}


# ---------------------------------------------------------------------------
# sinc operator


def sinc_operator(n=200):
    """Nystrom matrix of ``f -> (1/pi) int_{-1}^{1} sin(y - x)/(y - x) f(x) dx``.

    A single ``n``-point Gauss-Legendre rule on ``[-1, 1]``; the kernel is
    entire, so convergence in ``n`` is spectral. ``np.sinc`` supplies the
    diagonal limit ``1/pi``.
    """
    n = int(n)
    if n < 16:
        raise ParameterError("n must be >= 16")
    x, w = np.polynomial.legendre.leggauss(n)
    d = x[:, None] - x[None, :]
    k = np.sinc(d / math.pi) / math.pi
    sw = np.sqrt(w)
    m = k * (sw[:, None] * sw[None, :])
    m.setflags(write=False)
    grid = QuadratureGrid(x, w, 1.0, Sector.FULL, n)
    return DiscretizedOperator(m, grid, None, Sector.FULL, label=f"sinc-n{n}")


def sinc_top_eigenvalue(n=200):
    """Top eigenvalue at ``n`` and ``2n`` nodes plus a Richardson estimate.

    Returns a dict with ``value`` (at ``n``), ``value_2n``, ``richardson`` and
    ``flag`` set when the fifth digit disagrees with the literature value.
    """
    vals = []
    for m in (n, 2 * n):
        op = sinc_operator(m)
        vals.append(float(eigvalsh(op.matrix, subset_by_index=[m - 1, m - 1])[0]))
    # second-order extrapolation; the difference is at round-off for this kernel
    rich = vals[1] + (vals[1] - vals[0]) / 3.0
    return {"value": vals[0], "value_2n": vals[1], "richardson": rich,
            "flag": abs(round(rich, 5) - SP_SINC_NORM) > 0}


def _sinc_column(x):
    def f(y):
        t = y - x
        return abs(math.sin(t) / t) if t != 0 else 1.0

    v, _ = integrate.quad(f, -1.0, 1.0, points=[x] if -1 < x < 1 else None,
                          epsabs=0.0, epsrel=1e-13, limit=200)
    return v / math.pi


def sinc_schur_bound(scan_points=201):
    """``(1/pi) max_{|x|<=1} int_{-1}^{1} |sin(y-x)/(y-x)| dy`` by scan plus bounded search."""
    xs = np.linspace(-1.0, 1.0, scan_points)
    vals = np.array([_sinc_column(x) for x in xs])
    i = int(np.argmax(vals))
    lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, len(xs) - 1)]
    res = optimize.minimize_scalar(lambda x: -_sinc_column(x), bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-12})
    return max(float(vals[i]), -float(res.fun))


# ---------------------------------------------------------------------------
# concentration dichotomy and Fourier scaling


def fourier_transform(x, values, s):
    """Unitary transform ``(2 pi)^(-1/2) int exp(-i s x) f(x) dx`` by the trapezoid rule.

    ``x`` must be uniformly spaced; ``f`` is assumed negligible at both ends.
    """
    x = np.asarray(x, dtype=float)
    dx = x[1] - x[0]
    if not np.allclose(np.diff(x), dx, rtol=1e-9, atol=0):
        raise DomainError("fourier_transform needs a uniform grid")
    s = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.empty(s.shape, dtype=complex)
    vals = np.asarray(values)
    for i0 in range(0, len(s), 256):
        ph = np.exp(-1j * np.outer(s[i0:i0 + 256], x))
        out[i0:i0 + 256] = ph @ vals
    return out * dx / math.sqrt(2.0 * math.pi)


def _low_band_mass(x, values, h, nodes=96):
    # Gauss-Legendre in [-h, h]; node spacing ~h/nodes, far finer than h/8
    gs, gw = np.polynomial.legendre.leggauss(nodes)
    ft = fourier_transform(x, values, h * gs)
    return float(np.sum(h * gw * np.abs(ft) ** 2))


def concentration_dichotomy(x, values, h=1.0, H=1.0, *, tol=1e-9):
    """Which of the tail inequalities holds for a unit-norm ``f``.

    (a) ``int_{|x|>=H} |f|^2 >= 1/9``; (b) ``int_{|s|>=h} |f~|^2 >= 1/9``.
    General ``h H = 1`` is reduced to ``h = H = 1`` by ``f -> sqrt(H) f(H x)``.

    Returns
    -------
    (tag, space_tail, frequency_tail)
        ``tag`` is ``"a"``, ``"b"`` or ``"both"``.

    Raises
    ------
    InvariantViolation
        If neither tail reaches ``1/9`` (beyond ``tol``).
    """
    if abs(h * H - 1.0) > 1e-12:
        raise DomainError("need h * H = 1")
    x = np.asarray(x, dtype=float)
    v = np.asarray(values)
    # rescale to h = H = 1
    xs = x / H
    vs = v * math.sqrt(H)
    dx = xs[1] - xs[0]
    norm2 = float(np.sum(np.abs(vs) ** 2) * dx)
    if abs(norm2 - 1.0) > 1e-6:
        raise DomainError(f"f must be square-normalized (got norm^2 = {norm2:.8f})")
    dens = CubicSpline(xs, np.abs(vs) ** 2)
    lo, hi = max(-1.0, xs[0]), min(1.0, xs[-1])
    space_tail = max(0.0, norm2 - (float(dens.integrate(lo, hi)) if hi > lo else 0.0))
    freq_tail = norm2 - _low_band_mass(xs, vs, 1.0)
    a_ok = space_tail >= ONE_NINTH - tol
    b_ok = freq_tail >= ONE_NINTH - tol
    if not (a_ok or b_ok):
        raise InvariantViolation(
            f"neither tail reaches 1/9: space {space_tail:.6f}, frequency {freq_tail:.6f}")
    tag = "both" if a_ok and b_ok else ("a" if a_ok else "b")
    return tag, space_tail, freq_tail


def _as_callable(g):
    if callable(g):
        return g
    x, values = g
    spl = CubicSpline(np.asarray(x), np.asarray(values), extrapolate=False)
    return lambda u: np.nan_to_num(spl(u))


def fourier_scaling_check(g, r, *, half_width=20.0, samples=2048, n_freq=512, s_max=None):
    """L2 residual of ``F[g(r .)](s) = (1/r) (F g)(s / r)`` on a common frequency grid.

    ``g`` is a callable or an ``(x, values)`` pair (cubic interpolation).
    """
    if not (r > 0):
        raise DomainError("r must be > 0")
    fn = _as_callable(g)
    x = np.linspace(-half_width, half_width, samples, endpoint=False)
    dx = x[1] - x[0]
    if s_max is None:
        s_max = 0.25 * math.pi / dx * min(1.0, r)
    s = np.linspace(-s_max, s_max, n_freq)
    lhs = fourier_transform(x, fn(r * x), s)
    rhs = fourier_transform(x, fn(x), s / r) / r
    ds = s[1] - s[0]
    return float(math.sqrt(np.sum(np.abs(lhs - rhs) ** 2) * ds))


def random_bandlimited(rng, *, half_width=100.0, samples=2048, max_band=4.0, terms=4):
    """Unit-norm sum of shifted ``sinc^2`` bumps; the transform vanishes beyond ``max_band``."""
    x = np.linspace(-half_width, half_width, samples, endpoint=False)
    band = rng.uniform(0.05, 1.0) * max_band
    f = np.zeros_like(x, dtype=complex)
    for _ in range(terms):
        c = rng.standard_normal() + 1j * rng.standard_normal()
        shift = rng.uniform(-5.0, 5.0)
        f += c * np.sinc(0.5 * band * (x - shift) / math.pi) ** 2
    f /= math.sqrt(float(np.sum(np.abs(f) ** 2)) * (x[1] - x[0]))
    return x, f


def random_dichotomy_trials(n_trials, seed=0):
    """Concentration dichotomy on random band-limited functions at random ``H``."""
    counts = {"a": 0, "b": 0, "both": 0}
    worst = math.inf
    for rng in _trial_rngs(seed, n_trials):
        x, f = random_bandlimited(rng)
        H = float(np.exp(rng.uniform(math.log(0.2), math.log(5.0))))
        tag, sp, fr = concentration_dichotomy(x, f, 1.0 / H, H)
        counts[tag] += 1
        worst = min(worst, max(sp, fr))
    return {"trials": n_trials, "counts": counts, "min_max_tail": worst}


def sinc_monotone_check(points=10001):
    """``sin(t)/t`` is decreasing on ``[0, pi]`` (checked on a grid)."""
    t = np.linspace(0.0, math.pi, points)
    return bool(np.all(np.diff(np.sinc(t / math.pi)) < 0))
