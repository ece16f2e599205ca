import numpy as np
import pytest

from anisokernel import ConvergenceError, DomainError, KernelParams, ParameterError
from anisokernel.discretize import Sector
from anisokernel.scaling_tc import (OddNormSolver, TcCurvePoint, norm_scaling_check, solve_tau,
                                    tau_caps, tc_curve)
from anisokernel.spectra import largest_eigenvalue


@pytest.fixture(scope="module")
def tau01():
    solver = OddNormSolver()
    return solve_tau(0.01, solver=solver), solver


class TestNormScaling:
    def test_identity(self):
        assert norm_scaling_check(0.01, 1.0, 1.0) == 0.0

    def test_doubling(self):
        res, unc = norm_scaling_check(0.01, 1.0, 2.0, return_uncertainty=True)
        assert res <= 1e-6
        assert res <= 2 * max(unc, 1e-13)

    def test_temperature_form(self):
        T = 0.9
        lhs, _ = largest_eigenvalue(KernelParams(0.01 * T, 1.0), Sector.ODD)
        rhs, _ = largest_eigenvalue(KernelParams(0.01, T), Sector.ODD)
        assert lhs == pytest.approx(T * rhs, abs=1e-10)

    @pytest.mark.parametrize("a,T,b,sector", [(0.02, 0.8, 1.5, Sector.EVEN),
                                              (0.05, 1.2, 0.7, Sector.ODD),
                                              (0.03, 1.0, 0.5, Sector.EVEN)])
    def test_random_triples(self, a, T, b, sector):
        res, unc = norm_scaling_check(a, T, b, sector, return_uncertainty=True)
        assert res <= 2 * max(unc, 1e-12)

    @pytest.mark.parametrize("args", [(0, 1, 1), (0.01, -1, 1), (0.01, 1, 0)])
    def test_domain(self, args):
        with pytest.raises(DomainError):
            norm_scaling_check(*args)


class TestSolveTau:
    def test_sandwich(self, tau01):
        pt, _ = tau01
        lo, hi = tau_caps(0.01)
        assert lo == pytest.approx(0.005 ** 0.4 / 12) and hi == pytest.approx(3 * 0.01 ** 0.4)
        assert lo <= pt.tau <= hi and pt.sandwich_ok
        assert 0 < pt.tau < 1 and pt.residual <= 1e-10

    def test_measured(self, tau01):
        assert tau01[0].tau == pytest.approx(0.3045, abs=1e-4)

    def test_self_consistency(self, tau01):
        pt, solver = tau01
        T = 1 - pt.tau
        assert solver.psi(0.01 * T) == pytest.approx(pt.tau, abs=1e-9)

    def test_warm_start_matches_fresh(self, tau01):
        _, solver = tau01
        assert solver.refinements < solver.solves
        x = 0.01 * (1 - tau01[0].tau)
        fresh, _ = largest_eigenvalue(KernelParams(x), Sector.ODD)
        assert solver(x) == pytest.approx(fresh, abs=1e-10)

    def test_monotone_in_a(self, tau01):
        assert solve_tau(0.02).tau > tau01[0].tau

    def test_g_monotone_on_bracket(self):
        solver = OddNormSolver()
        Ts = np.linspace(0.5, 1.0, 11)
        g = np.array([solver(0.01 * T) - T for T in Ts])
        assert np.all(np.diff(g) < 0)

    def test_no_sign_change(self):
        with pytest.raises(ConvergenceError, match=r"g\(0.5\)"):
            solve_tau(50.0)

    def test_bad_inputs(self):
        with pytest.raises(DomainError):
            solve_tau(0.0)
        with pytest.raises(ParameterError):
            solve_tau(0.01, tol=0)


class TestCurve:
    def test_empty(self):
        assert tc_curve([]) == ([], {})

    def test_sorted_and_errors_collected(self):
        pts, errs = tc_curve([0.05, 50.0, 0.02])
        assert [p.a for p in pts] == [0.02, 0.05]
        assert list(errs) == [50.0]
        assert all(p.sandwich_ok for p in pts)

    def test_point_dict(self):
        d = TcCurvePoint(0.01, 0.3, 5, 1e-12).as_dict()
        assert list(d) == ["a", "tau", "residual", "iterations", "lower_cap", "upper_cap"]
