import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anisokernel import DomainError, ParameterError
from anisokernel.asymptotics import (ExponentFit, deficiency_sweep, fit_exponent,
                                     richardson_a25, widom_compare, widom_operator,
                                     widom_spectrum)
from anisokernel.discretize import Sector


class TestFitExponent:
    def test_exact_power(self):
        a = np.geomspace(1e-4, 1e-1, 5)
        fit = fit_exponent(zip(a, 7 * a ** 0.4))
        assert fit.exponent == pytest.approx(0.4, abs=1e-12)
        assert fit.prefactor == pytest.approx(7, rel=1e-12)
        assert fit.rms_residual <= 1e-12
        assert fit.a_range == pytest.approx((1e-4, 1e-1))

    def test_constant(self):
        fit = fit_exponent([(a, 3.0) for a in (0.1, 0.2, 0.4)])
        assert abs(fit.exponent) <= 1e-12

    @settings(max_examples=50, deadline=None)
    @given(st.floats(-3, 3), st.floats(1e-3, 1e3))
    def test_refit_own_prediction(self, p, c):
        a = np.geomspace(1e-3, 1, 6)
        fit = fit_exponent(zip(a, c * a ** p))
        refit = fit_exponent(zip(a, fit.predict(a)))
        assert refit.exponent == pytest.approx(fit.exponent, abs=1e-12)

    def test_errors(self):
        with pytest.raises(DomainError):
            fit_exponent([(0.1, 1.0), (0.2, 0.0), (0.3, 1.0)])
        with pytest.raises(DomainError):
            fit_exponent([(-0.1, 1.0), (0.2, 1.0), (0.3, 1.0)])
        with pytest.raises(ParameterError):
            fit_exponent([(0.1, 1.0), (0.2, 1.0)])

    def test_dict(self):
        d = ExponentFit(1.0, 0.4, 0.0, (0.1, 0.2)).as_dict()
        assert d["a_range"] == [0.1, 0.2]


class TestDeficiencySweep:
    def test_chain_and_order(self):
        a = [0.02, 0.05]
        even = deficiency_sweep(2, a, Sector.EVEN)
        odd = deficiency_sweep(2, a, Sector.ODD)
        for (_, de), (_, do) in zip(even, odd):
            assert 0 < de < do < 1

    def test_higher_mode(self):
        d0 = deficiency_sweep(2, [0.05], Sector.EVEN, 0)[0][1]
        d1 = deficiency_sweep(2, [0.05], Sector.EVEN, 1)[0][1]
        assert d1 > d0

    def test_t1_short_window(self):
        pts = deficiency_sweep(1, np.geomspace(0.01, 0.1, 4), Sector.EVEN, tol=1e-7)
        assert fit_exponent(pts).exponent == pytest.approx(2 / 3, abs=0.07)

    def test_j_range(self):
        with pytest.raises(ParameterError):
            deficiency_sweep(2, [0.1], j=6)

    def test_empty(self):
        assert deficiency_sweep(2, []) == []


class TestWidomOperator:
    def test_symmetric(self):
        m = widom_operator(64, 6.0).matrix
        assert np.array_equal(m, m.T)

    @pytest.mark.parametrize("x0,s0,sig", [(1.0, 20.0, 0.5), (0.8, 15.0, 0.4)])
    def test_wave_packet(self, x0, s0, sig):
        op = widom_operator(256, 12.0)
        x = op.grid.nodes
        f = np.exp(-(x - x0) ** 2 / (2 * sig ** 2) + 1j * s0 * x)
        q = np.real(np.vdot(f, op.matrix @ f) / np.vdot(f, f))
        v = sig ** 2 / 2
        assert q == pytest.approx(s0 + 4 * (x0 ** 4 + 6 * x0 ** 2 * v + 3 * v * v), rel=1e-6)

    def test_convergence(self):
        base = widom_spectrum(256, 12.0, 4)["merged"]
        finer = widom_spectrum(512, 12.0, 4)["merged"]
        wider = widom_spectrum(512, 24.0, 4)["merged"]
        for b, f, w in zip(base, finer, wider):
            assert abs(f - b) / b < 5e-3 and abs(w - f) / f < 5e-3
        assert base[0] == pytest.approx(1.28754, abs=1e-5)

    def test_parity_classes(self):
        sp = widom_spectrum(256, 12.0, 6)
        assert len(sp["even"]) == len(sp["odd"]) == 3
        assert sp["odd"][0] > sp["even"][0] > 0
        assert np.all(np.diff(sp["merged"]) > 0)
        assert sp["merged"][:2] == [sp["even"][0], sp["odd"][0]]

    def test_coefficient(self):
        # scaling x -> c^(-1/5) x maps |D| + c x^4 onto c^(1/5) (|D| + x^4)
        m4 = widom_spectrum(256, 12.0, 2, coeff=4.0)["merged"][0]
        m2 = widom_spectrum(256, 12.0, 2, coeff=2.0)["merged"][0]
        assert m4 / m2 == pytest.approx(2 ** 0.2, rel=3e-3)

    @pytest.mark.parametrize("n", [32, 100])
    def test_bad_n(self, n):
        with pytest.raises(ParameterError):
            widom_operator(n)


@pytest.fixture(scope="module")
def report():
    return widom_compare(0, [0.04, 0.02, 0.01])


class TestWidomCompare:
    def test_rescaled_in_sandwich(self, report):
        for row in report.rows:
            if row["j"] == 0:
                assert 1 / 12 <= row["ratio"] <= 3

    def test_cauchy_trend(self, report):
        for align in ("even", "odd", "merged"):
            ch = [r["relative_change"] for r in report.rows
                  if r["alignment"] == align and r["relative_change"] is not None]
            assert len(ch) == 2 and ch[1] < ch[0]

    def test_convergence_reported(self, report):
        assert report.convergence["n_doubling"] < 1e-8
        assert report.convergence["width_doubling"] < 5e-3
        assert set(report.as_dict()) == {"mu", "mu_refined", "convergence", "rows"}

    def test_rows_carry_raw_values(self, report):
        r = report.rows[-1]
        assert r["ratio"] == pytest.approx(r["deficiency"] * r["a"] ** -0.4)
        assert r["extrapolated"] is not None

    def test_empty(self):
        assert widom_compare(1, []).rows == []

    def test_richardson(self):
        f = lambda a: 2.0 + 5.0 * a ** 0.4
        assert richardson_a25(0.02, f(0.02), 0.01, f(0.01)) == pytest.approx(2.0, rel=1e-12)
