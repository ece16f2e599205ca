import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anisokernel import DivergenceError, DomainError, KernelParams, ParameterError
from anisokernel.kernel import (eval_antisym, eval_convolution_symbol, eval_full,
                                eval_polar_antisym, hs_norm_squared)

coord = st.floats(-50, 50, allow_nan=False)
small_a = st.floats(0, 2, allow_nan=False)


class TestKernelParams:
    def test_defaults(self):
        p = KernelParams(0.1)
        assert (p.T, p.t) == (1.0, 2.0)

    @pytest.mark.parametrize("kw", [dict(a=-1), dict(a=0.1, T=0), dict(a=0.1, t=0),
                                    dict(a=float("nan")), dict(a=0.1, T=float("inf"))])
    def test_rejects_invalid(self, kw):
        with pytest.raises(ParameterError):
            KernelParams(**kw)

    def test_reduced_a(self):
        assert KernelParams(0.2, T=0.5, t=3).reduced_a == pytest.approx(0.2 * 0.25)


class TestEvalFull:
    def test_origin_at_a0(self):
        assert eval_full(KernelParams(0), 0, 0) == pytest.approx(1 / math.pi, rel=1e-15)

    def test_a1_diagonal(self):
        assert eval_full(KernelParams(1), 1, 1) == pytest.approx(1 / (5 * math.pi), rel=1e-15)

    def test_swap(self):
        p = KernelParams(0.3, T=0.7)
        assert eval_full(p, 1.2, -0.5) == eval_full(p, -0.5, 1.2)

    def test_generalized_t_matches_quartic(self):
        x, y = np.meshgrid(np.linspace(-5, 5, 21), np.linspace(-4, 6, 21))
        p2 = KernelParams(0.3)
        expected = 1 / (math.pi * (1 + (x - y) ** 2 + 0.09 * (x * x + y * y) ** 2))
        assert np.allclose(eval_full(p2, x, y), expected, rtol=1e-15, atol=0)

    def test_nonfinite(self):
        with pytest.raises(DomainError):
            eval_full(KernelParams(0.1), np.inf, 0)

    @settings(max_examples=200, deadline=None)
    @given(small_a, st.floats(0.1, 3), coord, coord)
    def test_symmetric_and_bounded(self, a, T, x, y):
        p = KernelParams(a, T)
        v = eval_full(p, x, y)
        assert v == eval_full(p, y, x)
        assert 0 < v <= 1 / (math.pi * T * T) * (1 + 1e-15)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(1e-3, 2), coord, coord)
    def test_below_convolution(self, a, x, y):
        if x == 0 and y == 0:
            return
        assert eval_full(KernelParams(a), x, y) < eval_full(KernelParams(0), x, y) or \
            a * a * (x * x + y * y) ** 2 < 1e-15 * (1 + (x - y) ** 2)


class TestAntisym:
    def test_a0_point(self):
        assert eval_antisym(KernelParams(0), 1, 1) == pytest.approx(2 / (5 * math.pi), rel=1e-15)

    def test_zero_on_axes(self):
        p = KernelParams(0.2)
        assert eval_antisym(p, 3.0, 0.0) == 0 and eval_antisym(p, 0.0, 3.0) == 0

    def test_odd_in_each_argument(self):
        p = KernelParams(0.1)
        assert eval_antisym(p, 2, 3) == -eval_antisym(p, -2, 3) == -eval_antisym(p, 2, -3)

    def test_requires_T1_and_quartic(self):
        with pytest.raises(ParameterError):
            eval_antisym(KernelParams(0.1, T=2), 1, 1)
        with pytest.raises(ParameterError):
            eval_antisym(KernelParams(0.1, t=3), 1, 1)

    @settings(max_examples=200, deadline=None)
    @given(small_a, coord, coord)
    def test_difference_form_oracle(self, a, x, y):
        p = KernelParams(a)
        oracle = 0.5 * (eval_full(p, x, y) - eval_full(p, x, -y))
        got = eval_antisym(p, x, y)
        assert got == pytest.approx(oracle, rel=1e-9, abs=1e-13 * eval_full(p, x, y))

    def test_no_cancellation_far_out(self):
        # the difference form loses every digit here; compare with exact rationals
        from fractions import Fraction

        p = KernelParams(0.0)
        x, y = 1e8, 1e-8
        X, Y = Fraction(x), Fraction(y)
        c = 1 + X * X + Y * Y
        exact = float(4 * X * Y / ((c - 2 * X * Y) * (c + 2 * X * Y))) / (2 * math.pi)
        assert eval_antisym(p, x, y) == pytest.approx(exact, rel=1e-14)
        naive = 0.5 * (eval_full(p, x, y) - eval_full(p, x, -y))
        assert naive != pytest.approx(exact, rel=1e-3, abs=0)


class TestPolar:
    def test_a0_point(self):
        v = eval_polar_antisym(KernelParams(0), math.sqrt(2), math.pi / 4)
        assert v == pytest.approx(2 / (5 * math.pi), rel=1e-14)

    def test_origin(self):
        assert eval_polar_antisym(KernelParams(0.3), 0.0, 1.234) == 0

    def test_specific_point(self):
        p = KernelParams(0.05)
        r, phi = 3.0, 1.0
        cart = eval_antisym(p, r * math.cos(phi), r * math.sin(phi))
        assert eval_polar_antisym(p, r, phi) == pytest.approx(cart, rel=1e-14)

    def test_random_sample(self):
        rng = np.random.default_rng(11)
        a = rng.uniform(0, 1, 10_000)
        r = rng.uniform(0, 20, 10_000)
        phi = rng.uniform(0, 2 * math.pi, 10_000)
        for ai in np.unique(np.round(a, 1)):
            m = np.round(a, 1) == ai
            p = KernelParams(float(ai))
            pv = eval_polar_antisym(p, r[m], phi[m])
            cv = eval_antisym(p, r[m] * np.cos(phi[m]), r[m] * np.sin(phi[m]))
            assert np.all(np.abs(pv - cv) <= 1e-13 * (1 + np.abs(pv)))

    def test_negative_radius(self):
        with pytest.raises(DomainError):
            eval_polar_antisym(KernelParams(0.1), -1.0, 0.0)


class TestConvolutionSymbol:
    def test_norm_values(self):
        assert eval_convolution_symbol(1, 0) == 1
        assert eval_convolution_symbol(2, 0) == 0.5

    def test_even(self):
        assert eval_convolution_symbol(1, -3) == pytest.approx(math.exp(-3), rel=1e-15)

    def test_bad_T(self):
        with pytest.raises(ParameterError):
            eval_convolution_symbol(0, 1)

    def test_matches_fourier_transform_of_kernel(self):
        # int exp(-isx) / (pi (1 + x^2)) dx = exp(-|s|)
        from scipy.integrate import quad

        s = 1.3
        v = 2 * quad(lambda x: 1 / (math.pi * (1 + x * x)), 0, np.inf, weight="cos", wvar=s)[0]
        assert v == pytest.approx(eval_convolution_symbol(1, s), rel=1e-9)


class TestHilbertSchmidt:
    def test_diverges_at_zero(self):
        with pytest.raises(DivergenceError):
            hs_norm_squared(KernelParams(0))

    def test_self_convergence(self):
        p = KernelParams(1.0)
        v1, v2 = hs_norm_squared(p, 64), hs_norm_squared(p, 128)
        assert math.isfinite(v1) and abs(v1 - v2) <= 1e-6 * v2

    def test_monotone_in_a(self):
        assert hs_norm_squared(KernelParams(0.5)) > hs_norm_squared(KernelParams(1.0))

    def test_against_cartesian_quadrature(self):
        from scipy.integrate import dblquad

        p = KernelParams(1.0)
        v, _ = dblquad(lambda y, x: eval_full(p, x, y) ** 2, -30, 30, -30, 30, epsabs=1e-12)
        # tail beyond |x|,|y| = 30 is < 1e-8 at a = 1
        assert hs_norm_squared(p) == pytest.approx(v, rel=1e-6)

    def test_requires_quartic(self):
        with pytest.raises(ParameterError):
            hs_norm_squared(KernelParams(1.0, t=1))
