import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from ratiolab.errors import DomainError
from ratiolab.gammafactor import (GammaFactorParams, gamma_term_info, gamma_term_integral, far_line_bound,
                                  far_line_sup, x_l, x_l_array, x_l_duplicated, x_l_logderiv,
                                  x_l_logderiv_array, x_l_logderiv_four_psi, x_l_second_line)
from ratiolab.testfn import make_fejer, make_smooth_bump

# reference values computed once with mpmath at 30 digits, k = 12, N = 1
XL_0_3 = 0.948578024035629356614829923159
XL_1_5 = 1.31594725347858114917793213332

weights = st.sampled_from([4, 12, 18, 26, 40])
levels = st.sampled_from([1, 2, 11, 101])


class TestParams:
    def test_derived_quantities(self):
        p = GammaFactorParams(12, 11)
        assert p.R == 144 * 11
        assert p.log_R == pytest.approx(math.log(1584), abs=1e-15)
        assert p.shift == 5.5

    def test_invalid(self):
        for k, N in [(3, 1), (0, 1), (12, 4), (12, 0)]:
            with pytest.raises(DomainError):
                GammaFactorParams(k, N)


class TestXL:
    def test_reference_values(self):
        p = GammaFactorParams(12)
        assert abs(x_l(0.3, p) - XL_0_3) < 1e-13
        assert abs(x_l(1.5, p) - XL_1_5) < 1e-13

    def test_at_half(self):
        assert x_l(0.5, GammaFactorParams(18, 7)) == pytest.approx(1.0, abs=1e-15)

    @settings(max_examples=300, deadline=None)
    @given(weights, levels, st.floats(-2, 3), st.floats(-30, 30))
    def test_duplicated_form_agrees(self, k, N, x, y):
        p = GammaFactorParams(k, N)
        s = complex(x, y)
        a, b = x_l(s, p), x_l_duplicated(s, p)
        assert abs(a - b) <= 1e-10 * max(1.0, abs(a))

    @settings(max_examples=300, deadline=None)
    @given(weights, levels, st.floats(-2, 3), st.floats(-30, 30))
    def test_functional_equation(self, k, N, x, y):
        p = GammaFactorParams(k, N)
        s = complex(x, y)
        assert abs(x_l(s, p) * x_l(1 - s, p) - 1) < 1e-10

    @settings(max_examples=200, deadline=None)
    @given(weights, levels, st.floats(-100, 100))
    def test_unimodular_on_critical_line(self, k, N, t):
        assert abs(x_l(0.5 + 1j * t, GammaFactorParams(k, N))) == pytest.approx(1.0, abs=1e-12)

    def test_array_matches_scalar(self):
        p = GammaFactorParams(26, 3)
        s = np.array([0.2 + 1j, 0.5 - 4j, 1.7 + 0.1j])
        for si, v in zip(s, x_l_array(s, p)):
            assert abs(v - x_l(si, p)) < 1e-13 * abs(v)

    def test_halved_argument_variant_differs(self):
        p = GammaFactorParams(12)
        assert x_l_second_line(0.5, p) == pytest.approx(1.0, abs=1e-15)
        assert abs(x_l_second_line(0.3, p) - x_l(0.3, p)) > 1e-2


class TestLogDerivative:
    @settings(max_examples=200, deadline=None)
    @given(weights, levels, st.floats(-1, 2), st.floats(-30, 30))
    def test_against_finite_difference(self, k, N, x, y):
        p = GammaFactorParams(k, N)
        s, h = complex(x, y), 1e-5
        fd = -(cmath.log(x_l(s + h, p)) - cmath.log(x_l(s - h, p))) / (2 * h)
        assert abs(fd - x_l_logderiv(s, p)) < 1e-6 * max(1.0, abs(fd))

    @settings(max_examples=200, deadline=None)
    @given(weights, levels, st.floats(-1, 2), st.floats(-30, 30))
    def test_four_digamma_form(self, k, N, x, y):
        p = GammaFactorParams(k, N)
        s = complex(x, y)
        assert abs(x_l_logderiv(s, p) - x_l_logderiv_four_psi(s, p)) < 1e-11

    def test_real_on_critical_line(self):
        p = GammaFactorParams(12, 5)
        vals = x_l_logderiv_array(0.5 + 1j * np.linspace(-20, 20, 41), p)
        assert np.max(np.abs(vals.imag)) < 1e-13


class TestGammaTerm:
    def test_against_independent_quadrature(self):
        f = make_fejer(1.0)
        p = GammaFactorParams(12, 1)
        L = p.log_R

        def integrand(t):
            return 2 * x_l_logderiv(0.5 + 2j * math.pi * t / L, p).real * f.phi_real(t)

        # smooth head by adaptive quadrature; the rest by the decay of phi
        head = integrate.quad(integrand, 0, 2000, limit=5000, epsabs=1e-12)[0]
        tail_bound = 2 * 2 * math.log(2000) / (2 * math.pi**2 * 2000)
        res = gamma_term_info(f, p, 1e-10)
        assert abs(res.value.real - head / L) < tail_bound / L
        assert abs(res.value.imag) < 1e-12

    def test_bump_reaches_tolerance(self):
        f = make_smooth_bump(1.0, 128)
        p = GammaFactorParams(18)
        res = gamma_term_info(f, p, 1e-10)
        assert res.error_estimate < 1e-10
        assert gamma_term_integral(f, p) == pytest.approx(res.value.real, abs=1e-12)

    def test_linear_in_phi(self):
        f = make_fejer(0.5)
        p = GammaFactorParams(20)
        assert gamma_term_integral(f.scaled(3.0), p) == pytest.approx(3 * gamma_term_integral(f, p), rel=1e-12)
        assert gamma_term_integral(f.scaled(0.0), p) == 0.0


class TestFarLineBound:
    @pytest.mark.parametrize("k", [12, 16, 24, 40])
    def test_sup_below_bound(self, k):
        assert far_line_sup(k) <= far_line_bound(k)
