import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ratiolab.errors import DomainError
from ratiolab.eulerprod import ZETA2, euler_a_array
from ratiolab.gammafactor import GammaFactorParams, gamma_term_integral, x_l_array
from ratiolab.primes import prime_sum_p1, secondary_sum_unweighted
from ratiolab.ratios import (DensityBreakdown, d1_ratios_unweighted, d1_ratios_weighted, m_phi, m_phi_info,
                             r_prime_rr_info)
from ratiolab.specfun import EULER_GAMMA, zeta_array
from ratiolab.testfn import gauss_legendre, make_fejer, make_smooth_bump, rapid_window


@pytest.fixture(scope="module")
def bump1():
    return make_smooth_bump(1.0, 128)


def m_phi_shifted_line(f, params, eps=0.3, panels=800):
    """M(phi) plus the half residue, integrated on Im z = -eps where zeta(1+u) is regular.

    u = 4 pi i z / log R has Re u > 0 on that line, so no principal value is
    needed; moving the line across the pole picks up exactly half the residue.
    """
    L = params.log_R
    T = rapid_window(f, 1e-14)
    x, w = gauss_legendre(32)
    edges = np.linspace(-T, T, panels + 1)
    mid, half = (edges[1:] + edges[:-1]) / 2, (edges[1:] - edges[:-1]) / 2
    t = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wt = (half[:, None] * w[None, :]).ravel()
    z = t - 1j * eps
    u = 4j * np.pi * z / L
    a_vals, _ = euler_a_array(u, 1e-12)
    F = (x_l_array(0.5 + 2j * np.pi * z / L, params) * ZETA2 / zeta_array(2 + 2 * u, tol=1e-14)
         * a_vals * zeta_array(1 + u, tol=1e-14))
    if params.N > 1:
        F = F * np.exp(-2j * np.pi * z * math.log(params.N) / L)
    sign = -1.0 if (params.k // 2) % 2 else 1.0
    level = 1.0 if params.N == 1 else -1.0 / params.N
    integral = np.sum(wt * f.phi(z) * F)
    return float((2 * sign * level / L * integral).real)


class TestMPhi:
    @pytest.mark.slow
    def test_principal_value_against_shifted_line(self, bump1):
        params = GammaFactorParams(4, 101)
        info = m_phi_info(bump1, params, tol=1e-10)
        oracle = m_phi_shifted_line(bump1, params)
        assert abs(info.value + info.residue_term - oracle) < 1e-9
        assert info.value == pytest.approx(0.0021285, abs=1e-7)

    @pytest.mark.slow
    def test_level_one_against_shifted_line(self, bump1):
        params = GammaFactorParams(12, 1)
        info = m_phi_info(bump1, params, tol=1e-10)
        assert abs(info.value + info.residue_term - m_phi_shifted_line(bump1, params)) < 1e-8

    def test_residue_term(self):
        f = make_fejer(0.5)
        info = m_phi_info(f, GammaFactorParams(18, 1))
        # i^k mu(N) phi(0)/(2N) with k = 18, N = 1
        assert info.residue_term == pytest.approx(-0.25, abs=1e-15)
        assert info.without_pole_part == info.value - info.pole_part

    def test_mertens_completion_scales(self):
        f = make_fejer(0.5)
        p = GammaFactorParams(12)
        std = m_phi(f, p)
        mer = m_phi(f, p, completion="mertens")
        assert mer == pytest.approx(math.exp(-EULER_GAMMA) * std, rel=1e-12)
        with pytest.raises(DomainError):
            m_phi(f, p, completion="other")

    def test_linear_and_zero(self):
        f = make_fejer(0.5)
        p = GammaFactorParams(16)
        a, b = m_phi_info(f, p), m_phi_info(f.scaled(-2.0), p)
        # the scaled run may stop at another window, so agreement is up to both budgets
        assert abs(b.value + 2 * a.value) <= b.error_estimate + 2 * a.error_estimate
        assert m_phi(f.scaled(0.0), p) == 0.0

    @settings(max_examples=50, deadline=None)
    @given(st.sampled_from([12, 18, 26]), st.sampled_from([1, 3, 101]), st.floats(0.01, 40))
    def test_integrand_reflection(self, k, N, t):
        # the folding relies on the integrand at -t being the conjugate of the one at t
        p = GammaFactorParams(k, N)
        L = p.log_R
        ts = np.array([t, -t])
        u = 4j * np.pi * ts / L
        vals = (x_l_array(0.5 + 2j * np.pi * ts / L, p) / zeta_array(2 + 2 * u)
                * euler_a_array(u)[0] * zeta_array(1 + u)
                * np.exp(-2j * np.pi * ts * math.log(N) / L))
        assert abs(vals[0] - np.conj(vals[1])) < 1e-10 * max(1.0, abs(vals[0]))


class TestRPrime:
    def test_parts_add_up(self):
        p = GammaFactorParams(12, 7)
        res = r_prime_rr_info(0.4 + 1j, p)
        assert res.value == res.prime_sum + res.second_term
        assert res.tail_estimate < 1e-4

    def test_prime_sum_for_large_r(self):
        # sum_p log p / p^{1+2r} is dominated by p = 2 when r is large
        res = r_prime_rr_info(4.2, GammaFactorParams(12))
        head = math.log(2) / 2**9.4 + math.log(3) / 3**9.4
        assert res.prime_sum.real == pytest.approx(head, rel=1e-3)

    def test_domain(self):
        with pytest.raises(DomainError):
            r_prime_rr_info(-0.1, GammaFactorParams(12))


class TestPredictions:
    def test_weighted_components(self):
        f = make_fejer(0.5)
        p = GammaFactorParams(12, 1)
        d = d1_ratios_weighted(f, p)
        assert d.gamma_term == pytest.approx(gamma_term_integral(f, p), abs=1e-12)
        assert d.prime_square_term == prime_sum_p1(f, p.R).value
        assert d.total == pytest.approx(d.gamma_term + d.prime_square_term + d.m_phi, abs=1e-15)
        assert d.secondary_sum == 0.0 and d.s1 == 0.0
        row = d.as_dict()
        assert row["secondary_sum"] is None and row["m_phi"] == d.m_phi

    def test_unweighted_components(self):
        f = make_fejer(1.0)
        p = GammaFactorParams(12, 11)
        d = d1_ratios_unweighted(f, p)
        assert d.secondary_sum == secondary_sum_unweighted(f, p.R, 11).value
        assert d.m_phi == 0.0 and d.prime_square_term == 0.0
        assert d.as_dict()["m_phi"] is None

    def test_breakdown_rejects_stray_component(self):
        with pytest.raises(DomainError):
            DensityBreakdown("weighted", "ratios", m_phi=1.0, present=frozenset({"gamma_term"}))
        with pytest.raises(DomainError):
            DensityBreakdown("both", "ratios")
        with pytest.raises(DomainError):
            DensityBreakdown("weighted", "elsewhere")
