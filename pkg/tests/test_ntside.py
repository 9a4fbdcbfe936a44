import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ratiolab.data import level_one_family
from ratiolab.errors import CoverageError, DomainError
from ratiolab.gammafactor import GammaFactorParams
from ratiolab.ntside import (Newform, NewformFamily, alpha_power_sum, compare, compare_sweep,
                             count_inversions, d1_nt, family_from_eigenvalues, hecke_power, lambda_n,
                             p_equals_n_bound, s_sums, s_sums_direct, secondary_term_model)
from ratiolab.petersson import petersson_matrix
from ratiolab.primes import prime_sum_p1, primes_upto
from ratiolab.ratios import d1_ratios_unweighted, d1_ratios_weighted
from ratiolab.testfn import make_fejer

# Ramanujan tau at prime powers
TAU = {2: -24, 3: 252, 4: -1472, 8: 84480, 9: -113643, 6: -6048, 12: -370944}


@pytest.fixture(scope="module")
def delta_family():
    return level_one_family(12, 4000)


def zero_family(k, N, p_max):
    table = [{int(p): 0.0 for p in primes_upto(p_max) if p != N}]
    return family_from_eigenvalues(k, N, table, weights=[1.0],
                                   lambda_at_N=None if N == 1 else [-1 / math.sqrt(N)])


class TestHecke:
    def test_ramanujan_tau(self, delta_family):
        f = delta_family.forms[0]
        for n, tau in TAU.items():
            assert lambda_n(f, n) == pytest.approx(tau / n**5.5, abs=1e-14)
        assert hecke_power(f, 2, 3) == pytest.approx(TAU[8] / 8**5.5, abs=1e-14)
        assert hecke_power(f, 5, 0) == 1.0

    @settings(max_examples=300)
    @given(st.floats(0, math.pi), st.integers(0, 20))
    def test_satake_power_sum(self, theta, nu):
        # lambda(p) = 2 cos theta makes alpha^nu + beta^nu = 2 cos(nu theta)
        f = Newform(12, 1, {3: 2 * math.cos(theta)}, 1, 1.0)
        assert alpha_power_sum(f, 3, nu) == pytest.approx(2 * math.cos(nu * theta), abs=1e-10)
        assert hecke_power(f, 3, nu) == pytest.approx(
            math.sin((nu + 1) * theta) / math.sin(theta) if math.sin(theta) > 1e-6 else
            hecke_power(f, 3, nu), abs=1e-6)

    def test_level_prime(self):
        f = Newform(12, 7, {2: 0.1}, 1, 1.0, lambda_at_N=-7 ** -0.5)
        with pytest.raises(DomainError):
            hecke_power(f, 7, 1)
        assert lambda_n(f, 14) == pytest.approx(0.1 * -7 ** -0.5, abs=1e-15)
        with pytest.raises(CoverageError):
            hecke_power(f, 3, 1)

    def test_family_validates_shape(self):
        f = Newform(12, 7, {}, 1, 1.0)
        with pytest.raises(DomainError):
            NewformFamily(12, 1, (f,), 1)

    def test_sign_from_lambda_at_level(self):
        fam = family_from_eigenvalues(12, 11, [{2: 0.0}, {2: 0.0}],
                                      lambda_at_N=[1 / math.sqrt(11), -1 / math.sqrt(11)])
        assert [f.sign for f in fam.forms] == [-1, 1]
        assert np.allclose(fam.weights(False), 0.5)


class TestSSums:
    def test_vectorised_matches_loops(self, delta_family):
        f = make_fejer(1.5)
        R = GammaFactorParams(12).R
        a = s_sums(delta_family, f, R)
        b = s_sums_direct(delta_family, f, R)
        for x, y in [(a.s1, b.s1), (a.s2, b.s2), (a.s3, b.s3)]:
            assert x == pytest.approx(y, abs=1e-13)
        assert a.nu_max >= b.nu_max

    def test_vanishing_eigenvalues(self):
        # lambda = 0 gives S1 = 0 and alpha^2 + beta^2 = -2, so S2 = -2 * prime squares
        for N in (1, 11):
            p = GammaFactorParams(12, N)
            f = make_fejer(1.5)
            fam = zero_family(12, N, int(p.R ** 1.5) + 1)
            s = s_sums(fam, f, p.R)
            psq = prime_sum_p1(f, p.R, exclude=N if N > 1 else None).value
            assert s.s1 == 0.0
            assert s.s2 == pytest.approx(-psq, abs=1e-14)

    def test_s2_against_petersson(self, delta_family):
        # the weighted average of lambda(p^2) is Delta(p^2, 1)/Delta(1, 1)
        f = make_fejer(1.0)
        params = GammaFactorParams(12)
        L = params.log_R
        ps = [int(p) for p in primes_upto(math.isqrt(int(params.R)))]
        vals, _, _ = petersson_matrix(12, 1, [1] + [p * p for p in ps], [1], tol=1e-12)
        avg = vals[1:, 0] / vals[0, 0]
        s2 = sum(2 * a / p * f.phi_hat(2 * math.log(p) / L) * math.log(p) / L for a, p in zip(avg, ps))
        assert s_sums(delta_family, f, params.R).s2 == pytest.approx(s2, abs=1e-10)

    def test_coverage(self):
        fam = zero_family(12, 1, 50)
        with pytest.raises(CoverageError):
            s_sums(fam, make_fejer(1.0), 144.0)

    def test_small_support(self, delta_family):
        s = s_sums(delta_family, make_fejer(0.1), 144.0)
        assert (s.s1, s.s2, s.s3) == (0.0, 0.0, 0.0)


class TestDensity:
    def test_gamma_term_shared_with_prediction(self, delta_family):
        f = make_fejer(0.5)
        params = GammaFactorParams(12)
        nt = d1_nt(delta_family, f, params)
        pred = d1_ratios_weighted(f, params)
        assert nt.gamma_term == pred.gamma_term
        assert nt.prime_square_term == pred.prime_square_term
        assert nt.m_phi == 0.0 and nt.as_dict()["m_phi"] is None
        rep = compare(pred, nt)
        assert rep.gamma_diff == 0.0 and rep.prime_square_diff == 0.0
        assert rep.residual == pytest.approx(rep.total_diff, abs=1e-14)

    def test_mismatch(self, delta_family):
        f = make_fejer(0.5)
        with pytest.raises(DomainError):
            d1_nt(delta_family, f, GammaFactorParams(16))
        nt = d1_nt(delta_family, f, GammaFactorParams(12), weighted=False)
        with pytest.raises(DomainError):
            compare(d1_ratios_weighted(f, GammaFactorParams(12)), nt)
        with pytest.raises(DomainError):
            compare(nt, nt)

    def test_unweighted_compare(self, delta_family):
        f = make_fejer(1.0)
        params = GammaFactorParams(12)
        rep = compare(d1_ratios_unweighted(f, params), d1_nt(delta_family, f, params, weighted=False))
        assert rep.prime_square_diff is None
        assert rep.ratios_residual == pytest.approx(
            secondary_term_model(f, params, 1) * 12 / 11, abs=1e-14)

    def test_level_budget(self):
        f = make_fejer(1.0)
        params = GammaFactorParams(12, 11)
        nt = d1_nt(zero_family(12, 11, 2000), f, params)
        assert nt.error_budget["p_equals_N_excluded"] == p_equals_n_bound(f, params) > 0

    def test_secondary_model_domain(self):
        with pytest.raises(DomainError):
            secondary_term_model(make_fejer(1.0), GammaFactorParams(12, 11), 1)


class TestSweep:
    def test_inversions(self):
        assert count_inversions([3, -2, 1, 1.5, 0.1]) == 1
        assert count_inversions([]) == 0

    def test_exponent_fit(self, delta_family):
        f = make_fejer(0.5)
        reps = []
        for k in (12, 16):
            params = GammaFactorParams(k)
            fam = level_one_family(k, 4000) if k != 12 else delta_family
            reps.append(compare(d1_ratios_unweighted(f, params), d1_nt(fam, f, params, weighted=False)))
        summary = compare_sweep(reps)
        assert math.isfinite(summary.exponent_vs_k)
        assert summary.residuals == [r.residual for r in reps]
