import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ratiolab.errors import DomainError
from ratiolab.primes import (fit_exponent, hyp_s_sum, is_prime, iter_prime_segments, mertens_limit,
                             mertens_product, prime_sum_p1, primes_upto, secondary_sum_unweighted,
                             sieve_primes)
from ratiolab.specfun import EULER_GAMMA
from ratiolab.testfn import make_fejer


def trial_division(n: int) -> bool:
    if n < 2:
        return False
    return all(n % d for d in range(2, math.isqrt(n) + 1))


class TestSieve:
    def test_known_counts(self):
        assert len(sieve_primes(10**6)) == 78498
        assert len(sieve_primes(100)) == 25
        assert primes_upto(1.9).size == 0
        assert list(primes_upto(30)) == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]

    def test_segments_join_to_full_table(self):
        segs = np.concatenate(list(iter_prime_segments(200_000, segment=4096)))
        assert np.array_equal(segs, sieve_primes(200_000).primes)

    def test_segment_lower_bound(self):
        segs = np.concatenate(list(iter_prime_segments(1000, lo=900)))
        assert segs[0] == 907 and segs[-1] == 997

    def test_table_limit(self):
        t = sieve_primes(1000)
        assert t.upto(100).size == 25
        with pytest.raises(DomainError):
            t.upto(2000)
        with pytest.raises(DomainError):
            sieve_primes(1)

    def test_is_prime_agrees_with_sieve(self):
        flags = np.zeros(100_001, dtype=bool)
        flags[sieve_primes(100_000).primes] = True
        assert all(is_prime(n) == flags[n] for n in range(100_001))

    @settings(max_examples=300)
    @given(st.integers(0, 10**7))
    def test_is_prime_against_trial_division(self, n):
        assert is_prime(n) == trial_division(n)

    def test_large_known_values(self):
        assert is_prime(2**61 - 1)
        assert not is_prime(3215031751)  # strong pseudoprime to bases 2, 3, 5, 7


class TestPrimeSums:
    def test_p1_against_loop(self):
        f = make_fejer(1.0)
        R = 144.0 * 7
        L = math.log(R)
        loop = sum(2 * f.phi_hat(2 * math.log(p) / L) * math.log(p) / (p * L)
                   for p in range(2, 100) if trial_division(p) and p < R ** 0.5)
        res = prime_sum_p1(f, R)
        assert res.value == pytest.approx(loop, abs=1e-14)
        res_ex = prime_sum_p1(f, R, exclude=7)
        drop = 2 * f.phi_hat(2 * math.log(7) / L) * math.log(7) / (7 * L)
        assert res_ex.value == pytest.approx(loop - drop, abs=1e-14)
        assert res_ex.terms == res.terms - 1

    def test_secondary_against_loop(self):
        f = make_fejer(2.0)
        R, N = 144.0 * 11, 11
        L = math.log(R)
        loop = 0.0
        for nu in range(2, 40, 2):
            for p in range(2, 2000):
                if trial_division(p) and p != N and p < R ** (2.0 / nu):
                    loop += 2 * (p - 1) / p**nu * f.phi_hat(nu * math.log(p) / L) * math.log(p) / L
        assert secondary_sum_unweighted(f, R, N).value == pytest.approx(loop, abs=1e-14)

    def test_small_support_is_empty(self):
        f = make_fejer(0.1)
        assert prime_sum_p1(f, 100.0).value == 0.0

    def test_errors(self):
        f = make_fejer(1.0)
        with pytest.raises(DomainError):
            prime_sum_p1(f, 1.0)
        with pytest.raises(DomainError):
            secondary_sum_unweighted(f, 100.0, 6)


class TestMertens:
    def test_small_product(self):
        assert mertens_product(10) == pytest.approx(0.5 * 2 / 3 * 4 / 5 * 6 / 7, rel=1e-15)

    def test_limit(self):
        assert mertens_limit() == pytest.approx(math.exp(-EULER_GAMMA), rel=1e-15)
        y = 10**7
        assert math.log(y) * mertens_product(y) / mertens_limit() == pytest.approx(1.0, abs=1e-3)

    def test_error(self):
        with pytest.raises(DomainError):
            mertens_product(1)


class TestHypS:
    def test_against_loop(self):
        x, c, a = 20_000, 3, 1
        loop = sum(cmath.exp(4j * math.pi * math.sqrt(p) / c)
                   for p in range(2, x + 1) if p % c == a and trial_division(p))
        res = hyp_s_sum(x, c, a)
        assert abs(res.value - loop) < 1e-9
        assert res.count == sum(1 for p in range(2, x + 1) if p % c == a and trial_division(p))
        assert res.phase_error_bound < 1e-12

    def test_modulus_one_counts_all(self):
        res = hyp_s_sum(10**5, 1, 0)
        assert res.count == 9592
        assert set(res.as_dict()) == {"re", "im", "modulus", "exponent", "count", "phase_error_bound"}

    def test_errors(self):
        with pytest.raises(DomainError):
            hyp_s_sum(100, 4, 2)
        with pytest.raises(DomainError):
            hyp_s_sum(100, 0, 1)
        with pytest.raises(DomainError):
            hyp_s_sum(10**9, 3, 1)

    def test_fit_exponent(self):
        xs = [10, 100, 1000]
        assert fit_exponent(xs, [x**0.75 for x in xs]) == pytest.approx(0.75, abs=1e-12)
