"""Kloosterman sums and the Petersson formula with a rigorous truncation bound.

    Delta_{k,N}(m, n) = delta(m, n)
        + 2 pi i^k sum_{c > 0, N | c} S(m, n; c)/c * J_{k-1}(4 pi sqrt(mn)/c)

Since k is even, i^k is the sign (-1)^{k/2}. The discarded tail c > C is
bounded with |S(m,n;c)| <= tau(c) gcd(m,n,c)^{1/2} sqrt(c), tau(c) <= 2 sqrt(c)
and |J_{k-1}(x)| <= (x/2)^{k-1}/Gamma(k).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import ConvergenceError, DomainError
from .primes import is_prime
from .specfun import bessel_j

MAX_MODULUS = 10**7


@dataclass(frozen=True)
class KloostermanInput:
    m: int
    n: int
    c: int

    def __post_init__(self):
        if min(self.m, self.n, self.c) < 1:
            raise DomainError("m, n and c must be positive")


@dataclass(frozen=True)
class PeterssonValue:
    value: float
    c_cutoff: int
    tail_bound: float

    @property
    def low_confidence(self) -> bool:
        """True when the truncation bound is not small next to the value."""
        return self.tail_bound >= 0.1 * abs(self.value)


@lru_cache(maxsize=4096)
def _units_and_inverses(c: int) -> tuple[np.ndarray, np.ndarray]:
    if c == 1:
        return np.zeros(1, dtype=np.int64), np.zeros(1, dtype=np.int64)
    d = [x for x in range(1, c) if math.gcd(x, c) == 1]
    inv = [pow(x, -1, c) for x in d]
    return np.array(d, dtype=np.int64), np.array(inv, dtype=np.int64)


def kloosterman_complex(m: int, n: int, c: int) -> complex:
    """S(m, n; c) before discarding the (vanishing) imaginary part."""
    if c > MAX_MODULUS:
        raise DomainError(f"modulus {c} exceeds {MAX_MODULUS}")
    d, dbar = _units_and_inverses(int(c))
    phase = ((m % c) * d + (n % c) * dbar) % c
    return complex(np.sum(np.exp(2j * np.pi * phase / c)))


def kloosterman(inp: KloostermanInput) -> float:
    """The classical Kloosterman sum, a real number."""
    z = kloosterman_complex(inp.m, inp.n, inp.c)
    if abs(z.imag) > 1e-9 * max(1.0, math.sqrt(inp.c)):
        raise ArithmeticError(f"Kloosterman sum has imaginary part {z.imag}")
    return z.real


def kloosterman_matrix(ms: Sequence[int], ns: Sequence[int], c: int) -> np.ndarray:
    """S(m, n; c) for all m in ms, n in ns, as Re(E_m . F_n^T)."""
    if c > MAX_MODULUS:
        raise DomainError(f"modulus {c} exceeds {MAX_MODULUS}")
    d, dbar = _units_and_inverses(int(c))
    ms = np.asarray(ms, dtype=np.int64) % c
    ns = np.asarray(ns, dtype=np.int64) % c
    e = np.exp(2j * np.pi * ((ms[:, None] * d[None, :]) % c) / c)
    f = np.exp(2j * np.pi * ((ns[:, None] * dbar[None, :]) % c) / c)
    return np.real(e @ f.T)


def divisor_count(c: int) -> int:
    count, p, c = 1, 2, int(c)
    while p * p <= c:
        e = 0
        while c % p == 0:
            c //= p
            e += 1
        count *= e + 1
        p += 1
    return count * (2 if c > 1 else 1)


def weil_bound(m: int, n: int, c: int) -> float:
    return divisor_count(c) * math.sqrt(math.gcd(math.gcd(m, n), c)) * math.sqrt(c)


def truncation_bound(k: int, N: int, m: int, n: int, C: int) -> float:
    """Rigorous bound on |2 pi sum_{c > C, N | c} S(m,n;c)/c J_{k-1}(4 pi sqrt(mn)/c)|."""
    _check_kn(k, N)
    J = max(int(C) // N, 1)
    e = k - 1
    g = math.gcd(m, n)
    log_head = (math.log(2 * math.pi * 2 * math.sqrt(g))
                + e * math.log(2 * math.pi * math.sqrt(m * n)) - math.lgamma(k))
    # sum_{j > J} (N j)^{-e} <= N^{-e} J^{1-e}/(e-1)
    log_tail = -e * math.log(N) + (1 - e) * math.log(J) - math.log(e - 1)
    return math.exp(log_head + log_tail)


def _check_kn(k: int, N: int):
    if int(k) != k or k < 4 or k % 2:
        raise DomainError("weight must be an even integer >= 4")
    if N != 1 and not is_prime(N):
        raise DomainError("level must be 1 or prime")


def _cutoff_for(k: int, N: int, m: int, n: int, tol: float) -> int:
    C = N * max(1, math.ceil(4 * math.pi * math.sqrt(m * n) / N))
    while truncation_bound(k, N, m, n, C) >= tol:
        C *= 2
        if C > MAX_MODULUS:
            raise ConvergenceError(
                f"Petersson tail cannot reach {tol:g} with c <= {MAX_MODULUS}")
    return C


def petersson_matrix(k: int, N: int, ms: Sequence[int], ns: Sequence[int],
                     tol: float = 1e-10) -> tuple[np.ndarray, int, np.ndarray]:
    """Delta_{k,N}(m, n) on a grid; returns values, the cutoff and tail bounds."""
    _check_kn(k, N)
    ms = [int(x) for x in ms]
    ns = [int(x) for x in ns]
    if min(ms + ns) < 1:
        raise DomainError("m and n must be positive")
    C = max(_cutoff_for(k, N, m, n, tol) for m in ms for n in ns)
    sign = -1.0 if (k // 2) % 2 else 1.0
    root = np.sqrt(np.outer(ms, ns).astype(float))
    terms = []
    for c in range(N, C + 1, N):
        S = kloosterman_matrix(ms, ns, c)
        terms.append(S / c * bessel_j(k - 1, 4 * np.pi * root / c))
    series = np.sum(np.array(terms), axis=0) if terms else np.zeros(root.shape)
    delta = (np.array(ms)[:, None] == np.array(ns)[None, :]).astype(float)
    bounds = np.array([[truncation_bound(k, N, m, n, C) for n in ns] for m in ms])
    return delta + 2 * np.pi * sign * series, C, bounds


def petersson_full(k: int, N: int, m: int, n: int, tol: float = 1e-10) -> PeterssonValue:
    """Delta_{k,N}(m, n) truncated where the tail bound drops below ``tol``."""
    vals, C, bounds = petersson_matrix(k, N, [m], [n], tol)
    return PeterssonValue(float(vals[0, 0]), C, float(bounds[0, 0]))


# ---------------------------------------------------------------------------
# newform part at prime level
# ---------------------------------------------------------------------------

def _old_factor(N: int, lam_N: float) -> float:
    """(1 + 1/N) / ((1 + 1/N)^2 - lambda_g(N)^2/N) for a level-1 form g."""
    a = 1 + 1 / N
    return a / (a * a - lam_N * lam_N / N)


def _level_one_data(k: int, needed: Sequence[int], family=None):
    """(raw weight, {n: lambda_g(n)}) for every level-1 eigenform g of weight k."""
    from . import data, ntside

    if family is not None:
        if family.N != 1 or family.k != k:
            raise DomainError("oldform correction needs a level-1 family of the same weight")
        out = []
        for form in family.forms:
            raw = form.raw_weight if form.raw_weight is not None else form.weight
            out.append((raw, {n: ntside.lambda_n(form, n) for n in needed}))
        return out
    if k in data.EMPTY_LEVEL_ONE:
        return []
    if k in data.ONE_DIMENSIONAL_WEIGHTS:
        q = data.generate_level_one_eigenforms(k, max(needed))
        raw = petersson_full(k, 1, 1, 1, tol=1e-14).value
        return [(raw, {n: q.normalized(n) for n in needed})]
    return None


def petersson_newforms(k: int, N: int, m: int, n: int, family=None,
                       tol: float = 1e-10, normalize: bool = True) -> PeterssonValue:
    """Newform-only Petersson sum at prime level N, for (mn, N) = 1.

    The oldforms of level N are spanned by g(z), g(Nz) for level-1 eigenforms
    g; removing them from Delta_{k,N}(m, n) subtracts
    (1/N) sum_g omega_g(1) lambda_g(m) lambda_g(n) (1+1/N)/((1+1/N)^2 - lambda_g(N)^2/N).
    With ``normalize`` the result is divided by its value at m = n = 1, so the
    harmonic weights of the newforms sum to 1. Without level-1 data (and a
    weight where the level-1 space is not known to be trivial or spanned by a
    single form) the correction is bounded instead, by Cauchy-Schwarz.
    """
    if N == 1 or not is_prime(N):
        raise DomainError("level must be prime")
    if math.gcd(m * n, N) != 1:
        raise DomainError("requires gcd(mn, N) = 1")
    old = _level_one_data(k, sorted({1, m, n, N}), family)

    def new_value(a: int, b: int) -> tuple[float, float, int]:
        full = petersson_full(k, N, a, b, tol)
        if old is None:
            d1 = petersson_full(k, 1, a, a, tol).value
            d2 = petersson_full(k, 1, b, b, tol).value
            widen = (1 + 1 / N) / (1 - 1 / N) ** 2 / N * math.sqrt(abs(d1 * d2))
            return full.value, full.tail_bound + widen, full.c_cutoff
        corr = sum(w * lam[a] * lam[b] * _old_factor(N, lam[N]) for w, lam in old) / N
        return full.value - corr, full.tail_bound, full.c_cutoff

    val, bound, C = new_value(m, n)
    if not normalize:
        return PeterssonValue(val, C, bound)
    v11, b11, _ = new_value(1, 1)
    if v11 <= b11:
        raise ArithmeticError("newform space appears to be empty at this weight and level")
    ratio = val / v11
    # first-order propagation of both truncation errors
    return PeterssonValue(ratio, C, (bound + abs(ratio) * b11) / max(v11 - b11, 1e-300))
