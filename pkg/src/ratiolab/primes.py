"""Prime tables and the prime-indexed sums used on both sides of the comparison.

Every sum weighted by a compactly supported ``phi_hat`` is finite, so the
truncations here are exact: a prime p contributes to a term with argument
``nu log p / log R`` only while ``p < R**(sigma/nu)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np

from .errors import DomainError
from .specfun import EULER_GAMMA
from .testfn import TestFunctionPair

SIEVE_MAX = 10**9
_SEGMENT = 1 << 20


@dataclass(frozen=True)
class PrimeTable:
    limit: int
    primes: np.ndarray

    def __len__(self) -> int:
        return int(self.primes.size)

    def upto(self, x: float) -> np.ndarray:
        """Primes p <= x (x must not exceed the table limit)."""
        if x > self.limit:
            raise DomainError(f"table limit {self.limit} below requested {x}")
        return self.primes[: int(np.searchsorted(self.primes, x, side="right"))]


def _small_sieve(n: int) -> np.ndarray:
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(n + 1, dtype=bool)
    flags[:2] = False
    flags[4::2] = False
    for p in range(3, math.isqrt(n) + 1, 2):
        if flags[p]:
            flags[p * p::2 * p] = False
    return np.flatnonzero(flags).astype(np.int64)


def iter_prime_segments(limit: int, lo: int = 2, segment: int = _SEGMENT) -> Iterator[np.ndarray]:
    """Yield the primes in [lo, limit] one segment at a time, in order."""
    if limit < 2 or lo > limit:
        return
    base = _small_sieve(math.isqrt(limit))
    lo = max(lo, 2)
    while lo <= limit:
        hi = min(lo + segment, limit + 1)
        flags = np.ones(hi - lo, dtype=bool)
        for p in base:
            p = int(p)
            if p * p >= hi:
                break
            start = max(p * p, -(-lo // p) * p)
            flags[start - lo::p] = False
        if lo <= 1:
            flags[: 2 - lo] = False
        yield np.flatnonzero(flags).astype(np.int64) + lo
        lo = hi


@lru_cache(maxsize=16)
def _cached_primes(limit: int) -> np.ndarray:
    out = np.concatenate(list(iter_prime_segments(limit)) or [np.zeros(0, dtype=np.int64)])
    out.setflags(write=False)
    return out


def sieve_primes(limit: int) -> PrimeTable:
    """All primes up to ``limit`` by a segmented sieve of Eratosthenes."""
    if int(limit) != limit:
        raise DomainError("limit must be an integer")
    limit = int(limit)
    if not 2 <= limit <= SIEVE_MAX:
        raise DomainError(f"limit must lie in [2, {SIEVE_MAX}]")
    return PrimeTable(limit, _cached_primes(limit))


def primes_upto(x: float) -> np.ndarray:
    """Primes p <= x, served from a cached table rounded up to a power of two."""
    x = int(math.floor(x))
    if x < 2:
        return np.zeros(0, dtype=np.int64)
    size = 1 << max(10, (x - 1).bit_length())
    table = _cached_primes(min(size, SIEVE_MAX))
    return table[: int(np.searchsorted(table, x, side="right"))]


def is_prime(n: int) -> bool:
    n = int(n)
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    # deterministic Miller-Rabin for n < 3.3e24
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41):
        if a % n == 0:
            continue
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


# ---------------------------------------------------------------------------
# phi_hat prime sums
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PrimeSumResult:
    value: float
    cutoff: float
    terms: int

    def __float__(self) -> float:
        return self.value


def _support_primes(f: TestFunctionPair, R: float, nu: int) -> tuple[np.ndarray, float]:
    cutoff = R ** (f.sigma / nu)
    p = primes_upto(math.ceil(cutoff))
    return p[p < cutoff], cutoff


def prime_sum_p1(f: TestFunctionPair, R: float, exclude: int | None = None) -> PrimeSumResult:
    """2 sum_p phi_hat(2 log p / log R) log p / (p log R), over p < R^(sigma/2)."""
    if not R > 1:
        raise DomainError("R must exceed 1")
    p, cutoff = _support_primes(f, R, 2)
    if exclude is not None:
        p = p[p != exclude]
    if p.size == 0:
        return PrimeSumResult(0.0, cutoff, 0)
    L = math.log(R)
    lp = np.log(p.astype(float))
    terms = 2.0 * f.phi_hat(2 * lp / L) * lp / (p * L)
    return PrimeSumResult(math.fsum(terms), cutoff, int(p.size))


def secondary_sum_unweighted(f: TestFunctionPair, R: float, N: int = 1) -> PrimeSumResult:
    """2 sum over even nu >= 2 and p != N of (p-1)/p^nu phi_hat(nu log p/log R) log p/log R."""
    if not R > 1:
        raise DomainError("R must exceed 1")
    if N != 1 and not is_prime(N):
        raise DomainError("N must be 1 or prime")
    L = math.log(R)
    terms: list[float] = []
    count = 0
    nu = 2
    while R ** (f.sigma / nu) > 2:
        p, _ = _support_primes(f, R, nu)
        p = p[p != N]
        if p.size:
            pf = p.astype(float)
            lp = np.log(pf)
            vals = 2.0 * (pf - 1) * np.exp(-nu * lp) * f.phi_hat(nu * lp / L) * lp / L
            terms.extend(vals.tolist())
            count += int(p.size)
        nu += 2
    return PrimeSumResult(math.fsum(terms), R ** (f.sigma / 2), count)


def mertens_product(y: int) -> float:
    """prod_{p <= y} (1 - 1/p), accumulated as a log-sum."""
    if y < 2:
        raise DomainError("y must be at least 2")
    p = primes_upto(y).astype(float)
    return math.exp(math.fsum(np.log1p(-1.0 / p)))


def mertens_limit() -> float:
    """e^{-gamma}, the limit of log(y) prod_{p<=y}(1-1/p)."""
    return math.exp(-EULER_GAMMA)


# ---------------------------------------------------------------------------
# exponential sums over primes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HypSResult:
    value: complex
    modulus: float
    exponent: float
    count: int
    phase_error_bound: float

    def as_dict(self) -> dict:
        return {
            "re": self.value.real, "im": self.value.imag, "modulus": self.modulus,
            "exponent": self.exponent, "count": self.count,
            "phase_error_bound": self.phase_error_bound,
        }


HYP_S_MAX = 10**8


def hyp_s_sum(x: int, c: int, a: int) -> HypSResult:
    """sum over p <= x with p = a mod c of exp(4 pi i sqrt(p) / c).

    ``exponent`` is log|sum| / log x (nan when undefined). The phase of each
    term is accurate to ``phase_error_bound`` radians.
    """
    x, c, a = int(x), int(c), int(a)
    if c < 1:
        raise DomainError("c must be positive")
    if math.gcd(a, c) != 1:
        raise DomainError(f"gcd({a}, {c}) != 1")
    if x > HYP_S_MAX:
        raise DomainError(f"x must not exceed {HYP_S_MAX}")
    re_parts: list[float] = []
    im_parts: list[float] = []
    count = 0
    for seg in iter_prime_segments(x):
        if c > 1:
            seg = seg[seg % c == a % c]
        if seg.size == 0:
            continue
        phase = 4 * np.pi * np.sqrt(seg.astype(float)) / c
        re_parts.append(float(np.sum(np.cos(phase))))
        im_parts.append(float(np.sum(np.sin(phase))))
        count += int(seg.size)
    value = complex(math.fsum(re_parts), math.fsum(im_parts))
    mod = abs(value)
    expo = math.log(mod) / math.log(x) if x > 1 and mod > 0 else float("nan")
    # sqrt is correctly rounded: |error| <= ulp(sqrt x)/2, times 4 pi / c;
    # the phase product adds a relative rounding of the same order
    sx = math.sqrt(max(x, 1))
    phase_err = 4 * math.pi / c * (math.ulp(sx) + 2 * sx * 2.0**-53)
    return HypSResult(value, mod, expo, count, phase_err)


def fit_exponent(xs, moduli) -> float:
    """Least-squares slope of log|S| against log x."""
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.asarray(moduli, dtype=float))
    slope, _ = np.polyfit(lx, ly, 1)
    return float(slope)
