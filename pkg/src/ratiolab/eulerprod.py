"""The arithmetic Euler product A(u) and the factorisation it belongs to.

A(u) = prod_p (1 - (p^u - 1) / (p (p^{1+u} + 1))) for Re u > -1.

Each factor is 1 - p^{-2} + O(p^{-2-Re u}), so the raw product converges
only like sum p^{-2}. Dividing out the zeta factor prod_p (1 - p^{-2-u})^{-1}
leaves factors B_p(u) = 1 + O(p^{-3-min(a, 2a)}) with a = Re u:

    A(u) = zeta(2+u)/zeta(2) * prod_p B_p(u),
    B_p(u) - 1 = x^3 z (1 - z) / ((1 + x z)(1 - x)),   x = 1/p, z = p^{-u}.

The truncated product of B_p comes with an explicit bound on the discarded
log-tail.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError, PoleError
from .primes import is_prime, primes_upto
from .specfun import zeta, zeta_array

ZETA2 = math.pi ** 2 / 6
MAX_CUTOFF = 10**7


@dataclass(frozen=True)
class EulerProductResult:
    value: complex
    prime_cutoff: int
    tail_estimate: float


def _tail_exponent(a: float) -> float:
    return 3.0 + min(a, 2.0 * a)


def accelerated_tail_bound(a: float, cutoff: int) -> float:
    """Bound on sum_{p > cutoff} |log B_p(u)| for Re u = a > -1."""
    P = float(cutoff)
    e = _tail_exponent(a)
    denom = (1.0 - P ** (-1.0 - a)) * (1.0 - 1.0 / P)
    s = 2.0 * P ** (1.0 - e) / ((e - 1.0) * denom)
    if s >= 0.5:
        return math.inf
    return s / (1.0 - s)


def _choose_cutoff(a: float, tol: float) -> int:
    P = 64
    while accelerated_tail_bound(a, P) >= tol:
        P *= 2
        if P > MAX_CUTOFF:
            raise ConvergenceError(f"A(u) needs more than {MAX_CUTOFF} primes at Re u = {a}")
    return P


def _log_b(p: np.ndarray, u: np.ndarray) -> np.ndarray:
    """log B_p(u) for every (u, p) pair, shape (len(u), len(p))."""
    x = 1.0 / p.astype(float)
    z = np.exp(-np.outer(u, np.log(p.astype(float))))
    delta = x ** 3 * z * (1 - z) / ((1 + x * z) * (1 - x))
    return np.log1p(delta)


def _check_u(u: complex):
    if not (math.isfinite(u.real) and math.isfinite(u.imag)):
        raise DomainError("u must be finite")
    if u.real <= -1:
        raise DomainError("A(u) diverges for Re u <= -1")


def euler_a(u, tol: float = 1e-10, cutoff: int | None = None) -> EulerProductResult:
    """A(u) with an explicit bound on the truncation error of its log.

    ``cutoff`` forces the prime cutoff instead of choosing it from ``tol``.
    """
    u = complex(u)
    _check_u(u)
    if u == 0:
        return EulerProductResult(1.0 + 0j, 0, 0.0)
    P = int(cutoff) if cutoff is not None else _choose_cutoff(u.real, tol)
    p = primes_upto(P)
    logs = _log_b(p, np.array([u]))[0]
    log_sum = complex(np.sum(logs.astype(np.clongdouble)))
    value = zeta(2 + u, tol=1e-15) / ZETA2 * cmath.exp(log_sum)
    return EulerProductResult(value, P, accelerated_tail_bound(u.real, P))


def euler_a_array(u, tol: float = 1e-10, cutoff: int | None = None) -> tuple[np.ndarray, float]:
    """A on an array of points; returns values and the worst log-tail bound.

    For Re u < 0 the tail decays slowly; pass ``cutoff`` to accept the
    reported bound instead of requiring ``tol``.
    """
    u = np.asarray(u, dtype=complex)
    if u.size == 0:
        return u.copy(), 0.0
    if np.any(u.real <= -1):
        raise DomainError("A(u) diverges for Re u <= -1")
    a_min = float(np.min(u.real))
    P = int(cutoff) if cutoff is not None else _choose_cutoff(a_min, tol)
    p = primes_upto(P)
    flat = u.ravel()
    logs = np.empty(flat.shape, dtype=complex)
    step = max(1, 2_000_000 // max(p.size, 1))
    for lo in range(0, flat.size, step):
        blk = flat[lo:lo + step]
        logs[lo:lo + step] = _log_b(p, blk).astype(np.clongdouble).sum(axis=1)
    out = zeta_array(2 + flat, tol=1e-14) / ZETA2 * np.exp(logs)
    out[flat == 0] = 1.0
    return out.reshape(u.shape), accelerated_tail_bound(a_min, P)


def euler_a_direct(u, cutoff: int) -> complex:
    """The raw product over p <= cutoff with no acceleration (slow reference)."""
    u = complex(u)
    _check_u(u)
    p = primes_upto(cutoff).astype(float)
    pu = np.exp(u * np.log(p))
    g = (pu - 1) / (p * (p * pu + 1))
    return complex(np.exp(np.sum(np.log1p(-g).astype(np.clongdouble))))


def direct_tail_bound(a: float, cutoff: int) -> float:
    """Bound on the log-tail of the raw product beyond ``cutoff`` (Re u = a >= 0)."""
    if a < 0:
        raise DomainError("direct tail bound implemented for Re u >= 0")
    P = float(cutoff)
    # |g_p| <= p^-2 (1 + p^-a)/(1 - p^{-1-a}) <= 2 p^-2 / (1 - 1/P)
    s = 2.0 / (P * (1.0 - 1.0 / P))
    return s / (1.0 - s)


def modulus_bound(x: float, cutoff: int = 10**6) -> float:
    """An upper bound for sup_y |A(x+iy)|, from |1 - g| <= 1 + |g|.

    |g_p| <= p^{-2-x} (p^x + 1)/(1 - p^{-1-x}) since |p^{1+u} + 1| >= p^{1+x} - 1.
    The product over p > cutoff is bounded by exp of an integral comparison.
    """
    if x <= -1:
        raise DomainError("x must exceed -1")
    p = primes_upto(cutoff).astype(float)
    g = p ** (-2 - x) * (p ** x + 1) / (1 - p ** (-1 - x))
    log_head = math.fsum(np.log1p(g))
    P = float(cutoff)
    # p^{-2-x}(p^x + 1) <= 2 p^{-2-min(x,0)}
    e = 2 + min(x, 0.0)
    tail = 2 * P ** (1 - e) / ((e - 1) * (1 - P ** (-1 - x)))
    return math.exp(log_head + tail)


def coarse_modulus_bound(x: float, cutoff: int = 10**6) -> float:
    """prod_p (1 + 2 max(1, p^x) / p^{2+x}), truncated with an integral tail.

    This is the bound that omits the denominator |1 + p^{-1-u}|; it is kept
    for comparison and is not guaranteed for every x.
    """
    p = primes_upto(cutoff).astype(float)
    g = 2 * np.maximum(1.0, p ** x) / p ** (2 + x)
    P = float(cutoff)
    e = 2 + min(x, 0.0)
    return math.exp(math.fsum(np.log1p(g)) + 2 * P ** (1 - e) / (e - 1))


# ---------------------------------------------------------------------------
# the factorisation prod_p (1 + 1/((p-1) p^u))
# ---------------------------------------------------------------------------

def factorised_product(u, tol: float = 1e-10) -> complex:
    """zeta(2)/zeta(2+2u) * zeta(1+u) * A(u), which equals prod_p (1 + 1/((p-1)p^u))."""
    u = complex(u)
    if u.real < 0:
        raise DomainError("requires Re u >= 0")
    if u == 0:
        raise PoleError("zeta(1+u) has a pole at u = 0")
    return ZETA2 / zeta(2 + 2 * u) * zeta(1 + u) * euler_a(u, tol).value


def prime_product_direct(u, cutoff: int) -> complex:
    """prod_{p <= cutoff} (1 + 1/((p-1) p^u)), converging only for Re u > 0."""
    u = complex(u)
    p = primes_upto(cutoff).astype(float)
    terms = np.log1p(1.0 / ((p - 1) * np.exp(u * np.log(p))))
    return complex(np.exp(np.sum(terms.astype(np.clongdouble))))


def per_prime_identity_gap(p: int, u) -> float:
    """Largest |LHS - RHS| over the per-prime steps of the factorisation.

    Step 1: 1 + 1/((p-1)p^u) = (1 + p^{-1-u}) (1 + 1/((p-1)(p^{1+u}+1))).
    Step 2: 1 + 1/((p-1)(p^{1+u}+1)) = p^2/(p^2-1) (1 - (p^u-1)/(p(p^{1+u}+1))).
    The combined identity is checked as well.
    """
    if not is_prime(p):
        raise DomainError(f"{p} is not prime")
    u = complex(u)
    _check_u(u)
    p = int(p)
    pu = cmath.exp(u * math.log(p))
    p1u = p * pu
    if abs(p1u + 1) < 1e-12 * max(1.0, abs(p1u)):
        raise PoleError("p^{1+u} = -1 makes a factor singular")
    lhs = 1 + 1 / ((p - 1) * pu)
    zeta_factor = 1 + 1 / p1u
    middle = 1 + 1 / ((p - 1) * (p1u + 1))
    a_factor = 1 - (pu - 1) / (p * (p1u + 1))
    extract = p * p / (p * p - 1)
    gaps = (
        abs(lhs - zeta_factor * middle),
        abs(middle - extract * a_factor),
        abs(lhs - zeta_factor * extract * a_factor),
    )
    return float(max(gaps))
