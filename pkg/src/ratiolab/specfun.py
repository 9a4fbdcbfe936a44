"""Complex special functions: log-Gamma, digamma, Riemann zeta, Bessel J.

Log-Gamma and digamma delegate to :mod:`scipy.special` (principal branch,
complex arguments). Zeta is computed here by Euler--Maclaurin summation with
an explicit remainder bound, because the library needs complex arguments and
the pole-subtracted value ``zeta(s) - 1/(s-1)`` near ``s = 1``; neither is
offered by scipy. Bessel J uses the power series where it is well
conditioned and scipy's ``jv`` elsewhere.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import special as sp

from .errors import DomainError, PoleError

EULER_GAMMA = 0.57721566490153286060651209
MAX_BESSEL_ORDER = 200


@dataclass(frozen=True)
class EvalAccuracy:
    abs_tol: float = 1e-12
    rel_tol: float = 0.0

    def __post_init__(self):
        if self.abs_tol < 0 or self.rel_tol < 0:
            raise DomainError("tolerances must be non-negative")
        if self.abs_tol == 0 and self.rel_tol == 0:
            raise DomainError("at least one tolerance must be positive")

    def target(self, scale: float) -> float:
        return max(self.abs_tol, self.rel_tol * abs(scale))


def _as_complex(z) -> complex:
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise DomainError(f"non-finite argument {z!r}")
    return z


def _is_nonpositive_integer(z: complex) -> bool:
    return z.imag == 0.0 and z.real <= 0.0 and z.real == math.floor(z.real)


def ln_gamma(z) -> complex:
    """Principal branch of log Gamma(z)."""
    z = _as_complex(z)
    if _is_nonpositive_integer(z):
        raise PoleError(f"log Gamma has a pole at {z.real:g}")
    return complex(sp.loggamma(z))


def digamma(z) -> complex:
    """psi(z) = Gamma'(z)/Gamma(z)."""
    z = _as_complex(z)
    if _is_nonpositive_integer(z):
        raise PoleError(f"digamma has a pole at {z.real:g}")
    return complex(sp.psi(z))


def ln_gamma_array(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    bad = (z.imag == 0) & (z.real <= 0) & (z.real == np.floor(z.real))
    if np.any(bad):
        raise PoleError("log Gamma evaluated at a non-positive integer")
    return sp.loggamma(z)


def digamma_array(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    bad = (z.imag == 0) & (z.real <= 0) & (z.real == np.floor(z.real))
    if np.any(bad):
        raise PoleError("digamma evaluated at a non-positive integer")
    return sp.psi(z)


# ---------------------------------------------------------------------------
# Riemann zeta
# ---------------------------------------------------------------------------

_EM_TERMS = 12


@lru_cache(maxsize=None)
def _bernoulli_even(count: int) -> tuple[float, ...]:
    """B_2, B_4, ..., B_{2*count} as floats (exact rational recurrence)."""
    n_max = 2 * count
    b = [Fraction(0)] * (n_max + 1)
    b[0] = Fraction(1)
    for m in range(1, n_max + 1):
        acc = Fraction(0)
        for j in range(m):
            acc += Fraction(math.comb(m + 1, j)) * b[j]
        b[m] = -acc / (m + 1)
    return tuple(float(b[2 * j]) for j in range(1, count + 1))


@lru_cache(maxsize=None)
def _em_coefficients(count: int) -> np.ndarray:
    """B_{2j} / (2j)! for j = 1..count."""
    bern = _bernoulli_even(count)
    return np.array([bern[j - 1] / math.factorial(2 * j) for j in range(1, count + 1)])


def _phi1(w: np.ndarray) -> np.ndarray:
    """(exp(w) - 1)/w without cancellation, w complex."""
    w = np.asarray(w, dtype=complex)
    out = np.empty_like(w)
    small = np.abs(w) < 1e-3
    ws = w[small]
    out[small] = 1 + ws / 2 * (1 + ws / 3 * (1 + ws / 4 * (1 + ws / 5 * (1 + ws / 6))))
    wl = w[~small]
    a, b = wl.real, wl.imag
    em1 = np.expm1(a) * np.cos(b) - 2.0 * np.sin(b / 2) ** 2 + 1j * np.exp(a) * np.sin(b)
    out[~small] = em1 / wl
    return out


def _em_cutoff(s: np.ndarray) -> int:
    return int(10 + math.ceil(0.5 * float(np.max(np.abs(s)))))


def _zeta_em_regular(s: np.ndarray, n_cut: int, m_terms: int = _EM_TERMS):
    """zeta(s) - 1/(s-1) by Euler--Maclaurin at cutoff n_cut.

    Returns (values, remainder_bounds).
    """
    s = np.asarray(s, dtype=complex)
    n = np.arange(1, n_cut, dtype=float)
    logn = np.log(n)
    head = np.empty(s.shape, dtype=np.clongdouble)
    # chunk over s to bound the (len(s) x n_cut) working set
    flat_s = s.ravel()
    flat_head = head.ravel()
    step = max(1, 2_000_000 // max(n_cut, 1))
    for lo in range(0, flat_s.size, step):
        blk = flat_s[lo:lo + step]
        terms = np.exp(-np.outer(blk, logn))
        flat_head[lo:lo + step] = terms.astype(np.clongdouble).sum(axis=1)
    head = flat_head.reshape(s.shape)

    logN = math.log(n_cut)
    N_pow = np.exp(-s * logN)  # N^{-s}
    # (N^{1-s} - 1)/(s-1) = -log N * phi1((1-s) log N)
    pole_free = -logN * _phi1((1 - s) * logN)
    total = head + pole_free + N_pow / 2

    coeffs = _em_coefficients(m_terms + 1)
    rising = s.copy()  # s (s+1) ... (s+2j-2), starts at j=1 with just s
    inv_n2 = 1.0 / (n_cut * n_cut)
    powterm = N_pow / n_cut  # N^{-s-1}
    for j in range(1, m_terms + 1):
        total = total + coeffs[j - 1] * rising * powterm
        rising = rising * (s + 2 * j - 1) * (s + 2 * j)
        powterm = powterm * inv_n2
    next_term = np.abs(coeffs[m_terms] * rising * powterm)
    sigma = s.real
    bound = np.abs(s + 2 * m_terms + 1) / np.maximum(sigma + 2 * m_terms + 1, 1e-300) * next_term
    return np.asarray(total, dtype=complex), bound


@dataclass(frozen=True)
class ZetaResult:
    value: complex
    cutoff: int
    em_terms: int
    error_bound: float


def _check_zeta_domain(s: complex):
    if s.real <= 0:
        raise DomainError(f"zeta implemented for Re(s) > 0 only, got {s}")


def zeta_info(s, tol: float = 1e-13, regular: bool = False) -> ZetaResult:
    """Zeta (or its pole-subtracted part) with the cutoff that produced it."""
    s = _as_complex(s)
    _check_zeta_domain(s)
    if not regular and s == 1:
        raise PoleError("zeta has a pole at s = 1")
    n_cut = _em_cutoff(np.array([s]))
    for _ in range(30):
        val, bound = _zeta_em_regular(np.array([s]), n_cut)
        if bound[0] <= tol * max(1.0, abs(val[0])):
            break
        n_cut *= 2
    v = complex(val[0])
    if not regular:
        v += 1.0 / (s - 1)
    return ZetaResult(v, n_cut, _EM_TERMS, float(bound[0]))


def zeta(s, tol: float = 1e-13) -> complex:
    """Riemann zeta for Re(s) > 0, s != 1."""
    return zeta_info(s, tol).value


def zeta_regular(s, tol: float = 1e-13) -> complex:
    """zeta(s) - 1/(s-1); equals Euler's constant at s = 1."""
    return zeta_info(s, tol, regular=True).value


def zeta_array(s, tol: float = 1e-12, regular: bool = False) -> np.ndarray:
    """Vectorised zeta on an array of points with Re(s) > 0.

    Points are grouped by height so that each block uses a cutoff suited to
    its largest |s|.
    """
    s = np.asarray(s, dtype=complex)
    if s.size == 0:
        return s.copy()
    if np.any(s.real <= 0):
        raise DomainError("zeta_array needs Re(s) > 0")
    if not regular and np.any(s == 1):
        raise PoleError("zeta has a pole at s = 1")
    flat = s.ravel()
    order = np.argsort(np.abs(flat))
    out = np.empty(flat.shape, dtype=complex)
    block = 512
    for lo in range(0, flat.size, block):
        idx = order[lo:lo + block]
        pts = flat[idx]
        n_cut = _em_cutoff(pts)
        for _ in range(30):
            val, bound = _zeta_em_regular(pts, n_cut)
            if np.all(bound <= tol * np.maximum(1.0, np.abs(val))):
                break
            n_cut *= 2
        out[idx] = val
    if not regular:
        out = out + 1.0 / (flat - 1)
    return out.reshape(s.shape)


# ---------------------------------------------------------------------------
# Bessel J of integer order
# ---------------------------------------------------------------------------

def _bessel_series(order: int, x: float) -> float:
    if x == 0.0:
        return 1.0 if order == 0 else 0.0
    half = x / 2
    lead = math.exp(order * math.log(half) - math.lgamma(order + 1))
    q = half * half
    term = 1.0
    acc = [1.0]
    m = 0
    while True:
        m += 1
        term *= -q / (m * (m + order))
        acc.append(term)
        if abs(term) < 1e-18 * abs(math.fsum(acc)) and m > q:
            break
        if m > 2000:
            break
    return lead * math.fsum(acc)


def _series_ok(order: int, x: float) -> bool:
    return x * x / 4 <= order + 1 or x <= 2.0


def bessel_j(order: int, x):
    """J_order(x) for integer 0 <= order <= 200 and real x >= 0.

    Accepts a scalar or a numpy array for ``x``.
    """
    if int(order) != order or order < 0:
        raise DomainError("order must be a non-negative integer")
    order = int(order)
    if order > MAX_BESSEL_ORDER:
        raise DomainError(f"order {order} exceeds {MAX_BESSEL_ORDER}")
    if np.ndim(x) == 0:
        x = float(x)
        if not math.isfinite(x):
            raise DomainError("x must be finite")
        if x < 0:
            raise DomainError("Bessel J evaluated at negative x")
        if _series_ok(order, x):
            return _bessel_series(order, x)
        return float(sp.jv(order, x))
    xa = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xa)):
        raise DomainError("x must be finite")
    if np.any(xa < 0):
        raise DomainError("Bessel J evaluated at negative x")
    out = sp.jv(order, xa)
    series = (xa * xa / 4 <= order + 1) | (xa <= 2.0)
    for i in np.flatnonzero(series):
        out.flat[i] = _bessel_series(order, float(xa.flat[i]))
    return out


def bessel_upper_bound(order: int, x):
    """min(1, (x/2)^order / order!), the bound every |J_order(x)| obeys."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        logb = order * np.log(x / 2) - math.lgamma(order + 1)
    b = np.minimum(1.0, np.exp(logb)) if order > 0 else np.ones_like(x)
    return float(b) if b.ndim == 0 else b

