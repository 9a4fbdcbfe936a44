"""The functional-equation factor X_L(s) of a weight-k, level-N newform.

With gamma_L(s) = (sqrt(N)/(2 pi))^s Gamma(s + (k-1)/2),

    X_L(s) = gamma_L(1-s)/gamma_L(s)
           = (sqrt(N)/(2 pi))^{1-2s} Gamma(1-s+(k-1)/2) / Gamma(s+(k-1)/2).

The same factor in duplicated form uses four Gamma values at quarter-shifted
half arguments; it serves as an independent cross-check.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .primes import is_prime
from .specfun import digamma, digamma_array, ln_gamma, ln_gamma_array
from .testfn import QuadResult, TestFunctionPair, integrate_against


@dataclass(frozen=True)
class GammaFactorParams:
    k: int
    N: int = 1

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 2 or self.k % 2:
            raise DomainError(f"weight must be an even integer >= 2, got {self.k}")
        if self.N != 1 and not is_prime(self.N):
            raise DomainError(f"level must be 1 or prime, got {self.N}")

    @property
    def R(self) -> float:
        return float(self.k * self.k * self.N)

    @property
    def log_R(self) -> float:
        return math.log(self.R)

    @property
    def log_scale(self) -> float:
        """log(sqrt(N)/(2 pi))."""
        return 0.5 * math.log(self.N) - math.log(2 * math.pi)

    @property
    def shift(self) -> float:
        return (self.k - 1) / 2


def x_l(s, params: GammaFactorParams) -> complex:
    """X_L(s) from the single-Gamma ratio, evaluated through log Gamma."""
    s = complex(s)
    a = params.shift
    return cmath.exp((1 - 2 * s) * params.log_scale + ln_gamma(1 - s + a) - ln_gamma(s + a))


def x_l_array(s, params: GammaFactorParams) -> np.ndarray:
    s = np.asarray(s, dtype=complex)
    a = params.shift
    return np.exp((1 - 2 * s) * params.log_scale
                  + ln_gamma_array(1 - s + a) - ln_gamma_array(s + a))


def x_l_duplicated(s, params: GammaFactorParams) -> complex:
    """X_L(s) through Legendre duplication of both Gamma values.

    Gamma(z) = 2^{z-1} pi^{-1/2} Gamma(z/2) Gamma((z+1)/2), so
    X_L(s) = (sqrt(N)/pi)^{1-2s} Gamma((1-s)/2+(k-1)/4) Gamma((1-s)/2+(k+1)/4)
             / (Gamma(s/2+(k-1)/4) Gamma(s/2+(k+1)/4)).
    """
    s = complex(s)
    k = params.k
    logc = 0.5 * math.log(params.N) - math.log(math.pi)
    up = ln_gamma((1 - s) / 2 + (k - 1) / 4) + ln_gamma((1 - s) / 2 + (k + 1) / 4)
    down = ln_gamma(s / 2 + (k - 1) / 4) + ln_gamma(s / 2 + (k + 1) / 4)
    return cmath.exp((1 - 2 * s) * logc + up - down)


def x_l_logderiv(s, params: GammaFactorParams) -> complex:
    """-X_L'(s)/X_L(s) = 2 log(sqrt(N)/2pi) + psi(1-s+(k-1)/2) + psi(s+(k-1)/2)."""
    s = complex(s)
    a = params.shift
    return 2 * params.log_scale + digamma(1 - s + a) + digamma(s + a)


def x_l_logderiv_array(s, params: GammaFactorParams) -> np.ndarray:
    s = np.asarray(s, dtype=complex)
    a = params.shift
    return 2 * params.log_scale + digamma_array(1 - s + a) + digamma_array(s + a)


def x_l_logderiv_four_psi(s, params: GammaFactorParams) -> complex:
    """-X_L'/X_L from the duplicated form: four digamma values with weight 1/2.

    At s = 1/2 + i tau this is 2 log(sqrt(N)/pi) plus one half of
    psi(1/4 + (k+1)/4 +- i tau/2) + psi(1/4 + (k-1)/4 +- i tau/2).
    """
    s = complex(s)
    k = params.k
    logc = 0.5 * math.log(params.N) - math.log(math.pi)
    return 2 * logc + 0.5 * (
        digamma((1 - s) / 2 + (k - 1) / 4) + digamma((1 - s) / 2 + (k + 1) / 4)
        + digamma(s / 2 + (k - 1) / 4) + digamma(s / 2 + (k + 1) / 4))


def x_l_second_line(s, params: GammaFactorParams) -> complex:
    """The halved-argument ratio (sqrt(N)/2pi)^{1-2s} Gamma((1-s)/2+(k-1)/2)/Gamma(s/2+(k-1)/2).

    Kept only so tests can show it disagrees with X_L away from s = 1/2.
    """
    s = complex(s)
    a = params.shift
    return cmath.exp((1 - 2 * s) * params.log_scale
                     + ln_gamma((1 - s) / 2 + a) - ln_gamma(s / 2 + a))


def gamma_term_info(f: TestFunctionPair, params: GammaFactorParams,
                    tol: float = 1e-10) -> QuadResult:
    """(1/log R) int -X_L'/X_L(1/2 + 2 pi i t/log R) phi(t) dt with its error budget."""
    L = params.log_R

    def folded(t):
        t = np.asarray(t, dtype=float)
        s = 0.5 + 2j * np.pi * t / L
        # the value at -t is the conjugate, so the fold is twice the real part
        return 2.0 * np.real(x_l_logderiv_array(s, params))

    res = integrate_against(f, folded, tol)
    return QuadResult(res.value / L, res.error_estimate / L, res.window,
                      res.rigorous_tail, res.evaluations)


def gamma_term_integral(f: TestFunctionPair, params: GammaFactorParams,
                        tol: float = 1e-10) -> float:
    """Real part of the Gamma-factor integral; the imaginary part vanishes by evenness."""
    return float(gamma_term_info(f, params, tol).value.real)


def far_line_bound(k: int, N: int = 1) -> float:
    """(2009/sqrt(N))^{(2k-1)/3} k^{-k/3}, the bound on |X_L| at w = (2k-1)/3."""
    return math.exp((2 * k - 1) / 3 * math.log(2009 / math.sqrt(N)) - k / 3 * math.log(k))


def far_line_sup(k: int, N: int = 1, t_max: float = 10.0, points: int = 2001) -> float:
    """sup over a t-grid of |X_L((1+w)/2 + 2 pi i t/log R)| with w = (2k-1)/3."""
    params = GammaFactorParams(k, N)
    w = (2 * k - 1) / 3
    t = np.linspace(-t_max, t_max, points)
    s = (1 + w) / 2 + 2j * np.pi * t / params.log_R
    return float(np.max(np.abs(x_l_array(s, params))))
