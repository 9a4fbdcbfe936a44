"""Ratios-recipe predictions for the 1-level density of H*_k(N).

Weighted prediction:   gamma term + prime-square sum + M(phi).
Unweighted prediction: gamma term + even prime-power sum (nu >= 2, p != N).

M(phi) contains zeta(1 + u) with u = 4 pi i t / log R, which has a simple
pole at t = 0. The integral is taken as a principal value: writing
zeta(1+u) = 1/u + (zeta(1+u) - 1/u), the regular part is integrated directly
and the pole part 1/u is folded with its mirror image t -> -t, which leaves
the finite integrand Im F(t) log R / (2 pi t). That folded pole part is
reported separately as ``pole_part`` because it does not vanish in general.

Starting from a contour just to the right of the pole instead of the
principal value adds the half residue i^k mu(N) phi(0) / (2N); it is
reported as ``residue_term`` and is not included in ``value``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .eulerprod import ZETA2, euler_a, euler_a_array, factorised_product
from .gammafactor import GammaFactorParams, gamma_term_info, x_l, x_l_array
from .primes import prime_sum_p1, primes_upto, secondary_sum_unweighted
from .specfun import EULER_GAMMA, zeta_array
from .testfn import TestFunctionPair, integrate_against

COMPONENTS = ("gamma_term", "prime_square_term", "m_phi", "secondary_sum", "s1", "s2", "s3")
COMPLETIONS = ("standard", "mertens")


@dataclass(frozen=True)
class DensityBreakdown:
    """Itemised 1-level density. Absent components are exactly 0."""

    mode: str
    side: str
    gamma_term: float = 0.0
    prime_square_term: float = 0.0
    m_phi: float = 0.0
    secondary_sum: float = 0.0
    s1: float = 0.0
    s2: float = 0.0
    s3: float = 0.0
    present: frozenset = frozenset()
    error_budget: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in ("weighted", "unweighted"):
            raise DomainError(f"unknown mode {self.mode!r}")
        if self.side not in ("ratios", "number_theory"):
            raise DomainError(f"unknown side {self.side!r}")
        for name in COMPONENTS:
            if name not in self.present and getattr(self, name) != 0.0:
                raise DomainError(f"absent component {name} must be 0")

    @property
    def total(self) -> float:
        return math.fsum([self.gamma_term, self.prime_square_term, self.m_phi,
                          self.secondary_sum, -self.s1, -self.s2, -self.s3])

    @property
    def error_total(self) -> float:
        return math.fsum(v for v in self.error_budget.values() if math.isfinite(v))

    def as_dict(self) -> dict:
        out = {"mode": self.mode, "side": self.side, "total": self.total}
        for name in COMPONENTS:
            out[name] = getattr(self, name) if name in self.present else None
        out["error_budget"] = dict(sorted(self.error_budget.items()))
        out.update(self.info)
        return out


def _sign_k(k: int) -> float:
    """i^k for even k."""
    return -1.0 if (k // 2) % 2 else 1.0


def _level_factor(params: GammaFactorParams) -> float:
    """mu(N)/N, or 1 when N = 1."""
    return 1.0 if params.N == 1 else -1.0 / params.N


# ---------------------------------------------------------------------------
# R'(r, r)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RPrimeResult:
    value: complex
    prime_sum: complex
    second_term: complex
    prime_cutoff: int
    tail_estimate: float


def r_prime_rr_info(r, params: GammaFactorParams, tol: float = 1e-10,
                    prime_cutoff: int = 1 << 20) -> RPrimeResult:
    r = complex(r)
    if r.real <= 0:
        raise DomainError("requires Re r > 0")
    p = primes_upto(prime_cutoff).astype(float)
    lp = np.log(p)
    head = complex(np.sum((lp * np.exp(-(1 + 2 * r) * lp)).astype(np.clongdouble)))
    P = float(prime_cutoff)
    # prime number theorem: sum_{p > P} log p p^{-1-2r} ~ P^{-2r}/(2r)
    tail = cmath.exp(-2 * r * math.log(P)) / (2 * r)
    # under RH the remainder of that approximation is O(P^{-2 Re r - 1/2} log^2 P)
    tail_err = P ** (-2 * r.real - 0.5) * math.log(P) ** 2 * (1 + abs(r))
    prime_sum = head + tail

    level = 1.0 if params.N == 1 else -cmath.exp(-(1 + r) * math.log(params.N))
    product = factorised_product(2 * r, tol)  # prod_p (1 + 1/((p-1) p^{2r}))
    second = _sign_k(params.k) * level * x_l(0.5 + r, params) * product
    return RPrimeResult(prime_sum + second, prime_sum, second, prime_cutoff, tail_err)


def r_prime_rr(r, params: GammaFactorParams, tol: float = 1e-10) -> complex:
    """sum_p log p/p^{1+2r} + (i^k mu(N)/N^{1+r}) X_L(1/2+r) prod_p (1 + 1/((p-1)p^{2r}))."""
    return r_prime_rr_info(r, params, tol).value


# ---------------------------------------------------------------------------
# M(phi)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MPhiResult:
    value: float
    pole_part: float
    error_estimate: float
    window: float
    euler_tail: float
    completion: str
    residue_term: float = 0.0

    @property
    def without_pole_part(self) -> float:
        """The value obtained by discarding the folded 1/u contribution."""
        return self.value - self.pole_part


def _m_phi_integrand(params: GammaFactorParams, tol: float):
    L = params.log_R
    logN = math.log(params.N)
    tails: list[float] = []

    def F(t: np.ndarray) -> np.ndarray:
        u = 4j * np.pi * t / L
        a_vals, a_tail = euler_a_array(u, tol)
        tails.append(a_tail)
        val = x_l_array(0.5 + 2j * np.pi * t / L, params) * ZETA2 / zeta_array(2 + 2 * u, tol=1e-13)
        val = val * a_vals
        if params.N > 1:
            val = val * np.exp(-2j * np.pi * t * logN / L)
        return val

    def folded(t):
        t = np.asarray(t, dtype=float)
        f_t = F(t)
        u = 4j * np.pi * t / L
        regular = 2.0 * np.real(f_t * zeta_array(1 + u, tol=1e-13, regular=True))
        # F/u + conj(F)/conj(u) with u imaginary = 2 Im F / |u|
        small = t == 0
        pole = np.zeros_like(t)
        pole[~small] = 2.0 * np.imag(f_t[~small]) * L / (4 * np.pi * t[~small])
        if np.any(small):
            h = 1e-6
            fp = F(np.array([h]))
            pole[small] = 2.0 * np.imag(fp[0]) * L / (4 * np.pi * h)
        return (regular + pole) + 1j * pole

    return folded, tails


def _oscillation(params: GammaFactorParams, sigma: float) -> float:
    """Rough angular frequency in t of the M(phi) integrand over the window."""
    L = params.log_R
    t_max = 512.0 / sigma
    tau = 2 * math.pi * t_max / L
    # phase of X_L grows like 2 tau log(tau + k/2); zeta and A add O(log t)
    return (2 * math.pi / L) * (2 * math.log(tau + params.k / 2 + 2) + 2 * math.log(4 * math.pi * t_max / L + 2) + 2) \
        + 2 * math.pi * math.log(params.N) / L


def m_phi_info(f: TestFunctionPair, params: GammaFactorParams, tol: float = 1e-7,
               completion: str = "standard") -> MPhiResult:
    """M(phi) as a principal value, with its folded pole part and error budget."""
    if completion not in COMPLETIONS:
        raise DomainError(f"completion must be one of {COMPLETIONS}")
    if f.is_zero:
        return MPhiResult(0.0, 0.0, 0.0, 0.0, 0.0, completion)
    L = params.log_R
    const = 2 * _sign_k(params.k) * _level_factor(params) / L
    if completion == "mertens":
        const *= math.exp(-EULER_GAMMA)
    folded, tails = _m_phi_integrand(params, tol)
    res = integrate_against(f, folded, tol, oscillatory=True,
                            max_freq=_oscillation(params, f.sigma), t_max=512.0 / f.sigma)
    a_tail = max(tails) if tails else 0.0
    # relative log-tail of A times a crude integrand scale
    scale = abs(res.value.real) + 1.0
    err = abs(const) * (res.error_estimate + 2 * a_tail * scale)
    residue = const * L / 4 * f.phi_real(0.0)
    return MPhiResult(const * res.value.real, const * res.value.imag, err,
                      res.window, a_tail, completion, residue)


def m_phi(f: TestFunctionPair, params: GammaFactorParams, tol: float = 1e-7,
          completion: str = "standard") -> float:
    """The arithmetic lower-order term M(phi) of the weighted prediction."""
    return m_phi_info(f, params, tol, completion).value


# ---------------------------------------------------------------------------
# predictions
# ---------------------------------------------------------------------------

def _info(f: TestFunctionPair, params: GammaFactorParams) -> dict:
    return {"k": params.k, "N": params.N, "R": params.R, "phi": f.label, "sigma": f.sigma}


def d1_ratios_weighted(f: TestFunctionPair, params: GammaFactorParams, tol: float = 1e-7,
                       completion: str = "standard") -> DensityBreakdown:
    """Weighted prediction: gamma term + prime-square sum + M(phi)."""
    g = gamma_term_info(f, params, min(tol, 1e-10))
    psq = prime_sum_p1(f, params.R)
    m = m_phi_info(f, params, tol, completion)
    info = _info(f, params)
    info.update(completion=completion, m_phi_pole_part=m.pole_part,
                m_phi_residue_term=m.residue_term, m_phi_window=m.window)
    return DensityBreakdown(
        "weighted", "ratios",
        gamma_term=float(g.value.real), prime_square_term=psq.value, m_phi=m.value,
        present=frozenset({"gamma_term", "prime_square_term", "m_phi"}),
        error_budget={"gamma_quadrature": g.error_estimate, "m_phi": m.error_estimate,
                      "prime_sums": 0.0},
        info=info)


def d1_ratios_unweighted(f: TestFunctionPair, params: GammaFactorParams,
                         tol: float = 1e-7) -> DensityBreakdown:
    """Unweighted prediction: gamma term + sum over even nu >= 2 of the prime powers."""
    g = gamma_term_info(f, params, min(tol, 1e-10))
    sec = secondary_sum_unweighted(f, params.R, params.N)
    return DensityBreakdown(
        "unweighted", "ratios",
        gamma_term=float(g.value.real), secondary_sum=sec.value,
        present=frozenset({"gamma_term", "secondary_sum"}),
        error_budget={"gamma_quadrature": g.error_estimate, "prime_sums": 0.0},
        info=_info(f, params))
