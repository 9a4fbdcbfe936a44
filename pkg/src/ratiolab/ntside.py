"""The number-theory side of the 1-level density, from Hecke eigenvalue data.

The explicit formula turns the density into prime sums:

    D(phi) = gamma term + 2 sum_{p != N} phi_hat(2 log p/log R) log p/(p log R)
             - S1 - S2 - S3,

    S1 = 2 sum_f w_f sum_p lambda_f(p) p^{-1/2} phi_hat(log p/log R) log p/log R,
    S2 = 2 sum_f w_f sum_p lambda_f(p^2) p^{-1} phi_hat(2 log p/log R) log p/log R,
    S3 = 2 sum_f w_f sum_{nu >= 3} sum_p (lambda_f(p^nu) - lambda_f(p^{nu-2}))
         p^{-nu/2} phi_hat(nu log p/log R) log p/log R,

with p != N throughout. Zeros are never computed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .errors import CoverageError, DomainError
from .gammafactor import GammaFactorParams, gamma_term_info
from .primes import fit_exponent, is_prime, prime_sum_p1, primes_upto, secondary_sum_unweighted
from .ratios import DensityBreakdown
from .testfn import TestFunctionPair


@dataclass(frozen=True)
class Newform:
    """A newform through its normalized Hecke eigenvalues.

    ``weight`` is the normalized harmonic weight (the weights of a family sum
    to 1). ``raw_weight`` keeps the unnormalized Petersson weight when known.
    ``exact_ap`` holds the integer coefficients a(p) = lambda(p) p^{(k-1)/2}
    when they are available exactly.
    """

    k: int
    N: int
    eigenvalues: Mapping[int, float]
    sign: int
    weight: float
    lambda_at_N: float | None = None
    raw_weight: float | None = None
    label: str = ""
    exact_ap: Mapping[int, Fraction] | None = None
    weight_source: str = "file"

    @property
    def p_max(self) -> int:
        return max(self.eigenvalues) if self.eigenvalues else 1


@dataclass(frozen=True)
class NewformFamily:
    k: int
    N: int
    forms: tuple
    p_max: int
    source: str = ""

    def __post_init__(self):
        for f in self.forms:
            if (f.k, f.N) != (self.k, self.N):
                raise DomainError(f"form {f.label!r} has (k, N) = ({f.k}, {f.N}), "
                                  f"family has ({self.k}, {self.N})")

    def __len__(self) -> int:
        return len(self.forms)

    def weights(self, weighted: bool = True) -> np.ndarray:
        if not self.forms:
            raise DomainError("empty family")
        if weighted:
            return np.array([f.weight for f in self.forms], dtype=float)
        return np.full(len(self.forms), 1.0 / len(self.forms))


# ---------------------------------------------------------------------------
# Hecke relations
# ---------------------------------------------------------------------------

def _eigenvalue(f: Newform, p: int) -> float:
    if p == f.N:
        raise DomainError(f"p = {p} divides the level")
    try:
        return f.eigenvalues[p]
    except KeyError:
        raise CoverageError(f"no eigenvalue for p = {p} in form {f.label!r}") from None


def hecke_power(f: Newform, p: int, nu: int) -> float:
    """lambda_f(p^nu) by lambda(p^{nu+1}) = lambda(p) lambda(p^nu) - lambda(p^{nu-1})."""
    if nu < 0:
        raise DomainError("nu must be non-negative")
    lam = _eigenvalue(f, p)
    prev, cur = 1.0, lam
    if nu == 0:
        return 1.0
    for _ in range(nu - 1):
        prev, cur = cur, lam * cur - prev
    return cur


def alpha_power_sum(f: Newform, p: int, nu: int) -> float:
    """alpha^nu + beta^nu for the Satake pair at p, i.e. lambda(p^nu) - lambda(p^{nu-2})."""
    if nu == 0:
        return 2.0
    if nu == 1:
        return hecke_power(f, p, 1)
    return hecke_power(f, p, nu) - hecke_power(f, p, nu - 2)


def _factor(n: int) -> dict[int, int]:
    out: dict[int, int] = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def lambda_n(f: Newform, n: int) -> float:
    """lambda_f(n) from the prime eigenvalues by multiplicativity."""
    if n < 1:
        raise DomainError("n must be positive")
    value = 1.0
    for p, e in _factor(int(n)).items():
        if p == f.N:
            if f.lambda_at_N is None:
                raise CoverageError(f"form {f.label!r} has no lambda(N)")
            value *= f.lambda_at_N ** e
        else:
            value *= hecke_power(f, p, e)
    return value


def _power_table(lam: np.ndarray, nu_max: int) -> np.ndarray:
    """lambda(p^nu) for nu = 0..nu_max, shape (nu_max + 1,) + lam.shape."""
    out = np.empty((nu_max + 1,) + lam.shape)
    out[0] = 1.0
    if nu_max >= 1:
        out[1] = lam
    for nu in range(2, nu_max + 1):
        out[nu] = lam * out[nu - 1] - out[nu - 2]
    return out


# ---------------------------------------------------------------------------
# S1, S2, S3
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SSums:
    s1: float
    s2: float
    s3: float
    prime_cutoff: float
    nu_max: int
    terms: int


def _eigen_matrix(family: NewformFamily, p: np.ndarray) -> np.ndarray:
    missing = [int(q) for q in p if any(int(q) not in f.eigenvalues for f in family.forms)]
    if missing:
        raise CoverageError(
            f"eigenvalues needed for primes up to {int(p[-1])}; first missing p = {missing[0]}")
    return np.array([[f.eigenvalues[int(q)] for q in p] for f in family.forms], dtype=float)


def s_sums(family: NewformFamily, f: TestFunctionPair, R: float, weighted: bool = True) -> SSums:
    """S1, S2 and S3 of the explicit formula; w_f is omega* or 1/|family|."""
    if not R > 1:
        raise DomainError("R must exceed 1")
    L = math.log(R)
    w = family.weights(weighted)
    cutoff = R ** f.sigma
    p = primes_upto(math.ceil(cutoff))
    p = p[(p < cutoff) & (p != family.N)]
    if p.size == 0:
        return SSums(0.0, 0.0, 0.0, cutoff, 0, 0)
    lam = _eigen_matrix(family, p)
    lp = np.log(p.astype(float))
    nu_max = max(1, int(math.floor(f.sigma * L / math.log(2))))
    powers = _power_table(lam, max(nu_max, 2))
    sums = [0.0, 0.0, 0.0]
    terms = 0
    for nu in range(1, nu_max + 1):
        mask = nu * lp / L < f.sigma
        if not np.any(mask):
            break
        coeff = powers[nu] if nu <= 2 else powers[nu] - powers[nu - 2]
        weight_p = np.where(mask, f.phi_hat(np.where(mask, nu * lp / L, 0.0)), 0.0)
        per_p = weight_p * lp / L * np.exp(-0.5 * nu * lp)
        vals = 2.0 * np.sum(w @ (coeff * per_p[None, :]))
        sums[min(nu, 3) - 1] += float(vals)
        terms += int(np.count_nonzero(mask)) * len(family)
    return SSums(sums[0], sums[1], sums[2], cutoff, nu_max, terms)


def s_sums_direct(family: NewformFamily, f: TestFunctionPair, R: float,
                  weighted: bool = True) -> SSums:
    """The same sums by plain loops over forms, primes and powers (reference)."""
    L = math.log(R)
    w = family.weights(weighted)
    out = [0.0, 0.0, 0.0]
    nu_top = 0
    for form, wf in zip(family.forms, w):
        for p in primes_upto(math.ceil(R ** f.sigma)):
            p = int(p)
            if p == family.N:
                continue
            nu = 1
            while nu * math.log(p) / L < f.sigma:
                x = nu * math.log(p) / L
                base = float(f.phi_hat(np.array([x]))[0]) * math.log(p) / L
                if nu == 1:
                    out[0] += 2 * wf * hecke_power(form, p, 1) / math.sqrt(p) * base
                elif nu == 2:
                    out[1] += 2 * wf * hecke_power(form, p, 2) / p * base
                else:
                    out[2] += 2 * wf * alpha_power_sum(form, p, nu) * p ** (-nu / 2) * base
                nu_top = max(nu_top, nu)
                nu += 1
    return SSums(out[0], out[1], out[2], R ** f.sigma, nu_top, 0)


# ---------------------------------------------------------------------------
# the full density and comparisons
# ---------------------------------------------------------------------------

def p_equals_n_bound(f: TestFunctionPair, params: GammaFactorParams) -> float:
    """Bound on every discarded p = N term, using |lambda_f(N)| = N^{-1/2}."""
    if params.N == 1:
        return 0.0
    N = params.N
    sup = float(f.phi_hat(np.array([0.0]))[0])
    # prime-square term 2/N plus sum_nu 2 N^{-nu} from the Satake terms
    return 2 * sup * math.log(N) / params.log_R * (1.0 / N + 1.0 / (N - 1))


def d1_nt(family: NewformFamily, f: TestFunctionPair, params: GammaFactorParams,
          weighted: bool = True, tol: float = 1e-10) -> DensityBreakdown:
    """Explicit-formula density: gamma term + prime squares - S1 - S2 - S3."""
    if (family.k, family.N) != (params.k, params.N):
        raise DomainError("family and parameters disagree on (k, N)")
    mode = "weighted" if weighted else "unweighted"
    g = gamma_term_info(f, params, tol)
    psq = prime_sum_p1(f, params.R, exclude=params.N if params.N > 1 else None)
    s = s_sums(family, f, params.R, weighted)
    budget = {"gamma_quadrature": g.error_estimate, "prime_sums": 0.0}
    if params.N > 1:
        budget["p_equals_N_excluded"] = p_equals_n_bound(f, params)
    return DensityBreakdown(
        mode, "number_theory",
        gamma_term=float(g.value.real), prime_square_term=psq.value,
        s1=s.s1, s2=s.s2, s3=s.s3,
        present=frozenset({"gamma_term", "prime_square_term", "s1", "s2", "s3"}),
        error_budget=budget,
        info={"k": params.k, "N": params.N, "R": params.R, "phi": f.label,
              "sigma": f.sigma, "family_size": len(family), "nu_max": s.nu_max})


def secondary_term_model(f: TestFunctionPair, params: GammaFactorParams, dim: int) -> float:
    """Expected unweighted NT residual at N = 1 from the square-index main term.

    The unweighted family average of lambda_f(n) has main term
    c n^{-1/2} for square n with c = (k-1)/(12 dim). Inserting it in S2 and
    the even nu of S3 gives c times (secondary sum - prime-square sum).
    """
    if params.N != 1:
        raise DomainError("the closed-form main term is implemented for N = 1")
    if dim < 1:
        raise DomainError("dimension must be positive")
    c = (params.k - 1) / (12 * dim)
    sec = secondary_sum_unweighted(f, params.R, 1).value
    psq = prime_sum_p1(f, params.R).value
    return c * (sec - psq)


@dataclass(frozen=True)
class CompareReport:
    mode: str
    gamma_diff: float
    prime_square_diff: float | None
    ratios_residual: float
    nt_residual: float
    residual: float
    total_diff: float
    gamma_term: float
    info: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {
            "mode": self.mode, "gamma_term": self.gamma_term, "gamma_diff": self.gamma_diff,
            "prime_square_diff": self.prime_square_diff,
            "ratios_residual": self.ratios_residual, "nt_residual": self.nt_residual,
            "residual": self.residual, "total_diff": self.total_diff,
        }
        out.update(self.info)
        return out


def compare(ratios: DensityBreakdown, nt: DensityBreakdown) -> CompareReport:
    """Split total differences into structural parts and the conjectural residual.

    The residual compares -S1-S2-S3 with what the prediction puts in its place:
    M(phi) in weighted mode, the secondary sum minus the prime-square term in
    unweighted mode.
    """
    if ratios.side != "ratios" or nt.side != "number_theory":
        raise DomainError("compare expects (ratios breakdown, number-theory breakdown)")
    if ratios.mode != nt.mode:
        raise DomainError(f"mode mismatch: {ratios.mode} vs {nt.mode}")
    for key in ("k", "N", "phi"):
        if key in ratios.info and key in nt.info and ratios.info[key] != nt.info[key]:
            raise DomainError(f"breakdowns differ in {key}")
    gamma_diff = nt.gamma_term - ratios.gamma_term
    if "prime_square_term" in ratios.present:
        psq_diff = nt.prime_square_term - ratios.prime_square_term
        ratios_res = ratios.total - ratios.gamma_term - ratios.prime_square_term
    else:
        psq_diff = None
        ratios_res = ratios.total - ratios.gamma_term - nt.prime_square_term
    nt_res = -(nt.s1 + nt.s2 + nt.s3)
    info = {k: nt.info[k] for k in ("k", "N", "R", "phi") if k in nt.info}
    return CompareReport(ratios.mode, gamma_diff, psq_diff, ratios_res, nt_res,
                         nt_res - ratios_res, nt.total - ratios.total, nt.gamma_term, info)


@dataclass(frozen=True)
class SweepSummary:
    reports: tuple
    exponent_vs_log_R: float
    exponent_vs_k: float
    inversions: int

    @property
    def residuals(self) -> list[float]:
        return [r.residual for r in self.reports]


def count_inversions(values: Sequence[float]) -> int:
    """Number of consecutive steps where |value| increases."""
    mags = [abs(v) for v in values]
    return sum(1 for a, b in zip(mags, mags[1:]) if b > a)


def compare_sweep(reports: Sequence[CompareReport]) -> SweepSummary:
    """Fit |residual| ~ x^e against log R and against k over a sweep."""
    reports = tuple(reports)
    mags = [abs(r.residual) for r in reports]
    if len(reports) >= 2 and all(m > 0 for m in mags):
        e_r = fit_exponent([math.log(r.info["R"]) for r in reports], mags)
        e_k = fit_exponent([r.info["k"] for r in reports], mags)
    else:
        e_r = e_k = float("nan")
    return SweepSummary(reports, e_r, e_k, count_inversions([r.residual for r in reports]))


def family_from_eigenvalues(k: int, N: int, table: Sequence[Mapping[int, float]],
                            weights: Sequence[float] | None = None,
                            lambda_at_N: Sequence[float] | None = None) -> NewformFamily:
    """A family built from raw eigenvalue maps (signs derived from lambda(N))."""
    if N != 1 and not is_prime(N):
        raise DomainError("level must be 1 or prime")
    n = len(table)
    weights = list(weights) if weights is not None else [1.0 / n] * n
    forms = []
    ik = -1 if (k // 2) % 2 else 1
    for i, lam in enumerate(table):
        lam_n = None if N == 1 else float(lambda_at_N[i])
        sign = ik if N == 1 else int(round(-ik * lam_n * math.sqrt(N)))
        forms.append(Newform(k, N, dict(lam), sign, float(weights[i]), lam_n, label=f"f{i}"))
    p_max = min(max(m) for m in table) if table and all(table) else 1
    return NewformFamily(k, N, tuple(forms), p_max)
