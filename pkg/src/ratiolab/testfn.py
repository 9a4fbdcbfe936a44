"""Even test functions with compactly supported Fourier transform.

Conventions: ``phi_hat(xi) = int phi(t) exp(-2 pi i t xi) dt`` and
``phi(t) = int phi_hat(xi) exp(2 pi i t xi) dxi``. Every pair is even, so
``phi(t) = 2 int_0^sigma phi_hat(xi) cos(2 pi t xi) dxi`` for complex ``t``.

The module also owns the real-line quadrature used by every density
integral (:func:`integrate_against`), since the right truncation and tail
treatment depend on how the test function decays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import ConvergenceError, DomainError

_GL_NODES = 16


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def composite_nodes(a: float, b: float, panels: int, per_panel: int = _GL_NODES):
    """Nodes and weights of a composite Gauss--Legendre rule on [a, b]."""
    x, w = gauss_legendre(per_panel)
    edges = np.linspace(a, b, panels + 1)
    half = (edges[1:] - edges[:-1]) / 2
    mid = (edges[1:] + edges[:-1]) / 2
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


@dataclass(frozen=True)
class TestFunctionPair:
    """An even pair (phi, phi_hat) with supp(phi_hat) inside [-sigma, sigma].

    ``kind`` selects the tail treatment in :func:`integrate_against`:
    ``"fejer"`` (phi decays like 1/t^2 with the explicit profile
    (1 - cos 2 pi sigma t)/(2 pi^2 sigma t^2)) or ``"rapid"``.
    ``decay_order`` is the largest n for which phi(t+iy) = O((t^2+y^2)^-n)
    is expected; None means every n.
    """

    __test__ = False

    sigma: float
    phi_hat_fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    phi_fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    label: str = ""
    kind: str = "rapid"
    decay_order: int | None = None
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError("sigma must be positive")

    def phi_hat(self, xi):
        xi = np.asarray(xi, dtype=float)
        out = self.amplitude * self.phi_hat_fn(xi)
        return float(out) if out.ndim == 0 else out

    def phi(self, t):
        t = np.asarray(t, dtype=complex)
        out = self.amplitude * self.phi_fn(t)
        return complex(out) if out.ndim == 0 else out

    def phi_real(self, t):
        """phi on real arguments, returned as real numbers."""
        t = np.asarray(t, dtype=float)
        out = self.amplitude * np.real(self.phi_fn(t.astype(complex)))
        return float(out) if out.ndim == 0 else out

    def scaled(self, c: float) -> "TestFunctionPair":
        return replace(self, amplitude=self.amplitude * c,
                       label=f"{c:g}*{self.label}" if self.label else self.label)

    @property
    def is_zero(self) -> bool:
        return self.amplitude == 0.0

    def prime_cutoff(self, R: float, nu: int = 1) -> float:
        """Primes with nu*log p/log R >= sigma contribute nothing."""
        return R ** (self.sigma / nu)


# ---------------------------------------------------------------------------
# built-in pairs
# ---------------------------------------------------------------------------

def _sinc_sq(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    small = np.abs(z) < 1e-4
    zs = z[small] ** 2
    out[small] = (1 - zs / 6 + zs * zs / 120) ** 2
    zl = z[~small]
    out[~small] = (np.sin(zl) / zl) ** 2
    return out


def make_fejer(sigma: float) -> TestFunctionPair:
    """Triangle phi_hat(xi) = max(0, 1 - |xi|/sigma), phi(t) = sigma sinc^2."""
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    sigma = float(sigma)

    def phi_hat(xi):
        return np.maximum(0.0, 1.0 - np.abs(xi) / sigma)

    def phi(t):
        return sigma * _sinc_sq(np.pi * sigma * np.asarray(t, dtype=complex))

    return TestFunctionPair(sigma, phi_hat, phi, label=f"fejer:{sigma:g}",
                            kind="fejer", decay_order=1)


class _BumpTransform:
    """phi(t) for the C-infinity bump, by composite Gauss--Legendre in xi."""

    def __init__(self, sigma: float, n_quad: int, tol: float = 1e-13):
        self.sigma = sigma
        self.n_quad = n_quad
        self.tol = tol
        self.last_error = 0.0

    def hat(self, xi):
        xi = np.asarray(xi, dtype=float)
        r = xi / self.sigma
        out = np.zeros_like(r)
        inside = np.abs(r) < 1
        out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
        return out

    def _rule(self, t: np.ndarray, panels: int):
        """Quadrature values and the absolute integrand mass (rounding scale)."""
        nodes, weights = composite_nodes(0.0, self.sigma, panels)
        vals = self.hat(nodes) * weights
        real = not np.iscomplexobj(t)
        out = np.empty(t.shape, dtype=float if real else complex)
        mass = np.empty(t.shape)
        step = max(1, 4_000_000 // nodes.size)
        for lo in range(0, t.size, step):
            blk = t[lo:lo + step]
            c = np.cos(2 * np.pi * np.outer(blk, nodes))
            out[lo:lo + step] = 2.0 * (c @ vals)
            mass[lo:lo + step] = 2.0 * (np.abs(c) @ vals)
        return out, mass

    def _evaluate_block(self, t: np.ndarray):
        tmax = float(np.max(np.abs(t)))
        panels = max(self.n_quad // _GL_NODES, int(math.ceil(2 * self.sigma * tmax)) + 1)
        prev, mass = self._rule(t, panels)
        scale = np.maximum(1.0, mass)
        for _ in range(12):
            panels *= 2
            cur, _ = self._rule(t, panels)
            err = float(np.max(np.abs(cur - prev) / scale))
            if err < self.tol:
                return cur, err
            prev = cur
        raise ConvergenceError(f"bump transform did not converge (err {err:.2e})")

    def evaluate(self, t) -> tuple[np.ndarray, float]:
        """phi at t (real or complex array) and the worst quadrature error."""
        t = np.asarray(t)
        if not np.iscomplexobj(t):
            t = t.astype(float)
        elif not np.any(t.imag):
            t = t.real.copy()
        if t.size == 0:
            return t.astype(complex), 0.0
        flat = t.ravel()
        order = np.argsort(np.abs(flat))
        out = np.empty(flat.shape, dtype=flat.dtype)
        worst = 0.0
        # blocks of similar |t| get their own panel count
        for lo in range(0, flat.size, 256):
            idx = order[lo:lo + 256]
            vals, err = self._evaluate_block(flat[idx])
            out[idx] = vals
            worst = max(worst, err)
        return out.reshape(t.shape).astype(complex), worst

    def __call__(self, t):
        vals, err = self.evaluate(t)
        self.last_error = err
        return vals


def make_smooth_bump(sigma: float, n_quad: int = 64) -> TestFunctionPair:
    """phi_hat(xi) = exp(-1/(1-(xi/sigma)^2)) on |xi| < sigma; phi by quadrature."""
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    if n_quad < 64:
        raise DomainError("n_quad must be at least 64")
    tr = _BumpTransform(float(sigma), int(n_quad))
    return TestFunctionPair(float(sigma), tr.hat, tr, label=f"bump:{sigma:g}",
                            kind="rapid", decay_order=None)


def bump_phi_with_error(pair: TestFunctionPair, t):
    """Evaluate a bump's phi together with its quadrature error estimate."""
    if not isinstance(pair.phi_fn, _BumpTransform):
        raise DomainError("not a smooth-bump pair")
    vals, err = pair.phi_fn.evaluate(t)
    return pair.amplitude * vals, abs(pair.amplitude) * err


def parse_test_function(text: str) -> TestFunctionPair:
    """Parse ``fejer:0.5`` or ``bump:2[:n_quad]``."""
    parts = text.split(":")
    name = parts[0].strip().lower()
    try:
        sigma = float(parts[1])
    except (IndexError, ValueError):
        raise DomainError(f"cannot parse test function {text!r}") from None
    if name == "fejer":
        return make_fejer(sigma)
    if name == "bump":
        n_quad = int(parts[2]) if len(parts) > 2 else 64
        return make_smooth_bump(sigma, n_quad)
    raise DomainError(f"unknown test function {name!r}")


# ---------------------------------------------------------------------------
# quadrature against phi
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadResult:
    value: complex
    error_estimate: float
    window: float
    rigorous_tail: bool
    evaluations: int


def _panel_width(pair: TestFunctionPair, max_freq: float) -> float:
    h = 0.25 / pair.sigma
    if max_freq > 0:
        h = min(h, 6.0 / max_freq)
    return min(h, 0.5)


_TABLE_CACHE: dict = {}


def _phi_table(pair: TestFunctionPair, a: float, b: float, panels: int):
    """phi on a composite rule, memoised for quadrature-defined pairs."""
    nodes, weights = composite_nodes(a, b, panels)
    if pair.kind == "fejer":
        return nodes, weights, pair.phi_real(nodes)
    key = (id(pair.phi_fn), a, b, panels)
    hit = _TABLE_CACHE.get(key)
    if hit is None or hit[0] is not pair.phi_fn:
        if len(_TABLE_CACHE) > 256:
            _TABLE_CACHE.clear()
        hit = (pair.phi_fn, np.real(pair.phi_fn(nodes)))
        _TABLE_CACHE[key] = hit
    return nodes, weights, pair.amplitude * hit[1]


def _integrate_segment(pair, folded, a, b, h):
    panels = max(1, int(math.ceil((b - a) / h)))
    nodes, weights, phi_vals = _phi_table(pair, a, b, panels)
    vals = folded(nodes) * phi_vals
    return complex(np.sum(vals * weights)), nodes.size


_WINDOW_CACHE: dict = {}


def rapid_window(pair: TestFunctionPair, rel_tol: float) -> float:
    """Smallest T = 2^j/sigma with sup_{[T,2T]} |phi| < rel_tol |phi(0)|."""
    key = (id(pair.phi_fn), pair.sigma, rel_tol)
    hit = _WINDOW_CACHE.get(key)
    if hit is not None and hit[0] is pair.phi_fn:
        return hit[1]
    T = _rapid_window(pair, rel_tol)
    _WINDOW_CACHE[key] = (pair.phi_fn, T)
    return T


def _rapid_window(pair: TestFunctionPair, rel_tol: float) -> float:
    peak = abs(pair.phi_real(0.0))
    T = 2.0 / pair.sigma
    for _ in range(40):
        grid = np.linspace(T, 2 * T, 257)
        if np.max(np.abs(pair.phi_real(grid))) < rel_tol * peak:
            return T
        T *= 2
    raise ConvergenceError("test function does not decay fast enough")


def integrate_against(pair: TestFunctionPair, folded: Callable[[np.ndarray], np.ndarray],
                      tol: float = 1e-10, *, oscillatory: bool = False,
                      max_freq: float = 0.0, t_max: float | None = None) -> QuadResult:
    """int_{-inf}^{inf} g(t) phi(t) dt, given folded(t) = g(t) + g(-t) for t > 0.

    ``max_freq`` is the largest angular frequency (radians per unit t) of
    ``folded``; it only sets the panel width. For Fejer pairs the tail beyond
    the window is either integrated in closed profile (slowly varying
    ``folded``) or, when ``oscillatory`` is set, the window is doubled until
    the increment drops below ``tol`` and the last increment is reported as a
    heuristic tail estimate.
    """
    if pair.is_zero:
        return QuadResult(0j, 0.0, 0.0, True, 0)
    h = _panel_width(pair, max_freq)

    if pair.kind != "fejer":
        T = rapid_window(pair, tol * 1e-3)
        val, n1 = _integrate_segment(pair, folded, 0.0, T, h)
        tail, n2 = _integrate_segment(pair, folded, T, 2 * T, h)
        return QuadResult(val + tail, abs(tail), 2 * T, False, n1 + n2)

    sigma = pair.sigma
    T = 64.0 / sigma
    if t_max is not None:
        T = min(T, t_max)
    val, n = _integrate_segment(pair, folded, 0.0, T, h)

    if not oscillatory:
        # phi(t) = A (1 - cos 2 pi sigma t)/(2 pi^2 sigma t^2) exactly; the
        # non-oscillating part of the tail is integrated after t = T/v.
        x, w = gauss_legendre(64)
        v = ((x + 1) / 2) ** 2  # v = s^2 clusters nodes at v -> 0
        jac = (x + 1) / 2  # dv = 2 s ds, ds = dx/2
        vals = folded(T / v)
        smooth_tail = np.sum(w * jac * vals) * pair.amplitude / (2 * np.pi ** 2 * sigma * T)
        g_T = np.max(np.abs(folded(np.array([T, 2 * T]))))
        osc_bound = abs(pair.amplitude) * 2 * g_T / (2 * np.pi ** 2 * sigma * T ** 2 * np.pi * sigma)
        return QuadResult(val + complex(smooth_tail), float(osc_bound), T, True, n + 128)

    limit = t_max if t_max is not None else 4096.0 / sigma
    last = math.inf
    while T < limit:
        inc, m = _integrate_segment(pair, folded, T, 2 * T, h)
        val += inc
        n += m
        T *= 2
        last = abs(inc)
        if last < tol:
            break
    # the remaining tail is bounded by the decay of the last increment
    return QuadResult(val, float(last), T, False, n)


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------

@dataclass
class PairCheck:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class PairReport:
    label: str
    checks: list[PairCheck]
    decay_constants: dict[tuple[int, int], float]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[PairCheck]:
        return [c for c in self.checks if not c.passed]


def _band(a: float, b: float, n: int) -> np.ndarray:
    """n points of [a, b] on a golden-ratio sequence, so no lattice aliasing."""
    frac = (np.arange(n) * 0.6180339887498949 + 0.5) % 1.0
    return np.sort(a + (b - a) * frac)


def _ft_of_phi(pair: TestFunctionPair, xi: np.ndarray, tol: float):
    """Numerical Fourier transform of phi, 2 int_0^T phi(t) cos(2 pi t xi) dt."""
    sigma = pair.sigma
    T = 16.0 / sigma
    # tail bound from sup t^2 |phi(t)| on the last band, assuming 1/t^2 decay
    for _ in range(30):
        band = _band(T / 2, T, 1025)
        c2 = float(np.max(band ** 2 * np.abs(pair.phi_real(band))))
        if 2 * c2 / T < tol / 4:
            break
        T *= 2
    else:
        raise ConvergenceError("phi decays too slowly for the requested tolerance")
    tail = 2 * c2 / T
    freq = 2 * np.pi * max(float(np.max(np.abs(xi))), sigma)
    h = min(0.25 / sigma, 3.0 / freq)
    panels = int(math.ceil(T / h))
    nodes, weights = composite_nodes(0.0, T, panels)
    fw = pair.phi_real(nodes) * weights
    out = np.empty(xi.shape)
    for i, x in enumerate(xi):
        out[i] = 2.0 * np.sum(fw * np.cos(2 * np.pi * nodes * x))
    return out, tail


def verify_pair(pair: TestFunctionPair, tol: float = 1e-3) -> PairReport:
    """Check support, evenness, Fourier inversion and decay of a pair."""
    checks: list[PairCheck] = []
    sigma = pair.sigma

    outside = np.linspace(sigma, 3 * sigma, 201)
    leak = float(np.max(np.abs(pair.phi_hat(outside)))) if not pair.is_zero else 0.0
    checks.append(PairCheck("support", leak == 0.0,
                            f"max |phi_hat| on [sigma, 3 sigma] = {leak:.3e}"))

    xi = np.linspace(0, 2 * sigma, 101)
    even_hat = float(np.max(np.abs(pair.phi_hat(xi) - pair.phi_hat(-xi))))
    tt = np.linspace(0, 40 / sigma, 401)
    even_phi = float(np.max(np.abs(pair.phi(tt) - pair.phi(-tt))))
    imag = float(np.max(np.abs(np.imag(pair.phi(tt)))))
    checks.append(PairCheck("even", even_hat == 0.0 and even_phi < 1e-12 and imag < 1e-12,
                            f"hat {even_hat:.1e}, phi {even_phi:.1e}, Im phi {imag:.1e}"))

    xg = np.linspace(0, 1.5 * sigma, 31)
    ft, tail = _ft_of_phi(pair, xg, tol)
    err = float(np.max(np.abs(ft - pair.phi_hat(xg))))
    checks.append(PairCheck("fourier", err < tol,
                            f"max |FT(phi) - phi_hat| = {err:.3e} (tail {tail:.1e})"))

    consts: dict[tuple[int, int], float] = {}
    orders = [1, 2] if pair.decay_order is None else [n for n in (1, 2) if n <= pair.decay_order]
    T1 = 32.0 / sigma
    for n in orders:
        for y in (0, 1, 2):
            def ratio(t):
                z = t + 1j * y
                return np.abs(pair.phi(z)) * (t * t + y * y) ** n / math.exp(2 * math.pi * y * sigma)
            inner = float(np.max(ratio(_band(T1 / 4, T1 / 2, 801))))
            outer = float(np.max(ratio(_band(T1 / 2, T1, 801))))
            full = float(np.max(ratio(_band(0, T1, 3201))))
            consts[(n, y)] = full
            floor = 1e-12 * max(1.0, abs(pair.phi_real(0.0)))
            ok = math.isfinite(full) and outer <= 2.0 * inner + floor
            checks.append(PairCheck(f"decay n={n} y={y}", ok,
                                    f"C={full:.3e}, inner {inner:.3e}, outer {outer:.3e}"))
    skipped = [n for n in (1, 2) if n not in orders]
    if skipped:
        checks.append(PairCheck("decay-orders", True,
                                f"n in {skipped} not applicable: phi_hat is not smooth"))
    return PairReport(pair.label, checks, consts)
