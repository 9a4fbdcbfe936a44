"""Eigenvalue data: exact level-1 q-expansions, the family file format, validation
and a cache-first remote fetch.

Level-1 spaces of weight 12, 16, 18, 20, 22 and 26 are one-dimensional and
spanned by Delta, Delta E4, Delta E6, Delta E4^2, Delta E4 E6 and
Delta E4^2 E6. The q-expansions are exact integers; series products use
Kronecker substitution so that the big-integer multiply does the work.

Family files are UTF-8 JSON:

    {"format": "ratiolab.newforms", "version": 1, "level": N, "weight": k,
     "dim": d, "p_max": P, "source": "...",
     "forms": [{"label": ..., "ap": [[p, "value"], ...],
                "ap_normalization": "arithmetic" | "analytic",
                "precision": digits or null, "lambda_at_N": "value" or null,
                "sign": +-1, "weight": "value", "weight_source": ...,
                "raw_weight": "value" or null}]}

Arithmetic values are exact integers or rationals a(p) with
lambda(p) = a(p)/p^{(k-1)/2}; analytic values are decimal lambda(p).
"""
from __future__ import annotations

import json
import math
import os
import urllib.error
import urllib.parse
import urllib.request
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .errors import DataError, DomainError, NetworkError, NotFoundError
from .ntside import Newform, NewformFamily
from .primes import is_prime, primes_upto

ONE_DIMENSIONAL_WEIGHTS = frozenset({12, 16, 18, 20, 22, 26})
EMPTY_LEVEL_ONE = frozenset({4, 6, 8, 10, 14})
MAX_COEFFICIENTS = 10**4
FORMAT_NAME = "ratiolab.newforms"
FORMAT_VERSION = 1
ENDPOINT_ENV = "RATIOLAB_ENDPOINT"
DEFAULT_SOURCE = "remote-v1"

# the generating product for each one-dimensional weight: powers of (E4, E6)
_EISENSTEIN_POWERS = {12: (0, 0), 16: (1, 0), 18: (0, 1), 20: (2, 0), 22: (1, 1), 26: (2, 1)}


def level_one_dimension(k: int) -> int:
    """dim S_k(SL2(Z)) for even k >= 4."""
    if k < 4 or k % 2:
        raise DomainError("weight must be an even integer >= 4")
    return k // 12 - (1 if k % 12 == 2 else 0)


def _sign_k(k: int) -> int:
    return -1 if (k // 2) % 2 else 1


# ---------------------------------------------------------------------------
# exact power series
# ---------------------------------------------------------------------------

def _pack(coeffs: list[int], bits: int) -> int:
    """sum c_i 2^{bits i} for signed integers c_i."""
    width = bits // 8
    pos = b"".join(max(c, 0).to_bytes(width, "little") for c in coeffs)
    neg = b"".join(max(-c, 0).to_bytes(width, "little") for c in coeffs)
    return int.from_bytes(pos, "little") - int.from_bytes(neg, "little")


def _unpack(value: int, bits: int, n: int) -> list[int]:
    """Invert _pack for the first n signed digits (|digit| < 2^{bits-1})."""
    width = bits // 8
    half = 1 << (bits - 1)
    offset = int.from_bytes(half.to_bytes(width, "little") * n, "little")
    shifted = (value + offset) & ((1 << (bits * n)) - 1)
    raw = shifted.to_bytes(width * n, "little")
    return [int.from_bytes(raw[i * width:(i + 1) * width], "little") - half for i in range(n)]


def series_mul(a: list[int], b: list[int], n: int) -> list[int]:
    """First n coefficients of the product of two integer power series."""
    a, b = a[:n], b[:n]
    if not a or not b:
        return [0] * n
    ma, mb = max(map(abs, a)), max(map(abs, b))
    # every input and output digit must fit in a signed slot
    bound = max(ma * mb * min(len(a), len(b)), ma, mb)
    bits = 8 * ((bound.bit_length() + 2 + 7) // 8)
    prod = _pack(a, bits) * _pack(b, bits)
    out = _unpack(prod, bits, n)
    return out


def series_mul_naive(a: list[int], b: list[int], n: int) -> list[int]:
    """Schoolbook product (reference for series_mul)."""
    out = [0] * n
    for i, x in enumerate(a[:n]):
        if x:
            for j, y in enumerate(b[: n - i]):
                out[i + j] += x * y
    return out


def euler_function(n: int) -> list[int]:
    """prod_{m >= 1} (1 - q^m) to n terms, from the pentagonal number theorem."""
    out = [0] * n
    j = 0
    while True:
        sign = -1 if j % 2 else 1
        hit = False
        for g in ((j * (3 * j - 1)) // 2, (j * (3 * j + 1)) // 2):
            if g < n:
                out[g] = sign
                hit = True
        if not hit:
            break
        j += 1
    return out


def _divisor_power_sums(n: int, e: int) -> list[int]:
    """sigma_e(m) for m < n (index 0 unused)."""
    s = [0] * n
    for d in range(1, n):
        de = d**e
        for m in range(d, n, d):
            s[m] += de
    return s


def eisenstein(k: int, n: int) -> list[int]:
    """E4 or E6 to n terms, normalized with constant term 1."""
    const = {4: 240, 6: -504}.get(k)
    if const is None:
        raise DomainError("only E4 and E6 are provided")
    s = _divisor_power_sums(n, k - 1)
    return [1] + [const * s[m] for m in range(1, n)]


def _series_power(a: list[int], e: int, n: int) -> list[int]:
    result = [1] + [0] * (n - 1)
    base = a[:n]
    while e:
        if e & 1:
            result = series_mul(result, base, n)
        e >>= 1
        if e:
            base = series_mul(base, base, n)
    return result


def delta_coefficients(n_max: int) -> list[int]:
    """tau(1..n_max) from Delta = q prod (1 - q^m)^24."""
    eta = euler_function(n_max)
    return _series_power(eta, 24, n_max)


@dataclass(frozen=True)
class QExpansion:
    k: int
    coefficients: tuple  # a(1), ..., a(n_max)
    n_max: int

    def a(self, n: int) -> int:
        if not 1 <= n <= self.n_max:
            raise DomainError(f"coefficient index {n} outside 1..{self.n_max}")
        return self.coefficients[n - 1]

    def normalized(self, n: int) -> float:
        """lambda(n) = a(n)/n^{(k-1)/2}."""
        return self.a(n) / n ** ((self.k - 1) / 2)

    def eigenvalues(self, p_max: int) -> dict[int, float]:
        return {int(p): self.normalized(int(p)) for p in primes_upto(min(p_max, self.n_max))}


def generate_level_one_eigenforms(k: int, n_max: int) -> QExpansion:
    """The normalized eigenform of a one-dimensional level-1 space, exactly."""
    if k not in ONE_DIMENSIONAL_WEIGHTS:
        raise DomainError(f"weight {k} is not one of {sorted(ONE_DIMENSIONAL_WEIGHTS)}")
    if not 1 <= n_max <= MAX_COEFFICIENTS:
        raise DomainError(f"n_max must lie in 1..{MAX_COEFFICIENTS}")
    series = delta_coefficients(n_max)  # index i holds a(i+1)
    e4, e6 = _EISENSTEIN_POWERS[k]
    if e4:
        series = series_mul(series, _series_power(eisenstein(4, n_max), e4, n_max), n_max)
    if e6:
        series = series_mul(series, _series_power(eisenstein(6, n_max), e6, n_max), n_max)
    return QExpansion(k, tuple(series), n_max)


def level_one_family(k: int, p_max: int, raw_weight: float | None = None) -> NewformFamily:
    """The single-form family of a one-dimensional level-1 space.

    The harmonic weight is 1 after normalization; the unnormalized weight is
    the Petersson value at (1, 1) unless supplied.
    """
    from .petersson import petersson_full

    q = generate_level_one_eigenforms(k, max(p_max, 2))
    ps = [int(p) for p in primes_upto(p_max)]
    if raw_weight is None:
        raw_weight = petersson_full(k, 1, 1, 1, tol=1e-14).value
    form = Newform(
        k=k, N=1, eigenvalues={p: q.normalized(p) for p in ps}, sign=_sign_k(k), weight=1.0,
        raw_weight=raw_weight, label=f"1.{k}.a", exact_ap={p: Fraction(q.a(p)) for p in ps},
        weight_source="petersson_full")
    return NewformFamily(k, 1, (form,), p_max, source="generated")


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Issue:
    form: str
    check: str
    detail: str


@dataclass
class ValidationReport:
    issues: list = field(default_factory=list)
    checked: int = 0

    @property
    def ok(self) -> bool:
        return not self.issues

    def checks_failed(self) -> set[str]:
        return {i.check for i in self.issues}

    def add(self, form: str, check: str, detail: str):
        self.issues.append(Issue(form, check, detail))

    def summary(self) -> str:
        if self.ok:
            return f"valid ({self.checked} forms)"
        return "; ".join(f"{i.form}: {i.check}: {i.detail}" for i in self.issues)


def validate_family(fam: NewformFamily, check_raw_weight: bool = False,
                    weight_tol: float = 1e-10) -> ValidationReport:
    """Check every Newform invariant and report each violation separately."""
    rep = ValidationReport()
    k, N = fam.k, fam.N
    if N != 1 and not is_prime(N):
        rep.add("*", "level", f"level {N} is neither 1 nor prime")
    if N == 1 and k >= 4 and k % 2 == 0 and len(fam.forms) != level_one_dimension(k):
        rep.add("*", "dimension", f"{len(fam.forms)} forms, space has dimension "
                                  f"{level_one_dimension(k)}")
    needed = [int(p) for p in primes_upto(fam.p_max) if p != N]
    total = 0.0
    for f in fam.forms:
        rep.checked += 1
        label = f.label or "?"
        missing = [p for p in needed if p not in f.eigenvalues]
        if missing:
            rep.add(label, "coverage", f"no eigenvalue for p = {missing[0]}")
        if N in f.eigenvalues:
            rep.add(label, "level_prime", f"eigenvalue listed at p = N = {N}")
        for p, lam in sorted(f.eigenvalues.items()):
            if not math.isfinite(lam) or abs(lam) > 2 + 1e-9:
                rep.add(label, "deligne", f"|lambda({p})| = {abs(lam):.6g} > 2")
                break
        if f.exact_ap:
            for p, a in sorted(f.exact_ap.items()):
                if a * a > 4 * Fraction(p) ** (k - 1):
                    rep.add(label, "deligne", f"a({p})^2 > 4 p^(k-1)")
                    break
        if N == 1:
            if f.lambda_at_N is not None:
                rep.add(label, "lambda_at_N", "level 1 form carries lambda(N)")
            if f.sign != _sign_k(k):
                rep.add(label, "sign", f"sign {f.sign} != i^k = {_sign_k(k)}")
        else:
            lam_n = f.lambda_at_N
            if lam_n is None or not math.isfinite(lam_n):
                rep.add(label, "lambda_at_N", "missing lambda(N)")
            else:
                if abs(lam_n * lam_n * N - 1) > 1e-9:
                    rep.add(label, "lambda_at_N", f"lambda(N)^2 N = {lam_n * lam_n * N:.12g} != 1")
                # sign = i^k mu(N) lambda(N) sqrt(N) with mu(N) = -1
                expected = -_sign_k(k) * lam_n * math.sqrt(N)
                if abs(expected - f.sign) > 1e-6:
                    rep.add(label, "sign", f"sign {f.sign} but i^k mu(N) lambda(N) sqrt(N) "
                                           f"= {expected:.9g}")
        if f.sign not in (1, -1):
            rep.add(label, "sign", f"sign {f.sign} is not +-1")
        if not (math.isfinite(f.weight) and f.weight > 0):
            rep.add(label, "weight", f"weight {f.weight} is not positive")
        total += f.weight
        if check_raw_weight and f.weight_source == "petersson_full":
            from .petersson import petersson_full

            if N != 1 or k not in ONE_DIMENSIONAL_WEIGHTS:
                rep.add(label, "raw_weight", "Petersson-derived weight outside a "
                                             "one-dimensional level-1 space")
            else:
                ref = petersson_full(k, 1, 1, 1, tol=1e-14).value
                if f.raw_weight is None or abs(f.raw_weight - ref) > 1e-8 * ref:
                    rep.add(label, "raw_weight", f"raw weight {f.raw_weight} != {ref}")
    if fam.forms and abs(total - 1) > weight_tol:
        rep.add("*", "weight_normalization", f"weights sum to {total:.15g}")
    return rep


# ---------------------------------------------------------------------------
# file format
# ---------------------------------------------------------------------------

def _num_text(x: float) -> str:
    return repr(float(x))


def family_to_dict(fam: NewformFamily) -> dict:
    forms = []
    for f in fam.forms:
        exact = f.exact_ap is not None and set(f.exact_ap) == set(f.eigenvalues)
        if exact:
            ap = [[p, str(f.exact_ap[p])] for p in sorted(f.exact_ap)]
        else:
            ap = [[p, _num_text(v)] for p, v in sorted(f.eigenvalues.items())]
        forms.append({
            "label": f.label,
            "ap": ap,
            "ap_normalization": "arithmetic" if exact else "analytic",
            "precision": None if exact else 17,
            "lambda_at_N": None if f.lambda_at_N is None else _num_text(f.lambda_at_N),
            "sign": int(f.sign),
            "weight": _num_text(f.weight),
            "weight_source": f.weight_source,
            "raw_weight": None if f.raw_weight is None else _num_text(f.raw_weight),
        })
    return {"format": FORMAT_NAME, "version": FORMAT_VERSION, "level": fam.N, "weight": fam.k,
            "dim": len(fam.forms), "p_max": fam.p_max, "source": fam.source, "forms": forms}


def dumps_family(fam: NewformFamily) -> str:
    return json.dumps(family_to_dict(fam), indent=1, sort_keys=True, ensure_ascii=False) + "\n"


def _parse_number(text, what: str) -> Fraction | float:
    if isinstance(text, bool) or not isinstance(text, (str, int, float)):
        raise DataError(f"{what}: expected a number, got {text!r}")
    try:
        if isinstance(text, str) and ("/" in text or text.lstrip("+-").isdigit()):
            return Fraction(text)
        return float(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise DataError(f"{what}: cannot parse {text!r}") from exc


def family_from_dict(obj: dict) -> NewformFamily:
    try:
        if obj.get("format") != FORMAT_NAME:
            raise DataError(f"not a {FORMAT_NAME} document")
        if obj.get("version") != FORMAT_VERSION:
            raise DataError(f"unsupported format version {obj.get('version')!r}")
        k, N = int(obj["weight"]), int(obj["level"])
        forms = []
        for i, rec in enumerate(obj["forms"]):
            label = rec.get("label") or f"form{i}"
            norm = rec.get("ap_normalization", "analytic")
            if norm not in ("arithmetic", "analytic"):
                raise DataError(f"{label}: unknown ap_normalization {norm!r}")
            lam: dict[int, float] = {}
            exact: dict[int, Fraction] = {}
            for p, text in rec["ap"]:
                p = int(p)
                v = _parse_number(text, f"{label} a({p})")
                if norm == "arithmetic":
                    exact[p] = Fraction(v)
                    lam[p] = float(Fraction(v)) / p ** ((k - 1) / 2)
                else:
                    lam[p] = float(v)
            lam_n = rec.get("lambda_at_N")
            raw = rec.get("raw_weight")
            forms.append(Newform(
                k=k, N=N, eigenvalues=lam, sign=int(rec["sign"]),
                weight=float(_parse_number(rec["weight"], f"{label} weight")),
                lambda_at_N=None if lam_n is None else float(_parse_number(lam_n, f"{label} lambda(N)")),
                raw_weight=None if raw is None else float(_parse_number(raw, f"{label} raw_weight")),
                label=label, exact_ap=exact or None,
                weight_source=rec.get("weight_source", "file")))
        if int(obj.get("dim", len(forms))) != len(forms):
            raise DataError(f"dim {obj.get('dim')} but {len(forms)} forms listed")
        return NewformFamily(k, N, tuple(forms), int(obj["p_max"]), obj.get("source", ""))
    except (KeyError, TypeError) as exc:
        raise DataError(f"malformed family record: {exc!r}") from exc


def loads_family(text: str) -> NewformFamily:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"parse error: {exc}") from exc
    if not isinstance(obj, dict):
        raise DataError("family document must be an object")
    return family_from_dict(obj)


def load_family(path, validate: bool = True) -> NewformFamily:
    """Read a family file; with ``validate`` any invariant violation is an error."""
    fam = loads_family(Path(path).read_text(encoding="utf-8"))
    if validate:
        rep = validate_family(fam)
        if not rep.ok:
            raise DataError(f"{path}: {rep.summary()}")
    return fam


def save_family(fam: NewformFamily, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_family(fam), encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# remote fetch
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FetchResult:
    path: Path
    family: NewformFamily
    from_cache: bool


def cache_path(cache_dir, source: str, level: int, weight: int) -> Path:
    return Path(cache_dir) / source / f"{level}_{weight}.nf"


def _family_from_remote(payload: dict, level: int, weight: int, source: str) -> NewformFamily:
    """Convert a remote record set into a family; schema problems raise DataError."""
    try:
        version = str(payload["version"])
        if not source.endswith(f"-v{version}"):
            raise DataError(f"remote source version {version!r} does not match cache key {source!r}")
        if int(payload["level"]) != level or int(payload["weight"]) != weight:
            raise DataError("remote records are for a different (level, weight)")
        recs = payload["forms"]
        if not recs:
            raise NotFoundError(f"no newforms for level {level}, weight {weight}")
        forms = []
        for i, rec in enumerate(recs):
            lam = {int(p): float(v) for p, v in rec["ap"] if int(p) != level}
            lam_n = rec.get("lambda_at_N")
            forms.append(Newform(
                k=weight, N=level, eigenvalues=lam, sign=int(rec["sign"]),
                weight=float(rec["weight"]),
                lambda_at_N=None if lam_n is None else float(lam_n),
                label=str(rec.get("label", f"{level}.{weight}.{i}")), weight_source="remote"))
        p_max = int(payload.get("p_max", min(max(f.eigenvalues) for f in forms)))
        return NewformFamily(weight, level, tuple(forms), p_max, source=source)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, DataError):
            raise
        raise DataError(f"schema mismatch in remote records: {exc!r}") from exc


def fetch_remote(level: int, weight: int, endpoint: str | None = None, cache_dir="cache",
                 allow_network: bool = False, source: str = DEFAULT_SOURCE,
                 timeout: float = 30.0) -> FetchResult:
    """Cache-first retrieval of a family file.

    A cache hit never touches the network. On a miss the endpoint (argument or
    the RATIOLAB_ENDPOINT environment variable) is queried only when
    ``allow_network`` is set; the records must pass validate_family before the
    immutable cache entry is written.
    """
    path = cache_path(cache_dir, source, level, weight)
    if path.exists():
        return FetchResult(path, load_family(path), True)
    endpoint = endpoint or os.environ.get(ENDPOINT_ENV)
    if not allow_network:
        raise NetworkError(f"cache miss for {path} and network use is not enabled")
    if not endpoint:
        raise NetworkError(f"no endpoint given and {ENDPOINT_ENV} is unset")
    url = endpoint + ("&" if "?" in endpoint else "?") + urllib.parse.urlencode(
        {"level": level, "weight": weight})
    try:
        with urllib.request.urlopen(url, timeout=timeout) as resp:
            body = resp.read().decode("utf-8")
    except urllib.error.HTTPError as exc:
        if exc.code == 404:
            raise NotFoundError(f"no newforms for level {level}, weight {weight}") from exc
        raise NetworkError(f"HTTP {exc.code} from {url}") from exc
    except (urllib.error.URLError, OSError) as exc:
        raise NetworkError(f"cannot reach {url}: {exc}") from exc
    try:
        payload = json.loads(body)
    except json.JSONDecodeError as exc:
        raise DataError(f"schema mismatch: response is not JSON ({exc})") from exc
    if not isinstance(payload, dict):
        raise DataError("schema mismatch: response is not an object")
    fam = _family_from_remote(payload, level, weight, source)
    rep = validate_family(fam)
    if not rep.ok:
        raise DataError(f"fetched family rejected: {rep.summary()}")
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(dumps_family(fam), encoding="utf-8")
    if path.exists():  # another writer got there first; entries are immutable
        tmp.unlink()
    else:
        os.replace(tmp, path)
    return FetchResult(path, load_family(path), False)
