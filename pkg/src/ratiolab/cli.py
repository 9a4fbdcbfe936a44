"""Command-line front end: predictions, explicit-formula sides, sweeps and check suites.

Exit codes: 0 success, 1 computation or configuration error (a JSON error
record goes to stderr), 2 a check suite reported a failure.
"""
from __future__ import annotations

import argparse
import cmath
import csv
import io
import json
import math
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import data, eulerprod, gammafactor, ntside, petersson, primes, ratios, testfn
from .errors import RatioLabError

EXIT_OK, EXIT_ERROR, EXIT_SUITE_FAILED = 0, 1, 2
ONE_DIM = sorted(data.ONE_DIMENSIONAL_WEIGHTS)


class ConfigError(RatioLabError, ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


# ---------------------------------------------------------------------------
# argument types
# ---------------------------------------------------------------------------

def _int_list(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(float(x)) for x in text]
    if isinstance(text, (int, float)):
        return [int(text)]
    return [int(float(x)) for x in str(text).split(",") if x.strip()]


def _number(text) -> int:
    return int(float(text))


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON file of option values; flags take precedence")
    p.add_argument("--output", "-o", help="write results here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default=None)
    p.add_argument("--emit-plot-data", metavar="DIR", help="write x/y series files to DIR")
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ratiolab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("predict", help="ratios-recipe density breakdown")
    _add_common(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--N", type=int, default=1)
    p.add_argument("--phi", default="fejer:0.5")
    p.add_argument("--mode", choices=("weighted", "unweighted"), default="weighted")
    p.add_argument("--completion", choices=ratios.COMPLETIONS, default="standard")

    p = sub.add_parser("ntside", help="explicit-formula density from eigenvalue data")
    _add_common(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--N", type=int, default=1)
    p.add_argument("--phi", default="fejer:0.5")
    p.add_argument("--mode", choices=("weighted", "unweighted"), default="weighted")
    p.add_argument("--family", help="family file (default: generated level-1 data)")

    p = sub.add_parser("compare", help="sweep both sides and fit residual decay")
    _add_common(p)
    p.add_argument("--k-sweep", type=_int_list, default=ONE_DIM)
    p.add_argument("--N", type=_int_list, default=[1])
    p.add_argument("--phi", default="fejer:0.5")
    p.add_argument("--mode", choices=("weighted", "unweighted"), default="weighted")
    p.add_argument("--family-dir", help="directory of <N>_<k>.nf files for N > 1")

    p = sub.add_parser("identities", help="exact identities suite")
    _add_common(p)
    p.add_argument("--seed", type=int, default=1)

    p = sub.add_parser("bounds", help="bound suites")
    _add_common(p)

    p = sub.add_parser("mertens", help="Mertens product and the e^-gamma completion")
    _add_common(p)
    p.add_argument("--y", type=_int_list, default=[10**6])
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--N", type=int, default=101)
    p.add_argument("--phi", default="fejer:1")
    p.add_argument("--skip-m-phi", action="store_true")

    p = sub.add_parser("hyps", help="exponential sums over primes in progressions")
    _add_common(p)
    p.add_argument("--x", type=_int_list, default=[10**4, 10**5, 10**6])
    p.add_argument("--c", type=_int_list, default=[1, 2, 3, 4, 5])

    p = sub.add_parser("petersson", help="Petersson formula against q-expansions")
    _add_common(p)
    p.add_argument("--k", type=_int_list, default=ONE_DIM)
    p.add_argument("--max-mn", type=int, default=20)

    p = sub.add_parser("fetch", help="retrieve a family file into the cache")
    _add_common(p)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--weight", type=int, required=True)
    p.add_argument("--endpoint")
    p.add_argument("--cache-dir", default="cache")
    p.add_argument("--source", default=data.DEFAULT_SOURCE)
    p.add_argument("--allow-network", action="store_true")
    return parser


def parse_args(argv: list[str]) -> argparse.Namespace:
    """Parse flags on top of an optional JSON config file."""
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    subs = parser._subparsers._group_actions[0].choices
    command = next((a for a in argv if a in subs), None)
    if known.config and command is not None:
        try:
            cfg = json.loads(Path(known.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {known.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("config file must hold an object")
        sub = subs[command]
        actions = {a.dest: a for a in sub._actions}
        for key, value in cfg.items():
            dest = key.replace("-", "_")
            if dest not in actions or dest in ("config", "help"):
                raise ConfigError(f"unknown option {key!r} for {command}")
            action = actions[dest]
            if action.type is _int_list:
                value = _int_list(value)
            elif action.type is not None and not isinstance(value, (list, dict)):
                value = action.type(value)
            # a value from the file satisfies a required flag
            action.required = False
            sub.set_defaults(**{dest: value})
    return parser.parse_args(argv)


def resolved_config(args: argparse.Namespace) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k != "config"}


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _family_for(k: int, N: int, f: testfn.TestFunctionPair, path=None):
    if path:
        return data.load_family(path)
    if N != 1:
        raise ConfigError("N > 1 needs a family file (--family or --family-dir)")
    params = gammafactor.GammaFactorParams(k, N)
    return data.level_one_family(k, max(2, math.ceil(params.R ** f.sigma)))


def cmd_predict(args) -> tuple[list[dict], dict, bool]:
    f = testfn.parse_test_function(args.phi)
    params = gammafactor.GammaFactorParams(args.k, args.N)
    if args.mode == "weighted":
        br = ratios.d1_ratios_weighted(f, params, args.tol, args.completion)
    else:
        br = ratios.d1_ratios_unweighted(f, params, args.tol)
    return [_row(br.as_dict(), br, args.tol)], {}, True


def cmd_ntside(args):
    f = testfn.parse_test_function(args.phi)
    params = gammafactor.GammaFactorParams(args.k, args.N)
    fam = _family_for(args.k, args.N, f, args.family)
    br = ntside.d1_nt(fam, f, params, weighted=args.mode == "weighted")
    return [_row(br.as_dict(), br, args.tol)], {}, True


def _row(record: dict, br: ratios.DensityBreakdown, tol: float) -> dict:
    record = dict(record)
    budget = record.pop("error_budget", {})
    record["tol"] = tol
    record["error_total"] = br.error_total
    for key, value in budget.items():
        record[f"err_{key}"] = value
    return record


def _compare_point(task) -> dict:
    k, N, phi, mode, tol, family_dir = task
    f = testfn.parse_test_function(phi)
    params = gammafactor.GammaFactorParams(k, N)
    path = Path(family_dir) / f"{N}_{k}.nf" if family_dir and N != 1 else None
    fam = _family_for(k, N, f, path)
    weighted = mode == "weighted"
    if weighted:
        rb = ratios.d1_ratios_weighted(f, params, tol)
    else:
        rb = ratios.d1_ratios_unweighted(f, params, tol)
    nb = ntside.d1_nt(fam, f, params, weighted=weighted)
    rep = ntside.compare(rb, nb)
    row = {"k": k, "N": N, "R": params.R, "log_R": params.log_R, "phi": phi, "mode": mode}
    row.update({key: v for key, v in rep.as_dict().items() if key not in row})
    row.update(total_ratios=rb.total, total_nt=nb.total, tol=tol,
               error_total=rb.error_total + nb.error_total)
    if weighted:
        row["m_phi"] = rb.m_phi
        row["m_phi_pole_part"] = rb.info["m_phi_pole_part"]
    elif N == 1:
        model = ntside.secondary_term_model(f, params, len(fam))
        row["secondary_model"] = model
        row["residual_minus_model"] = rep.nt_residual - model
    return {"row": row, "report": rep}


def _pool_map(fn, tasks, jobs: int):
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))


def cmd_compare(args):
    tasks = [(k, N, args.phi, args.mode, args.tol, args.family_dir)
             for N in args.N for k in args.k_sweep]
    results = _pool_map(_compare_point, tasks, args.jobs)
    rows = [r["row"] for r in results]
    summary = ntside.compare_sweep([r["report"] for r in results])
    for row in rows:
        row["exponent_vs_log_R"] = summary.exponent_vs_log_R
        row["exponent_vs_k"] = summary.exponent_vs_k
    series = {
        "residual_vs_k": [(r["k"], r["residual"]) for r in rows],
        "nt_residual_vs_k": [(r["k"], r["nt_residual"]) for r in rows],
        "ratios_residual_vs_k": [(r["k"], r["ratios_residual"]) for r in rows],
    }
    return rows, series, True


def _check(name: str, value: float, threshold: float, **extra) -> dict:
    ok = bool(np.isfinite(value) and value <= threshold)
    row = {"check": name, "value": float(value), "threshold": threshold, "passed": ok}
    row.update(extra)
    return row


def cmd_identities(args):
    rng = random.Random(args.seed)
    rows = []
    gaps = [eulerprod.per_prime_identity_gap(int(p), u) for p in primes.primes_upto(97)
            for u in (0.1j, 1j, 10j, 0.5 + 2j)]
    rows.append(_check("per_prime_factorisation", max(gaps), 1e-13))
    params = gammafactor.GammaFactorParams(12, 1)
    rows.append(_check("x_l_half", abs(gammafactor.x_l(0.5, params) - 1), 1e-12))
    inv, dup, psi = 0.0, 0.0, 0.0
    for _ in range(100):
        k = rng.choice([4, 12, 26, 40])
        N = rng.choice([1, 2, 101])
        pr = gammafactor.GammaFactorParams(k, N)
        s = complex(rng.uniform(-1, 2), rng.uniform(-30, 30))
        inv = max(inv, abs(gammafactor.x_l(s, pr) * gammafactor.x_l(1 - s, pr) - 1))
        x = gammafactor.x_l(s, pr)
        dup = max(dup, abs(gammafactor.x_l_duplicated(s, pr) - x) / abs(x))
        psi = max(psi, abs(gammafactor.x_l_logderiv_four_psi(s, pr)
                           - gammafactor.x_l_logderiv(s, pr)))
    rows.append(_check("x_l_inversion", inv, 1e-10))
    rows.append(_check("x_l_duplication", dup, 1e-10))
    rows.append(_check("logderiv_four_psi", psi, 1e-10))
    sym, real, mult = 0.0, 0.0, 0.0
    for _ in range(200):
        m, n, c = rng.randint(1, 500), rng.randint(1, 500), rng.randint(1, 2000)
        a = petersson.kloosterman_complex(m, n, c)
        b = petersson.kloosterman_complex(n, m, c)
        sym = max(sym, abs(a.real - b.real))
        real = max(real, abs(a.imag))
        c1, c2 = rng.randint(1, 60), rng.randint(1, 60)
        if math.gcd(c1, c2) == 1:
            lhs = petersson.kloosterman_complex(m, n, c1 * c2).real
            i1, i2 = pow(c1, -1, c2) if c2 > 1 else 0, pow(c2, -1, c1) if c1 > 1 else 0
            rhs = (petersson.kloosterman_complex(m * i2 * i2, n, c1).real
                   * petersson.kloosterman_complex(m * i1 * i1, n, c2).real)
            mult = max(mult, abs(lhs - rhs))
    rows.append(_check("kloosterman_symmetry", sym, 1e-9))
    rows.append(_check("kloosterman_realness", real, 1e-9))
    rows.append(_check("kloosterman_multiplicativity", mult, 1e-8))
    return rows, {}, all(r["passed"] for r in rows)


def cmd_bounds(args):
    rows = []
    for k in (12, 20, 40):
        sup = gammafactor.far_line_sup(k, 1)
        bound = gammafactor.far_line_bound(k, 1)
        rows.append(_check(f"x_l_bound_k{k}", sup / bound, 1.0, sup=sup, bound=bound))
    rep = testfn.verify_pair(testfn.make_fejer(1.0), 1e-3)
    rows.append(_check("fejer_decay_and_transform", 0.0 if rep.passed else 1.0, 0.5,
                       **{f"C_n{n}_y{y}": v for (n, y), v in sorted(rep.decay_constants.items())}))
    y = np.linspace(-50, 50, 401)
    for x in (0.0, 0.5, 1.0):
        vals, _ = eulerprod.euler_a_array(x + 1j * y, 1e-8)
        sup = float(np.max(np.abs(vals)))
        bound = eulerprod.modulus_bound(x)
        rows.append(_check(f"a_modulus_x{x}", sup / bound, 1.0, sup=sup, bound=bound))
    worst = 0.0
    rng = random.Random(7)
    for _ in range(300):
        m, n, c = rng.randint(1, 300), rng.randint(1, 300), rng.randint(1, 3000)
        s = abs(petersson.kloosterman(petersson.KloostermanInput(m, n, c)))
        worst = max(worst, s / petersson.weil_bound(m, n, c))
    rows.append(_check("weil_bound", worst, 1.0 + 1e-9))
    worst = 0.0
    for k in ONE_DIM:
        q = data.generate_level_one_eigenforms(k, 1000)
        worst = max(worst, max(abs(q.normalized(int(p))) for p in primes.primes_upto(1000)))
    rows.append(_check("deligne_bound", worst, 2.0))
    return rows, {}, all(r["passed"] for r in rows)


def cmd_mertens(args):
    rows = []
    limit = primes.mertens_limit()
    for y in args.y:
        prod = primes.mertens_product(y)
        rows.append({"y": y, "product": prod, "product_log_y": prod * math.log(y),
                     "exp_minus_gamma": limit, "difference": prod * math.log(y) - limit})
    if not args.skip_m_phi:
        f = testfn.parse_test_function(args.phi)
        params = gammafactor.GammaFactorParams(args.k, args.N)
        std = ratios.m_phi(f, params, args.tol, "standard")
        mer = ratios.m_phi(f, params, args.tol, "mertens")
        for row in rows:
            row.update(m_phi_standard=std, m_phi_mertens=mer, m_phi_ratio=mer / std)
    series = {"product_log_y": [(r["y"], r["product_log_y"]) for r in rows]}
    return rows, series, True


def cmd_hyps(args):
    rows, series = [], {}
    for c in args.c:
        for a in range(1, c + 1):
            if math.gcd(a, c) != 1 or a > c:
                continue
            res = [primes.hyp_s_sum(x, c, a % c if c > 1 else 0) for x in args.x]
            slope = primes.fit_exponent(args.x, [r.modulus for r in res]) if len(res) > 1 else float("nan")
            key = f"c{c}_a{a % c if c > 1 else 0}"
            series[key] = [(math.log(x), math.log(r.modulus)) for x, r in zip(args.x, res)]
            for x, r in zip(args.x, res):
                row = {"c": c, "a": a % c if c > 1 else 0, "x": x, "fitted_exponent": slope}
                row.update(r.as_dict())
                rows.append(row)
    return rows, series, True


def _petersson_row(task) -> dict:
    k, max_mn, tol = task
    q = data.generate_level_one_eigenforms(k, max_mn * max_mn)
    ms = list(range(1, max_mn + 1))
    vals, C, bounds = petersson.petersson_matrix(k, 1, ms, ms, tol)
    lam = np.array([q.normalized(m) for m in ms])
    dev = np.abs(vals / vals[0, 0] - np.outer(lam, lam))
    allowed = 1e-6 + bounds
    return {"k": k, "c_cutoff": C, "delta_11": float(vals[0, 0]), "max_deviation": float(dev.max()),
            "max_tail_bound": float(bounds.max()), "passed": bool(np.all(dev <= allowed))}


def cmd_petersson(args):
    tol = min(args.tol, 1e-10)
    rows = _pool_map(_petersson_row, [(k, args.max_mn, tol) for k in args.k], args.jobs)
    return rows, {}, all(r["passed"] for r in rows)


def cmd_fetch(args):
    res = data.fetch_remote(args.level, args.weight, args.endpoint, args.cache_dir,
                            allow_network=args.allow_network, source=args.source)
    return [{"path": str(res.path), "from_cache": res.from_cache, "level": res.family.N,
             "weight": res.family.k, "dim": len(res.family)}], {}, True


COMMANDS = {
    "predict": cmd_predict, "ntside": cmd_ntside, "compare": cmd_compare,
    "identities": cmd_identities, "bounds": cmd_bounds, "mertens": cmd_mertens,
    "hyps": cmd_hyps, "petersson": cmd_petersson, "fetch": cmd_fetch,
}
_DEFAULT_FORMAT = {"compare": "csv", "hyps": "csv", "mertens": "csv"}


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _plain(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return value


def render(rows: list[dict], config: dict, fmt: str) -> str:
    rows = [{k: _plain(v) for k, v in r.items()} for r in rows]
    if fmt == "json":
        return json.dumps({"config": config, "results": rows}, indent=1, sort_keys=True) + "\n"
    fields: list[str] = []
    for r in rows:
        fields.extend(k for k in r if k not in fields)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def write_plot_data(directory, series: dict) -> list[Path]:
    out = []
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for name, points in sorted(series.items()):
        path = d / f"{name}.tsv"
        path.write_text("x\ty\n" + "".join(f"{x!r}\t{y!r}\n" for x, y in points), encoding="utf-8")
        out.append(path)
    return out


def run(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
        config = resolved_config(args)
        rows, series, ok = COMMANDS[args.command](args)
        fmt = args.format or _DEFAULT_FORMAT.get(args.command, "json")
        text = render(rows, config, fmt)
        if args.output:
            Path(args.output).write_text(text, encoding="utf-8")
            if fmt == "csv":
                Path(str(args.output) + ".config.json").write_text(
                    json.dumps(config, indent=1, sort_keys=True) + "\n", encoding="utf-8")
        else:
            stdout.write(text)
            if fmt == "csv":
                stderr.write(json.dumps({"config": config}, sort_keys=True) + "\n")
        if args.emit_plot_data:
            write_plot_data(args.emit_plot_data, series)
        return EXIT_OK if ok else EXIT_SUITE_FAILED
    except (RatioLabError, ArithmeticError, ValueError, OSError, LookupError) as exc:
        record = {"error": type(exc).__name__, "message": str(exc)}
        stderr.write(json.dumps(record, sort_keys=True) + "\n")
        return EXIT_ERROR


def main() -> None:
    sys.exit(run())
