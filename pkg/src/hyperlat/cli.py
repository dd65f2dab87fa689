"""Command-line front end.

Exit status: 0 success, 1 usage error, 2 computation error (node budget or
arithmetic), 3 a verification gate failed.  Results go to stdout (or
``--out``); progress goes to stderr.  Settings resolve as flag, then the
``HYPERLAT_*`` environment variable, then the built-in default.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from fractions import Fraction
from typing import Optional, Sequence

from . import acceptance, experiments, limits
from .cache import CountCache
from .counting import (DEFAULT_NODE_BUDGET, BudgetExceeded, RegionSpec, count, count_constrained,
                       count_scaled)
from .experiments import ArithmeticFunction, reports_to_csv
from .sampling import Sampler, SamplerConfig, dump_samples, make_rng

EXIT_OK, EXIT_USAGE, EXIT_COMPUTE, EXIT_GATE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _env(name: str, cast, default):
    raw = os.environ.get("HYPERLAT_" + name)
    if raw is None or raw == "":
        return default
    try:
        return cast(raw)
    except ValueError:
        raise UsageError(f"bad value for HYPERLAT_{name}: {raw!r}")


def _int(text: str) -> int:
    """Integers, also written as ``1e6`` or ``10**6``."""
    t = text.strip().replace("_", "")
    try:
        if "**" in t:
            a, b = t.split("**")
            return int(a) ** int(b)
        if "e" in t.lower():
            f = Fraction(t)
            if f.denominator != 1:
                raise ValueError
            return int(f)
        return int(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")


def _frac(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}")


def _frac_list(text: str) -> list[Fraction]:
    return [_frac(x) for x in text.split(",") if x.strip()]


def _int_list(text: str) -> list[int]:
    return [_int(x) for x in text.split(",") if x.strip()]


def _region(a) -> RegionSpec:
    if a.l is None or a.r is None or a.n is None:
        raise UsageError("--l, --r and --n are required")
    return RegionSpec(a.l, a.r, a.n)


def _progress(a, msg: str) -> None:
    if not a.quiet:
        print(msg, file=sys.stderr, flush=True)


def _emit(a, text: str) -> None:
    if a.out:
        with open(a.out, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _emit_reports(a, reports) -> int:
    if a.format == "csv":
        _emit(a, reports_to_csv(reports))
    else:
        _emit(a, "\n".join(r.to_json() for r in reports))
    return EXIT_OK if all(r.passed for r in reports) else EXIT_GATE


def _emit_value(a, payload: dict, scalar) -> int:
    if a.format == "json":
        _emit(a, json.dumps(payload, sort_keys=True))
    elif a.format == "csv":
        keys = sorted(payload)
        _emit(a, ",".join(keys) + "\n" + ",".join(str(payload[k]) for k in keys))
    else:
        _emit(a, str(scalar))
    return EXIT_OK


def _cache(a) -> Optional[CountCache]:
    return CountCache(a.cache_dir) if a.cache_dir else None


# ---------------------------------------------------------------------------
# subcommands


def cmd_count(a) -> int:
    reg = _region(a)
    t = time.perf_counter()
    _progress(a, f"counting H({reg.ell},{reg.r},{reg.n}) ...")
    if a.cap is not None:
        value = count_constrained(reg, a.cap, method=a.method, node_budget=a.node_budget,
                                  threads=a.threads, cache=_cache(a))
    else:
        value = count(reg, method=a.method, node_budget=a.node_budget, threads=a.threads, cache=_cache(a))
    _progress(a, f"done in {time.perf_counter() - t:.2f}s")
    payload = {"l": reg.ell, "r": reg.r, "n": reg.n, "count": value}
    if a.cap is not None:
        payload["cap"] = str(a.cap)
    return _emit_value(a, payload, value)


def cmd_count_scaled(a) -> int:
    reg = _region(a)
    if (a.t is None) == (a.mu is None):
        raise UsageError("give exactly one of --t and --mu")
    t = a.t if a.t is not None else [Fraction(x) for x in a.mu]
    value = count_scaled(reg, t, method=a.method, node_budget=a.node_budget, threads=a.threads, cache=_cache(a))
    payload = {"l": reg.ell, "r": reg.r, "n": reg.n, "t": [str(x) for x in t], "count": value}
    return _emit_value(a, payload, value)


def cmd_sample(a) -> int:
    reg = _region(a)
    cfg = SamplerConfig(reg, a.seed, a.method, a.node_budget)
    pts = Sampler(cfg).batch(a.m, make_rng(a.seed), check=a.check)
    if a.dump:
        meta = dump_samples(a.dump, pts, cfg)
        _progress(a, f"wrote {len(pts)} points to {a.dump} (metadata {meta})")
        return EXIT_OK
    lines = [",".join(f"i{k + 1}" for k in range(reg.r))]
    lines += [",".join(str(int(x)) for x in row) for row in pts.tolist()]
    _emit(a, "\n".join(lines))
    return EXIT_OK


def cmd_gcd_dist(a) -> int:
    if a.n is not None:
        if a.l is None:
            raise UsageError("--l is required with --n")
        reg = RegionSpec(a.l, a.r, a.n)
        return _emit_reports(a, [experiments.gcd_limit_gate(reg, m=a.m, seed=a.seed)])
    rows = [{"m": k, "pmf": limits.gcd_limit_pmf(a.r, k)} for k in range(1, a.mmax + 1)]
    tail = limits.gcd_limit_pmf_tail(a.r, a.mmax)
    if a.format == "json":
        _emit(a, json.dumps({"r": a.r, "pmf": rows, "tail_bound": tail}, sort_keys=True))
    else:
        _emit(a, "m,pmf\n" + "\n".join(f"{x['m']},{x['pmf']!r}" for x in rows))
    return EXIT_OK


def _model(a) -> limits.LimitModel:
    return limits.LimitModel(a.P, a.J, a.eps)


def cmd_lcm_moment(a) -> int:
    if a.ns:
        if a.l is None:
            raise UsageError("--l is required with --ns")
        regs = [RegionSpec(a.l, a.r, n) for n in a.ns]
        rep = experiments.lcm_moment_gate(regs, a.beta, m=a.m, seed=a.seed, model=_model(a))
        return _emit_reports(a, [rep])
    value, err = limits.lcm_ratio_moment(a.r, a.beta, _model(a))
    return _emit_value(a, {"r": a.r, "beta": a.beta, "value": value, "error_bound": err,
                           "P": a.P, "J": a.J}, f"{value!r} +/- {err:.3e}")


def cmd_volume(a) -> int:
    v = limits.volume(a.l, a.r, a.n, threads=a.threads)
    payload = {"l": v.ell, "r": v.r, "value": v.value, "lower_bound": v.lower_bound, "n": v.n,
               "error": v.error, "exact": str(v.exact) if v.exact is not None else None}
    return _emit_value(a, payload, v.value)


def cmd_u_cdf(a) -> int:
    value = limits.u_cdf(a.l, a.r, a.x, a.n)
    law = limits.ProductLimitLaw(a.l, a.r, a.n)
    return _emit_value(a, {"l": a.l, "r": a.r, "x": str(a.x), "cdf": value, "x_star": law.support_end,
                           "representation": law.representation}, value)


def cmd_spacings(a) -> int:
    if a.n is not None:
        return _emit_reports(a, [experiments.logcoord_ks_gate(a.r, a.n, a.m, seed=a.seed)])
    if a.x is None:
        raise UsageError("give --x (marginal CDF) or --n (KS gate)")
    value = limits.spacing_marginal_cdf(a.r, float(a.x))
    return _emit_value(a, {"r": a.r, "x": str(a.x), "cdf": value}, value)


def cmd_hypersum(a) -> int:
    reg = _region(a)
    if a.f == "table":
        if not a.table:
            raise UsageError("--f table needs --table FILE")
        f = ArithmeticFunction.from_table_file(a.table)
    else:
        f = ArithmeticFunction(a.f, beta=a.beta if a.f == "power" else None)
    res = experiments.hypersum(reg, f, a.mode, m=a.m if a.sampled else None, seed=a.seed,
                               node_budget=a.node_budget)
    value = res.value if isinstance(res.value, int) else float(res.value)
    payload = {"l": reg.ell, "r": reg.r, "n": reg.n, "f": a.f, "mode": a.mode, "sum": value,
               "count": res.count, "mean": res.mean, "stderr": res.stderr, "exact": res.exact}
    return _emit_value(a, payload, value)


def cmd_verify(a) -> int:
    only = a.criteria or None
    results, doc = acceptance.run_suite(quick=a.quick, seed=a.seed, only=only,
                                        log=None if a.quiet else sys.stderr)
    if a.out:
        with open(a.out, "w", encoding="utf-8") as fh:
            fh.write(doc)
    table = [f"{'#':>3}  {'result':6}  criterion"]
    table += [f"{r.number:>3}  {'PASS' if r.passed else 'FAIL':6}  {r.title}" for r in results]
    print("\n".join(table))
    return EXIT_OK if all(r.passed for r in results) else EXIT_GATE


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hyperlat", description="Lattice points under elementary symmetric polynomials.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--l", type=_int, help="order of the symmetric polynomial")
    common.add_argument("--r", type=_int, help="dimension")
    common.add_argument("--n", type=_int, help="threshold")
    common.add_argument("--seed", type=_int, default=None)
    common.add_argument("--m", type=_int, default=None, help="number of draws")
    common.add_argument("--out", help="write results to this file")
    common.add_argument("--format", choices=("text", "json", "csv"), default=None)
    common.add_argument("--cache-dir", default=None)
    common.add_argument("--node-budget", type=_int, default=None)
    common.add_argument("--threads", type=_int, default=None)
    common.add_argument("--quiet", action="store_true", help="no progress on stderr")
    common.add_argument("--P", type=_int, default=10**5, help="prime cutoff")
    common.add_argument("--J", type=_int, default=40, help="exponent cap")
    common.add_argument("--eps", type=float, default=1e-6, help="tolerance")

    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    s = sub.add_parser("count", parents=[common], help="exact |H(l, r, n)|")
    s.add_argument("--cap", type=_frac, default=None, help="exact bound on the coordinate product")
    s.add_argument("--method", choices=("auto", "formula", "vector", "dfs", "orbit"), default="auto")
    s.set_defaults(func=cmd_count)

    s = sub.add_parser("count-scaled", parents=[common], help="count with scaled coordinates")
    s.add_argument("--t", type=_frac_list, default=None, help="comma-separated positive rationals")
    s.add_argument("--mu", type=_int_list, default=None, help="comma-separated divisors")
    s.add_argument("--method", choices=("auto", "vector", "dfs", "orbit"), default="auto")
    s.set_defaults(func=cmd_count_scaled)

    s = sub.add_parser("sample", parents=[common], help="exact uniform draws")
    s.add_argument("--method", choices=("conditional-count", "rejection"), default="conditional-count")
    s.add_argument("--dump", help="CSV file (a .json metadata file is written next to it)")
    s.add_argument("--check", action="store_true", help="assert membership of every draw")
    s.set_defaults(func=cmd_sample, m_default=10)

    s = sub.add_parser("gcd-dist", parents=[common], help="GCD limit pmf, or its gate with --n")
    s.add_argument("--mmax", type=_int, default=10)
    s.set_defaults(func=cmd_gcd_dist)

    s = sub.add_parser("lcm-moment", parents=[common], help="LCM ratio moments, or the moment gate with --ns")
    s.add_argument("--beta", type=float, default=1.0)
    s.add_argument("--ns", type=_int_list, default=None, help="comma-separated thresholds for the gate")
    s.set_defaults(func=cmd_lcm_moment, m_default=10**5)

    s = sub.add_parser("volume", parents=[common], help="volume estimate")
    s.set_defaults(func=cmd_volume)

    s = sub.add_parser("u-cdf", parents=[common], help="CDF of the product limit law")
    s.add_argument("--x", type=_frac, required=True)
    s.set_defaults(func=cmd_u_cdf)

    s = sub.add_parser("spacings", parents=[common], help="spacing marginal CDF, or the KS gate with --n")
    s.add_argument("--x", type=_frac, default=None)
    s.set_defaults(func=cmd_spacings, m_default=10**5)

    s = sub.add_parser("hypersum", parents=[common], help="sum of f(GCD) or f(LCM) over a region")
    s.add_argument("--f", choices=ArithmeticFunction.KINDS, default="identity")
    s.add_argument("--beta", type=float, default=1.0)
    s.add_argument("--table", help="file of 'k value' lines for --f table")
    s.add_argument("--mode", choices=("GCD", "LCM"), default="GCD")
    s.add_argument("--sampled", action="store_true", help="estimate from --m draws")
    s.set_defaults(func=cmd_hypersum, m_default=10**5)

    s = sub.add_parser("verify", parents=[common], help="run the acceptance suite")
    s.add_argument("--quick", action="store_true", help="fast deterministic subset")
    s.add_argument("--criteria", type=_int_list, default=None, help="comma-separated criterion numbers")
    s.set_defaults(func=cmd_verify)
    return p


def _resolve(a) -> None:
    if a.seed is None:
        a.seed = _env("SEED", int, acceptance.DEFAULT_SEED if a.cmd == "verify" else 0)
    if a.threads is None:
        a.threads = _env("THREADS", int, 1)
    if a.cache_dir is None:
        a.cache_dir = _env("CACHE_DIR", str, None)
    if a.node_budget is None:
        a.node_budget = _env("NODE_BUDGET", int, DEFAULT_NODE_BUDGET)
    if a.format is None:
        a.format = _env("FORMAT", str, "text")
    if a.m is None:
        a.m = getattr(a, "m_default", None)
    if a.threads < 1:
        raise UsageError("--threads must be >= 1")
    if a.node_budget < 1:
        raise UsageError("--node-budget must be >= 1")
    if a.m is not None and a.m < 0:
        raise UsageError("--m must be >= 0")
    if not 0 <= a.seed < 1 << 64:
        raise UsageError("--seed must be a 64-bit unsigned integer")
    if a.cmd in ("volume", "u-cdf", "gcd-dist", "lcm-moment", "spacings") and a.r is None:
        raise UsageError("--r is required")
    if a.cmd in ("volume", "u-cdf") and a.l is None:
        raise UsageError("--l is required")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    try:
        _resolve(a)
        return a.func(a)
    except (UsageError, ValueError) as exc:
        print(f"hyperlat: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BudgetExceeded, OverflowError, MemoryError, ArithmeticError) as exc:
        print(f"hyperlat: computation failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
