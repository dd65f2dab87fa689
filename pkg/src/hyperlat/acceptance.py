"""The acceptance suite: one function per criterion, each with its pinned tolerance.

Every check returns a :class:`CriterionResult`.  ``run_suite`` collects them
into a deterministic JSON-serializable report (no timings, fixed seeds).
"""

from __future__ import annotations

import itertools
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from math import comb
from typing import Callable, Optional

import numpy as np

from .arithmetics import factorize, gcd_rows
from .counting import RegionSpec, count, divisor_count, enumerate_points
from .experiments import (ArithmeticFunction, gcd_limit_gate, lcm_moment_gate, logcoord_ks_gate,
                          product_ks_gate, valuation_gate)
from .limits import (V23_HAT, LimitModel, gcd_limit_mellin, gcd_limit_pmf, lcm_ratio_moment,
                     volume, x_star, zeta, zeta_with_error)
from .sampling import RNG_ID, Sampler, SamplerConfig, make_rng
from .stats import chi_square, merge_cells

DEFAULT_SEED = 20240611
QUICK = (1, 2, 3, 4, 7, 9, 10, 14)


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    values: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# independent oracles


def _p(ell: int, xs: list) -> object:
    """``e_ell`` by summing products over all ``ell``-subsets (arrays allowed)."""
    return sum(math.prod(c) for c in itertools.combinations(xs, ell))


def brute_force_counts(ell: int, r: int, nmax: int) -> np.ndarray:
    """``out[n] = |H(l, r, n)|`` for ``n = 0..nmax`` by walking the box ``[1, nmax]^r``.

    The walk abandons a coordinate value as soon as the point with all later
    coordinates equal to 1 exceeds ``nmax``; the last two coordinates are a
    numpy grid whose values are histogrammed.
    """
    hist = np.zeros(nmax + 1, dtype=np.int64)
    if r == 1:
        hist[1:] = 1
        return np.cumsum(hist)

    def largest(prefix: list, slots: int) -> int:
        a = 0
        while a < nmax and _p(ell, prefix + [a + 1] + [1] * (slots - 1)) <= nmax:
            a += 1
        return a

    def rec(prefix: list):
        slots = r - len(prefix)
        if slots == 2:
            a = largest(prefix, 2)
            if a == 0:
                return
            g = np.arange(1, a + 1, dtype=np.int64)
            x, y = np.meshgrid(g, g, indexing="ij")
            vals = _p(ell, [np.int64(v) for v in prefix] + [x, y])
            vals = np.asarray(vals).ravel()
            hist[:] += np.bincount(vals[vals <= nmax], minlength=nmax + 1)[: nmax + 1]
            return
        for v in range(1, largest(prefix, slots) + 1):
            rec(prefix + [v])

    rec([])
    return np.cumsum(hist)


def plain_divisor_tables(nmax: int, rmax: int) -> list[np.ndarray]:
    """``W[r][n]`` from ``W_r(n) = sum_{i<=n} W_{r-1}(n // i)`` term by term."""
    W = [None, np.arange(nmax + 1, dtype=np.int64)]
    for _ in range(2, rmax + 1):
        prev = W[-1]
        cur = np.zeros(nmax + 1, dtype=np.int64)
        for n in range(1, nmax + 1):
            cur[n] = prev[n // np.arange(1, n + 1)].sum()
        W.append(cur)
    return W


def composition_counts(r: int, nmax: int) -> np.ndarray:
    """``#{i in N^r : sum(i) <= n}`` for all ``n`` by repeated convolution."""
    one = np.zeros(nmax + 1, dtype=object)
    one[1:] = 1
    exact = np.zeros(nmax + 1, dtype=object)
    exact[0] = 1
    for _ in range(r):
        exact = np.convolve(exact, one)[: nmax + 1]
    return np.cumsum(exact)


def inverse_gcd_mean(n: int) -> float:
    """Exact ``E[1/gcd(V_1, V_2)]`` over H(2, 2, n).

    Grouping points by ``k`` with ``k^2 | (i, j)`` gives
    ``sum_k W_2(n // k^2) * prod_{p | k} (1 - p) / k``.
    """
    total = Fraction(0)
    for k in range(1, math.isqrt(n) + 1):
        total += Fraction(math.prod(1 - p for p, _ in factorize(k)), k) * divisor_count(2, n // (k * k))
    return float(total / divisor_count(2, n))


# ---------------------------------------------------------------------------
# criteria


def c1_counting_oracle(seed: int) -> CriterionResult:
    nmax, mismatches, checked = 200, [], 0
    for r in range(1, 5):
        for ell in range(1, r + 1):
            ref = brute_force_counts(ell, r, nmax)
            for n in range(nmax + 1):
                checked += 1
                got = count(RegionSpec(ell, r, n))
                if got != ref[n]:
                    mismatches.append([ell, r, n, got, int(ref[n])])
    return CriterionResult(1, "exact counts agree with box enumeration (r<=4, n<=200)", not mismatches,
                           {"checked": checked, "mismatches": mismatches[:10]})


def c2_binomial(seed: int) -> CriterionResult:
    bad = []
    for r in range(1, 7):
        ref = composition_counts(r, 60)
        for n in range(61):
            vals = {count(RegionSpec(1, r, n)), comb(n, r), int(ref[n])}
            if r <= 4:
                vals.add(count(RegionSpec(1, r, n), method="vector"))
            if len(vals) != 1:
                bad.append([r, n])
    return CriterionResult(2, "count(1, r, n) = C(n, r) for r<=6, n<=60", not bad, {"mismatches": bad})


def c3_divisor_recursion(seed: int) -> CriterionResult:
    nmax = 10**4
    W = plain_divisor_tables(nmax, 3)
    bad = [[r, n] for r in (1, 2, 3) for n in range(nmax + 1) if divisor_count(r, n) != W[r][n]]
    t = time.perf_counter()
    big = count(RegionSpec(2, 2, 10**8))
    secs = time.perf_counter() - t
    return CriterionResult(3, "grouped divisor recursion equals plain recursion; W_2(1e8) under 1 s",
                           not bad and secs < 1.0,
                           {"mismatches": bad[:10], "W2(1e8)": big, "under_one_second": secs < 1.0})


def c4_divisor_growth(seed: int) -> CriterionResult:
    ns = [10**3, 10**4, 10**5, 10**6]
    r2 = [count(RegionSpec(2, 2, n)) / (n * math.log(n)) for n in ns]
    r3 = [count(RegionSpec(3, 3, n)) / (n * math.log(n) ** 2 / 2) for n in ns]
    e3 = [abs(x - 1) for x in r3]
    ok = 0.95 <= r2[-1] <= 1.05 and e3[-1] <= 0.25 and all(a > b for a, b in zip(e3, e3[1:]))
    return CriterionResult(4, "divisor-region growth n log^{r-1} n / (r-1)!", ok,
                           {"ratio_r2": r2, "ratio_r3": r3, "error_r3": e3})


def c5_volume(seed: int) -> CriterionResult:
    v1 = volume(2, 3, 10**6, estimate_error=False)
    v4 = volume(2, 3, 4 * 10**6, estimate_error=False)
    rel = abs(v1.value - v4.value) / abs(v4.value)
    frozen = Fraction(count(RegionSpec(2, 3, 4 * 10**6)), 8 * 10**9) == V23_HAT
    vols = {"V12": volume(1, 2).exact, "V13": volume(1, 3).exact}
    ok = (rel <= 5e-3 and frozen and vols["V12"] == Fraction(1, 2) and vols["V13"] == Fraction(1, 6)
          and vols["V12"] <= 1 and v4.value <= 4)
    return CriterionResult(5, "volume estimates agree to 3 significant digits", ok,
                           {"V23(1e6)": v1.value, "V23(4e6)": v4.value, "relative_gap": rel,
                            "frozen_matches": frozen, "V12": str(vols["V12"]), "V13": str(vols["V13"])})


def c6_gcd_limit(seed: int) -> CriterionResult:
    exact = gcd_limit_gate(RegionSpec(2, 2, 10**6))
    sampled = gcd_limit_gate(RegionSpec(2, 3, 10**6), m=10**5, seed=seed)
    return CriterionResult(6, "coprimality frequency against 1/zeta(r)", exact.passed and sampled.passed,
                           {"exact_mean": exact.empirical, "exact_relative_error": exact.stat,
                            "sampled_mean": sampled.empirical, "sampled_z": sampled.stat})


def c7_sampler_chi2(seed: int) -> CriterionResult:
    n, m = 1000, 10**6
    s = Sampler(SamplerConfig(RegionSpec(2, 2, n), seed))
    pts = s.batch(m, make_rng(seed))
    exact = s.first_marginal_counts().astype(np.float64)
    expected = exact / s.total * m
    observed = np.bincount(pts[:, 0].astype(np.int64) - 1, minlength=n).astype(np.float64)
    labels = merge_cells(expected)
    stat, p = chi_square(np.bincount(labels, weights=observed), np.bincount(labels, weights=expected))
    return CriterionResult(7, "sampler first-coordinate marginal chi-square", p >= 1e-3,
                           {"statistic": stat, "p_value": p, "cells": int(labels.max()) + 1})


def c8_product_limit(seed: int) -> CriterionResult:
    a = product_ks_gate(RegionSpec(2, 2, 10**6), 10**5, seed=seed, tol=0.05)
    b = product_ks_gate(RegionSpec(1, 2, 10**4), 10**5, seed=seed, tol=0.02)
    return CriterionResult(8, "product law KS distances", a.passed and b.passed,
                           {"ks_uniform": a.stat, "ks_u12": b.stat})


def c9_support(seed: int) -> CriterionResult:
    n = 10**5
    c = comb(3, 2) ** 3  # (prod)^2 <= x*^2 n^3  <=>  27 prod^2 <= n^3
    worst, violations = 0, 0
    for pts in enumerate_points(RegionSpec(2, 3, n)):
        p = pts.prod(axis=1)
        violations += int((c * p * p > n**3).sum())
        worst = max(worst, int(p.max()))
    norm = worst / n**1.5
    return CriterionResult(9, "bounded support of the normalized product", violations == 0 and norm >= 0.9 * x_star(2, 3),
                           {"violations": violations, "max_normalized": norm, "x_star": x_star(2, 3)})


def c10_mellin(seed: int) -> CriterionResult:
    M, s, r = 10**4, 0.5, 2
    k = np.arange(1, M + 1, dtype=np.float64)
    partial = math.fsum(k ** s * k ** -r) / zeta(r)
    # tail sum_{k>M} k^{-3/2} bracketed by integrals (convex decreasing terms)
    e = r - s
    lo = ((M + 1) ** (1 - e) / (e - 1) + 0.5 * (M + 1) ** -e) / zeta(r)
    hi = (M + 0.5) ** (1 - e) / (e - 1) / zeta(r)
    target = gcd_limit_mellin(r, s)
    zerr = zeta_with_error(r - s)[1] / zeta(r) + zeta_with_error(r)[1] * target
    gap = abs(partial + (lo + hi) / 2 - target)
    bound = (hi - lo) / 2 + zerr
    return CriterionResult(10, "Mellin transform against the pmf series", gap <= bound and bound <= 1e-3,
                           {"partial_sum": partial, "tail_low": lo, "tail_high": hi, "target": target,
                            "gap": gap, "bound": bound})


def c11_lcm_ratio(seed: int) -> CriterionResult:
    target = zeta(3) / zeta(2)
    val, err = lcm_ratio_moment(2, 1.0, LimitModel())
    s = Sampler(SamplerConfig(RegionSpec(2, 2, 10**8), seed))
    pts = s.batch(10**5, make_rng(seed))
    ratio = 1.0 / gcd_rows(pts).astype(np.float64)  # lcm / (v1 v2) = 1 / gcd
    mean, se = float(ratio.mean()), float(ratio.std(ddof=1) / math.sqrt(len(ratio)))
    z = abs(mean - target) / se
    finite = inverse_gcd_mean(10**8)
    ok = abs(val - target) <= err and err <= 1e-4 and z <= 4
    return CriterionResult(11, "LCM ratio moment for r = 2", ok,
                           {"moment": val, "error_bound": err, "target": target, "sample_mean": mean, "z": z,
                            "exact_mean_at_n": finite, "z_vs_exact_mean_at_n": abs(mean - finite) / se})


def c12_lcm_moment(seed: int) -> CriterionResult:
    rep = lcm_moment_gate([RegionSpec(2, 2, 10**k) for k in (4, 5, 6)], 1.0, m=10**5, seed=seed, tol=0.08)
    ok = rep.passed and rep.extra["monotone"]
    return CriterionResult(12, "E[LCM/n] against E[U] E[L]", ok,
                           {"means": rep.extra["means"], "errors": rep.extra["errors"],
                            "target": rep.target, "monotone": rep.extra["monotone"]})


def c13_spacings(seed: int) -> CriterionResult:
    a = logcoord_ks_gate(2, 10**6, 10**5, seed=seed)
    b = logcoord_ks_gate(3, 10**6, 10**5, seed=seed)
    ka, kb = a.extra["marginal_ks"], b.extra["marginal_ks"]
    return CriterionResult(13, "log-coordinate marginals against spacing laws", ka <= 0.05 and kb <= 0.05,
                           {"ks_r2": ka, "ks_r3": kb, "mass_at_zero_r2": a.extra["atom_at_zero"],
                            "mass_at_zero_r3": b.extra["atom_at_zero"]})


def c14_valuations(seed: int) -> CriterionResult:
    reg = RegionSpec(2, 3, 10**6)
    a = valuation_gate(reg, [2], [[1], [1], [1]])
    b = valuation_gate(reg, [3], [[1], [1], [1]])
    return CriterionResult(14, "divisibility densities", a.passed and b.passed,
                           {"ratio_2": a.empirical, "error_2": a.stat, "ratio_3": b.empirical, "error_3": b.stat})


CRITERIA: dict[int, Callable[[int], CriterionResult]] = {
    1: c1_counting_oracle, 2: c2_binomial, 3: c3_divisor_recursion, 4: c4_divisor_growth,
    5: c5_volume, 6: c6_gcd_limit, 7: c7_sampler_chi2, 8: c8_product_limit, 9: c9_support,
    10: c10_mellin, 11: c11_lcm_ratio, 12: c12_lcm_moment, 13: c13_spacings, 14: c14_valuations,
}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, Fraction):
        return str(x)
    return x


def report_json(results: list[CriterionResult], seed: int, quick: bool) -> str:
    doc = {"seed": seed, "rng": RNG_ID, "quick": quick,
           "criteria": [_jsonable(asdict(r)) for r in results]}
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def run_suite(quick: bool = False, seed: int = DEFAULT_SEED, only: Optional[list[int]] = None,
              log=sys.stderr) -> tuple[list[CriterionResult], str]:
    """Run the selected criteria; criterion 15 reruns the quick subset and compares bytes."""
    numbers = list(only) if only else (list(QUICK) + [15] if quick else list(range(1, 16)))
    results = []
    for k in numbers:
        if k == 15:
            continue
        t = time.perf_counter()
        res = CRITERIA[k](seed)
        if log is not None:
            print(f"[{k:2d}] {'PASS' if res.passed else 'FAIL'} {res.title} ({time.perf_counter() - t:.1f}s)",
                  file=log, flush=True)
        results.append(res)
    if 15 in numbers:
        results.append(c15_determinism(seed, log))
    return results, report_json(results, seed, quick)


def c15_determinism(seed: int, log=None) -> CriterionResult:
    sub = [k for k in QUICK if k != 1]  # the slow oracle sweep has no random input
    first = report_json([CRITERIA[k](seed) for k in sub], seed, True)
    second = report_json([CRITERIA[k](seed) for k in sub], seed, True)
    res = CriterionResult(15, "repeated runs give byte-identical reports", first == second,
                          {"criteria": sub, "bytes": len(first)})
    if log is not None:
        print(f"[15] {'PASS' if res.passed else 'FAIL'} {res.title}", file=log, flush=True)
    return res
