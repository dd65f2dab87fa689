"""Finite-n statistics of hyperbolic regions compared against their limit laws.

Each gate returns an :class:`ExperimentReport`; the verdict is ``pass`` iff
the error statistic is at most the tolerance.  Reports are pure functions of
their inputs and seed, so their JSON is byte-stable.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import stats as _st

from .arithmetics import gcd_rows, lcm_rows
from .counting import (RegionSpec, count, count_box, count_with_divisibility,
                       enumerate_points, iroot)
from .limits import (LimitModel, ProductLimitLaw, gcd_limit_pmf, lcm_ratio_moment,
                     spacing_marginal_cdf, zeta)
from .sampling import RNG_ID, Sampler, SamplerConfig, log_coords, make_rng
from .stats import ks_statistic, ks_statistic_grid

SIGNIFICANCE = 1e-3
CSV_COLUMNS = ["experiment", "l", "r", "n", "m", "target", "empirical", "stat", "tol", "verdict"]


# ---------------------------------------------------------------------------
# arithmetic functions


@dataclass(frozen=True)
class ArithmeticFunction:
    """Real-valued ``f`` on the positive integers.

    ``kind`` is one of ``identity``, ``power``, ``log``, ``indicator_of_one``
    and ``table``.  ``index`` is the regular-variation index where defined.
    """

    kind: str
    beta: Optional[float] = None
    table: Optional[tuple[tuple[int, float], ...]] = None

    KINDS = ("identity", "power", "log", "indicator_of_one", "table")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.kind == "power" and self.beta is None:
            raise ValueError("power needs beta")
        if self.kind == "table" and not self.table:
            raise ValueError("table needs values")

    @classmethod
    def from_table_file(cls, path) -> "ArithmeticFunction":
        """Read ``k value`` pairs (whitespace or comma separated), one per line."""
        pairs = []
        for line in Path(path).read_text().splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                k, v = line.replace(",", " ").split()[:2]
                pairs.append((int(k), float(v)))
        return cls("table", table=tuple(sorted(pairs)))

    @property
    def index(self) -> Optional[float]:
        return {"identity": 1.0, "power": self.beta, "log": 0.0}.get(self.kind)

    @property
    def integer_valued(self) -> bool:
        return self.kind in ("identity", "indicator_of_one")

    def __call__(self, x):
        x = np.asarray(x)
        if self.kind == "identity":
            return x
        if self.kind == "indicator_of_one":
            return (x == 1).astype(np.int64)
        xf = x.astype(np.float64)
        if self.kind == "power":
            return xf ** self.beta
        if self.kind == "log":
            return np.log(xf)
        keys = np.array([k for k, _ in self.table], dtype=np.int64)
        vals = np.array([v for _, v in self.table], dtype=np.float64)
        if x.dtype == object:
            x = x.astype(np.float64)
        idx = np.searchsorted(keys, x)
        idx_c = np.minimum(idx, len(keys) - 1)
        if (keys[idx_c] != x).any():
            missing = x[keys[idx_c] != x].ravel()[0]
            raise ValueError(f"f is not tabulated at {int(missing)}")
        return vals[idx_c]


# ---------------------------------------------------------------------------
# reports


@dataclass
class ExperimentReport:
    experiment: str
    ell: int
    r: int
    n: int
    m: Optional[int]
    exact: bool
    seed: Optional[int]
    target: float
    target_source: str
    empirical: float
    stat_kind: str
    stat: float
    tol: float
    verdict: str = field(init=False)
    extra: dict = field(default_factory=dict)
    rng: str = RNG_ID

    def __post_init__(self):
        self.verdict = "pass" if self.stat <= self.tol else "fail"

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["l"] = d.pop("ell")
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def csv_row(self) -> list:
        return [self.experiment, self.ell, self.r, self.n, self.m if self.m is not None else "",
                repr(self.target), repr(self.empirical), repr(self.stat), repr(self.tol), self.verdict]


def reports_to_csv(reports: Sequence[ExperimentReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rep in reports:
        w.writerow(rep.csv_row())
    return buf.getvalue()


# ---------------------------------------------------------------------------
# hyperbolic sums


@dataclass(frozen=True)
class HypersumResult:
    value: float | int
    count: int
    stderr: float = 0.0
    exact: bool = True

    @property
    def mean(self) -> float:
        if isinstance(self.value, int):
            return float(Fraction(self.value, self.count))
        return self.value / self.count


def _reduce(points: np.ndarray, mode: str) -> np.ndarray:
    if mode == "GCD":
        return gcd_rows(points)
    if mode == "LCM":
        return lcm_rows(points)
    raise ValueError("mode must be GCD or LCM")


def _exact_sum(values) -> int:
    values = np.asarray(values)
    if values.dtype != object and len(values) and int(np.abs(values).max()) * len(values) < 1 << 62:
        return int(values.sum())
    return sum(int(v) for v in values.tolist())


def hypersum(region: RegionSpec, f: ArithmeticFunction, mode: str = "GCD", *,
             m: Optional[int] = None, seed: int = 0, node_budget: int = 10**9) -> HypersumResult:
    """Sum of ``f(GCD)`` or ``f(LCM)`` over the region.

    With ``m`` given, the sum is estimated as ``|H| * mean`` over ``m`` exact
    uniform draws, with its standard error.
    """
    if m is None:
        total, acc = 0, (0 if f.integer_valued else 0.0)
        for pts in enumerate_points(region, node_budget=node_budget):
            vals = f(_reduce(pts, mode))
            total += len(pts)
            acc += _exact_sum(vals) if f.integer_valued else math.fsum(np.asarray(vals, dtype=np.float64))
        return HypersumResult(acc, total, 0.0, True)
    s = Sampler(SamplerConfig(region, seed, node_budget=node_budget))
    pts = s.batch(m, make_rng(seed))
    vals = np.asarray(f(_reduce(pts, mode)), dtype=np.float64)
    H = s.total
    return HypersumResult(H * float(vals.mean()), H, H * float(vals.std(ddof=1)) / math.sqrt(m) if m > 1 else math.inf, False)


# ---------------------------------------------------------------------------
# gates


def _draw(region: RegionSpec, m: int, seed: int, stream: int = 0) -> np.ndarray:
    return Sampler(SamplerConfig(region, seed)).batch(m, make_rng(seed, stream))


def gcd_limit_target(r: int, f: ArithmeticFunction, M: int = 10**5) -> float:
    """``sum_m f(m) m^-r / zeta(r)``, truncated at ``M`` (bounded ``f``)."""
    if f.kind == "indicator_of_one":
        return 1.0 / zeta(r)
    k = np.arange(1, M + 1)
    return math.fsum(np.asarray(f(k), dtype=np.float64) * k.astype(np.float64) ** -r) / zeta(r)


def gcd_limit_gate(region: RegionSpec, f: ArithmeticFunction = ArithmeticFunction("indicator_of_one"),
                   *, m: Optional[int] = None, seed: int = 0, tol: Optional[float] = None) -> ExperimentReport:
    """Average of ``f(GCD)`` against the limit law.

    Exact mode: the statistic is the relative error (default tolerance 5%).
    Sampled mode: the statistic is a z-score (default tolerance 4).
    """
    target = gcd_limit_target(region.r, f)
    hs = hypersum(region, f, "GCD", m=m, seed=seed)
    emp = hs.mean
    if m is None:
        stat, kind = abs(emp - target) / abs(target), "relative_error"
        tol = 0.05 if tol is None else tol
    else:
        se = hs.stderr / hs.count
        stat, kind = abs(emp - target) / se, "z_score"
        tol = 4.0 if tol is None else tol
    return ExperimentReport("gcd_limit", region.ell, region.r, region.n, m, m is None, None if m is None else seed,
                            target, f"sum_m f(m) m^-{region.r} / zeta({region.r})", emp, kind, stat, tol,
                            extra={"f": f.kind, "count": hs.count})


def lcm_moment_gate(regions: Sequence[RegionSpec], beta: float = 1.0, *, m: int = 10**5, seed: int = 0,
                    tol: float = 0.08, model: LimitModel = LimitModel()) -> ExperimentReport:
    """Sampled ``E[(LCM / n^{r/l})^beta]`` along ``regions`` against ``E[U^beta] E[L^beta]``.

    The verdict uses the last region; relative errors along the sequence are
    reported with a flag telling whether they decrease.
    """
    last = regions[-1]
    if any((g.ell, g.r) != (last.ell, last.r) for g in regions):
        raise ValueError("all regions must share l and r")
    law = ProductLimitLaw(last.ell, last.r)
    lm, lm_err = lcm_ratio_moment(last.r, beta, model)
    target = law.moment(beta) * lm
    errs, means, ses = [], [], []
    for k, reg in enumerate(regions):
        pts = _draw(reg, m, seed, stream=k)
        norm = float(reg.n) ** (reg.r / reg.ell)
        vals = np.array([float(x) for x in lcm_rows(pts).tolist()]) / norm
        vals = vals ** beta
        means.append(float(vals.mean()))
        ses.append(float(vals.std(ddof=1) / math.sqrt(m)))
        errs.append(abs(means[-1] - target) / target)
    monotone = all(a > b for a, b in zip(errs, errs[1:]))
    return ExperimentReport("lcm_moment", last.ell, last.r, last.n, m, False, seed, target,
                            f"E[U^{beta}] * E[L^{beta}] (lcm-ratio moment +/- {lm_err:.1e})",
                            means[-1], "relative_error", errs[-1], tol,
                            extra={"ns": [g.n for g in regions], "means": means, "stderrs": ses,
                                   "errors": errs, "monotone": monotone, "beta": beta})


def product_ks_gate(region: RegionSpec, m: int = 10**5, *, seed: int = 0, tol: float = 0.05,
                    grid: int = 200) -> ExperimentReport:
    """KS distance of ``prod(V) / n^{r/l}`` to the product limit law.

    Lattice-approximated laws are compared on ``grid`` points only.
    """
    pts = _draw(region, m, seed)
    norm_exp = region.r / region.ell
    logs = np.log(pts.astype(np.float64)).sum(axis=1) - norm_exp * math.log(region.n)
    x = np.exp(logs)
    law = ProductLimitLaw(region.ell, region.r)
    if law.representation == "closed-form-uniform":
        stat = ks_statistic(x, lambda t: np.clip(t, 0, 1))
    elif law.representation == "closed-form-u12":
        stat = ks_statistic(x, lambda t: law.cdf(min(max(t, 0.0), 0.25)))
    else:
        g = np.linspace(0, law.support_end, grid + 1)[1:]
        stat = ks_statistic_grid(x, g, law.cdf_vec(g))
    return ExperimentReport("product_ks", region.ell, region.r, region.n, m, False, seed, 0.0,
                            f"product limit law ({law.representation})", stat, "ks", stat, tol,
                            extra={"note": law.note()})


def logcoord_ks_gate(r: int, n: int, m: int = 10**5, *, seed: int = 0, tol: float = 0.05) -> ExperimentReport:
    """KS distances of ``log V_1 / log n`` (spacing law) and of the cumulative
    ``log(V_1 ... V_k) / log n`` (order statistics of ``r - 1`` uniforms)."""
    region = RegionSpec(r, r, n)
    pts = _draw(region, m, seed)
    lc = log_coords(pts, n)
    marginal = ks_statistic(lc[:, 0], lambda t: 1.0 - (1.0 - np.clip(t, 0, 1)) ** (r - 1))
    cum = np.cumsum(lc, axis=1)
    order_stats = [ks_statistic(cum[:, k - 1], lambda t, k=k: _st.beta.cdf(t, k, r - k)) for k in range(1, r)]
    stat = max([marginal] + order_stats)
    return ExperimentReport("logcoord_ks", r, r, n, m, False, seed, 0.0,
                            f"spacing marginal 1-(1-x)^{r - 1}; order statistics Beta(k, {r}-k)",
                            marginal, "ks", stat, tol,
                            extra={"marginal_ks": marginal, "cumulative_ks": order_stats,
                                   "atom_at_zero": float((pts[:, 0] == 1).mean())})


def valuation_gate(region: RegionSpec, primes: Sequence[int], exponents: Sequence[Sequence[int]],
                   *, tol: float = 0.05) -> ExperimentReport:
    """Exact density of ``{p_t^{j_{k,t}} | i_k}`` in the region against ``prod_k mu_k^-1``.

    ``exponents[k][t]`` is the exponent of ``primes[t]`` required in coordinate ``k``.
    """
    if len(exponents) != region.r or any(len(e) != len(primes) for e in exponents):
        raise ValueError("exponents must be an r x len(primes) table")
    mu = [math.prod(p ** j for p, j in zip(primes, row)) for row in exponents]
    total = count(region)
    hit = count_with_divisibility(region, mu)
    emp = hit / total
    target = 1.0 / math.prod(mu)
    return ExperimentReport("valuation", region.ell, region.r, region.n, None, True, None, target,
                            "prod_k mu_k^-1", emp, "relative_error", abs(emp - target) / target, tol,
                            extra={"mu": mu, "count": total, "hits": hit})


def _box_bounds(alpha: Sequence, n: int, ell: int) -> list[int]:
    """``floor(alpha_k n^{1/l})`` exactly for rational ``alpha_k``."""
    out = []
    for a in alpha:
        a = Fraction(a)
        out.append(iroot((a.numerator ** ell * n) // a.denominator ** ell, ell))
    return out


def joint_cdf_gate(ell: int, r: int, n: int, alpha: Sequence, *, m: int = 10**5, seed: int = 0,
                   reference_n: Optional[int] = None, tol: float = 4.0) -> ExperimentReport:
    """Empirical ``P{V_k <= alpha_k n^{1/l} for all k}`` against the same box
    probability counted exactly at ``reference_n``.

    The statistic divides the gap by ``sqrt(se^2 + bias^2)``, where ``bias`` is
    the exact change of the box probability between ``n`` and ``reference_n``.
    """
    if not 1 <= ell < r:
        raise ValueError("the joint CDF gate needs 1 <= l < r")
    region = RegionSpec(ell, r, n)
    ref = reference_n or 16 * n
    box_ref = _box_bounds(alpha, ref, ell)
    target = count_box(RegionSpec(ell, r, ref), box_ref) / count(RegionSpec(ell, r, ref))
    box_n = _box_bounds(alpha, n, ell)
    at_n = count_box(region, box_n) / count(region)
    pts = _draw(region, m, seed)
    emp = float((pts.astype(np.float64) <= np.array(box_n, dtype=np.float64)).all(axis=1).mean())
    se = math.sqrt(max(target * (1 - target), 1e-12) / m)
    bias = abs(at_n - target)
    return ExperimentReport("joint_cdf", ell, r, n, m, False, seed, target,
                            f"box probability counted at n={ref}", emp, "z_score",
                            abs(emp - target) / math.hypot(se, bias), tol,
                            extra={"alpha": [str(Fraction(a)) for a in alpha], "exact_at_n": at_n, "bias": bias})
