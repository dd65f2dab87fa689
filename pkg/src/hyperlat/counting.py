"""Exact cardinalities of discrete hyperbolic regions.

``H(l, r, n)`` is the set of positive integer r-vectors ``i`` with
``e_l(i) <= n``.  Three evaluation routes are used:

* ``l == 1``: ``|H| = C(n, r)`` (a point is an r-subset of ``{1..n}`` via its
  partial sums);
* ``l == r``: the divisor-type recursion ``W_r(n) = sum_i W_{r-1}(n // i)``,
  grouped by the O(sqrt n) distinct quotients and memoized;
* otherwise: exact enumeration with the vectorized engine in ``_engine``.

The scalar depth-first enumerator (``method="dfs"``) is the reference the
faster routes are tested against; ``method="orbit"`` is the same walk
restricted to weakly increasing representatives weighted by orbit size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from math import comb, factorial, isqrt
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from . import _engine
from ._engine import Budget, BudgetExceeded, Problem, iroot
from .cache import CountCache, make_key
from .sympoly import PrefixCoefficients, affine_bound, min_value

__all__ = [
    "BudgetExceeded",
    "DEFAULT_NODE_BUDGET",
    "RegionSpec",
    "asymptotic_count",
    "count",
    "count_box",
    "count_completions",
    "count_constrained",
    "count_scaled",
    "count_with_divisibility",
    "divisor_count",
    "enumerate_points",
    "iroot",
    "product_cap",
]

DEFAULT_NODE_BUDGET = 10**9
METHODS = ("auto", "formula", "vector", "dfs", "orbit")


@dataclass(frozen=True)
class RegionSpec:
    ell: int
    r: int
    n: int

    def __post_init__(self):
        if self.r < 1 or not 1 <= self.ell <= self.r:
            raise ValueError(f"need r >= 1 and 1 <= l <= r, got l={self.ell}, r={self.r}")
        if self.n < 0:
            raise ValueError("n must be nonnegative")

    @property
    def min_n(self) -> int:
        return min_value(self.ell, self.r)

    @property
    def nonempty(self) -> bool:
        return self.n >= self.min_n

    def exponent(self) -> Fraction:
        """Growth exponent ``r / l`` of the region's count."""
        return Fraction(self.r, self.ell)


# ---------------------------------------------------------------------------
# l == r: divisor recursion

_W: dict[tuple[int, int], int] = {}


def _w2(m: int) -> int:
    s = isqrt(m)
    if s > 64 and m < 1 << 60:
        return 2 * int((m // np.arange(1, s + 1, dtype=np.int64)).sum()) - s * s
    return 2 * sum(m // i for i in range(1, s + 1)) - s * s


def divisor_count(r: int, m: int) -> int:
    """``W_r(m) = #{i in N^r : i_1 ... i_r <= m}``."""
    if r < 0:
        raise ValueError("r must be >= 0")
    if m <= 0:
        return 0
    if r <= 1:
        return m if r else 1
    key = (r, m)
    val = _W.get(key)
    if val is not None:
        return val
    if r == 2:
        val = _w2(m)
    else:
        s = isqrt(m)
        val = sum(divisor_count(r - 1, m // i) for i in range(1, s + 1))
        for q in range(1, m // (s + 1) + 1):
            k = m // q - max(s, m // (q + 1))
            if k > 0:
                val += k * divisor_count(r - 1, q)
    _W[key] = val
    return val


# ---------------------------------------------------------------------------
# scalar reference walks


def _dfs_count(pb: Problem, budget: Budget, visit: Optional[Callable[[tuple], None]] = None) -> int:
    if not pb.start_feasible:
        return 0
    ell, r, scales = pb.ell, pb.r, pb.scales
    coords = [0] * r

    def rec(k: int, c: list[int], prod: int) -> int:
        vmax = affine_bound(c, pb.suffix_sym[k + 1], pb.N, scales[k])
        if pb.cap is not None:
            vmax = min(vmax, pb.cap // prod)
        if pb.box is not None and pb.box[k] is not None:
            vmax = min(vmax, pb.box[k])
        if vmax <= 0:
            return 0
        budget.spend(vmax)
        if k == r - 1:
            if visit is not None:
                for v in range(1, vmax + 1):
                    coords[k] = v
                    visit(tuple(coords))
            return vmax
        total = 0
        for v in range(1, vmax + 1):
            coords[k] = v
            z = scales[k] * v
            total += rec(k + 1, [1] + [c[j] + z * c[j - 1] for j in range(1, ell + 1)], prod * v)
        return total

    return rec(0, [1] + [0] * ell, 1)


def _orbit_count(pb: Problem, budget: Budget) -> int:
    """Count via weakly increasing representatives weighted by ``r!/prod(mult!)``."""
    if pb.box is not None or len(set(pb.scales)) > 1:
        raise ValueError("orbit mode needs a symmetric problem")
    if not pb.start_feasible:
        return 0
    ell, r, N, cap = pb.ell, pb.r, pb.N, pb.cap
    a = pb.scales[0]
    rfact = factorial(r)

    def feasible(c: list[int], k: int, w: int, prod: int) -> bool:
        # remaining r - k coordinates all equal to w (the smallest they may be)
        for _ in range(r - k):
            c = [1] + [c[j] + a * w * c[j - 1] for j in range(1, ell + 1)]
            prod *= w
        return c[ell] <= N and (cap is None or prod <= cap)

    def rec(k: int, c: list[int], prod: int, last: int, run: int, denom: int) -> int:
        if k == r - 1:
            xmax = affine_bound(c, pb.suffix_sym[r], N, a)
            if cap is not None:
                xmax = min(xmax, cap // prod)
            if xmax < last:
                return 0
            budget.spend(xmax - last + 1)
            return (xmax - last) * (rfact // denom) + rfact // (denom * (run + 1))
        total = 0
        v = last
        while feasible(c, k, v, prod):
            budget.spend(1)
            same = v == last
            c2 = [1] + [c[j] + a * v * c[j - 1] for j in range(1, ell + 1)]
            total += rec(k + 1, c2, prod * v, v,
                         run + 1 if same else 1, denom * (run + 1) if same else denom)
            v += 1
        return total

    if r == 1:
        return _dfs_count(pb, budget)
    return rec(0, [1] + [0] * ell, 1, 1, 0, 1)


def _run(pb: Problem, method: str, node_budget: int, threads: int,
         visit: Optional[Callable[[tuple], None]] = None) -> int:
    budget = Budget(node_budget)
    if visit is not None and method != "dfs":
        raise ValueError("point visitors need method='dfs'")
    if method == "dfs":
        return _dfs_count(pb, budget, visit)
    if method == "orbit":
        return _orbit_count(pb, budget)
    return _engine.count(pb, budget, threads)


def _check_method(method: str) -> None:
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def _cached(cache: Optional[CountCache], key: str, compute: Callable[[], int]) -> int:
    if cache is None:
        return compute()
    hit = cache.get(key)
    if hit is not None:
        return hit
    value = compute()
    cache.put(key, value)
    return value


# ---------------------------------------------------------------------------
# public counting API


def count(region: RegionSpec, *, method: str = "auto", node_budget: int = DEFAULT_NODE_BUDGET,
          threads: int = 1, cache: Optional[CountCache] = None,
          visit: Optional[Callable[[tuple], None]] = None) -> int:
    """Exact ``|H(l, r, n)|``.

    ``visit`` (with ``method="dfs"``) is called on every point, in
    lexicographic order; it is the hook for point-level invariant checks.
    """
    _check_method(method)
    ell, r, n = region.ell, region.r, region.n
    if method == "auto":
        method = "formula" if ell in (1, r) else "vector"
    if method == "formula" and ell not in (1, r):
        raise ValueError("closed formulas exist only for l == 1 and l == r")

    def compute() -> int:
        if method == "formula":
            return comb(n, r) if ell == 1 else divisor_count(r, n)
        return _run(Problem(ell, r, n, (1,) * r), method, node_budget, threads, visit)

    if visit is not None:
        return compute()
    return _cached(cache, make_key(ell, r, n), compute)


def _as_fraction(x) -> Fraction:
    f = Fraction(x) if not isinstance(x, str) else Fraction(x.strip())
    return f


def _clear(t: Sequence) -> tuple[tuple[int, ...], int]:
    """Integer numerators and the common denominator of positive rationals ``t``."""
    fr = [_as_fraction(x) for x in t]
    if any(x <= 0 for x in fr):
        raise ValueError("scale factors must be positive")
    d = reduce(math.lcm, (x.denominator for x in fr), 1)
    return tuple(int(x * d) for x in fr), d


def count_scaled(region: RegionSpec, t: Sequence, *, method: str = "auto",
                 node_budget: int = DEFAULT_NODE_BUDGET, threads: int = 1,
                 cache: Optional[CountCache] = None) -> int:
    """``#{i in N^r : e_l(t_1 i_1, ..., t_r i_r) <= n}`` for positive rationals ``t``."""
    _check_method(method)
    ell, r, n = region.ell, region.r, region.n
    if len(t) != r:
        raise ValueError(f"need {r} scale factors, got {len(t)}")
    a, d = _clear(t)
    N = n * d ** ell  # e_l(a i) / d^l <= n
    variant = "scaled=" + ",".join(str(_as_fraction(x)) for x in t)

    def compute() -> int:
        if method == "auto":
            if ell == r:
                # prod(a) prod(i) <= N
                return divisor_count(r, N // math.prod(a))
            if len(set(a)) == 1:
                # a^l e_l(i) <= N
                return count(RegionSpec(ell, r, N // a[0] ** ell))
        m = "vector" if method in ("auto", "formula") else method
        return _run(Problem(ell, r, N, a), m, node_budget, threads)

    return _cached(cache, make_key(ell, r, n, variant), compute)


def count_with_divisibility(region: RegionSpec, mu: Sequence[int], **kwargs) -> int:
    """Points of the region whose k-th coordinate is a multiple of ``mu[k]``."""
    if any(int(m) != m or m < 1 for m in mu):
        raise ValueError("divisors must be positive integers")
    # i_k = mu_k j_k
    return count_scaled(region, [int(m) for m in mu], **kwargs)


def product_cap(x, n: int, ell: int, r: int) -> int:
    """``floor(x * n**(r/l))`` exactly, for a nonnegative rational ``x``."""
    x = _as_fraction(x)
    if x < 0:
        raise ValueError("x must be nonnegative")
    # largest B with B^l <= x^l n^r
    return iroot((x.numerator ** ell * n ** r) // x.denominator ** ell, ell)


def count_constrained(region: RegionSpec, bound, *, method: str = "auto",
                      node_budget: int = DEFAULT_NODE_BUDGET, threads: int = 1,
                      cache: Optional[CountCache] = None) -> int:
    """``#{i : e_l(i) <= n, prod(i) <= bound}``; ``bound`` is an exact rational."""
    _check_method(method)
    ell, r, n = region.ell, region.r, region.n
    b = _as_fraction(bound)
    if b < 0:
        raise ValueError("product bound must be nonnegative")
    B = math.floor(b)

    def compute() -> int:
        if method == "auto" and ell == r:
            return divisor_count(r, min(n, B))
        m = "vector" if method in ("auto", "formula") else method
        return _run(Problem(ell, r, n, (1,) * r, cap=B), m, node_budget, threads)

    return _cached(cache, make_key(ell, r, n, f"cap={B}"), compute)


def count_box(region: RegionSpec, box: Sequence[Optional[int]], *, method: str = "vector",
              node_budget: int = DEFAULT_NODE_BUDGET) -> int:
    """Points of the region with ``i_k <= box[k]`` (``None`` leaves a coordinate free)."""
    _check_method(method)
    ell, r, n = region.ell, region.r, region.n
    if len(box) != r:
        raise ValueError(f"need {r} box bounds")
    if any(b is not None and b < 1 for b in box):
        return 0
    m = "vector" if method in ("auto", "formula") else method
    return _run(Problem(ell, r, n, (1,) * r, box=tuple(box)), m, node_budget, 1)


def count_completions(pc: PrefixCoefficients, remaining_dims: int, n: int,
                      cap_remainder: Optional[int] = None, *,
                      node_budget: int = DEFAULT_NODE_BUDGET) -> int:
    """Number of suffixes of length ``remaining_dims`` completing the prefix.

    The suffix ``s`` must satisfy ``sum_j c_j e_{l-j}(s) <= n`` and, when
    ``cap_remainder`` is given, ``prod(s) <= cap_remainder``.
    """
    ell = pc.ell
    if remaining_dims < 0:
        raise ValueError("remaining_dims must be >= 0")
    if cap_remainder is not None and cap_remainder < 1:
        return 0
    if remaining_dims == 0:
        return int(pc.coeffs[ell] <= n)
    pb = Problem(ell, remaining_dims, n, (1,) * remaining_dims, cap=cap_remainder)
    if pc.completed_value(pb.suffix_sym[0]) > n:
        return 0
    b = _engine.root_batch(pb, pc.coeffs)
    return int(_engine.completions(pb, b, Budget(node_budget))[0])


def enumerate_points(region: RegionSpec, *, scales: Optional[Sequence[int]] = None,
                     cap: Optional[int] = None, node_budget: int = DEFAULT_NODE_BUDGET
                     ) -> Iterator[np.ndarray]:
    """Yield the points of the region as ``(m, r)`` integer arrays, lexicographically."""
    a = tuple(scales) if scales is not None else (1,) * region.r
    pb = Problem(region.ell, region.r, region.n, a, cap=cap)
    yield from _engine.iter_points(pb, Budget(node_budget))


def asymptotic_count(region: RegionSpec, volume_estimate: Optional[float] = None) -> float:
    """Leading-order approximation of ``|H(l, r, n)|``.

    ``n^r / r!`` for ``l == 1``, ``n log^{r-1} n / (r-1)!`` for ``l == r`` and
    ``V n^{r/l}`` otherwise, where the volume ``V`` must be supplied.
    """
    ell, r = region.ell, region.r
    n = float(region.n)
    if ell == 1:
        return n ** r / factorial(r)
    if ell == r:
        return n * math.log(n) ** (r - 1) / factorial(r - 1)
    if volume_estimate is None:
        raise ValueError("a volume estimate is required for 1 < l < r")
    return volume_estimate * n ** (r / ell)
