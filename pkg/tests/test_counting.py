import math
import threading
from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hyperlat import _engine
from hyperlat.cache import CountCache, make_key
from hyperlat.counting import (BudgetExceeded, RegionSpec, asymptotic_count, count, count_box,
                               count_completions, count_constrained, count_scaled, count_with_divisibility,
                               divisor_count, enumerate_points, product_cap)
from hyperlat.limits import V23_HAT
from hyperlat.sympoly import PrefixCoefficients
from oracles import box_count, box_points, esym

R = RegionSpec


@st.composite
def small_regions(draw, rmax=4, nmax=14):
    r = draw(st.integers(1, rmax))
    ell = draw(st.integers(1, r))
    n = draw(st.integers(0, nmax if r < 4 else 9))
    return R(ell, r, n)


@pytest.mark.parametrize("ell,r,n,expected", [(1, 3, 10, 120), (2, 2, 4, 8), (2, 3, 3, 1), (2, 3, 5, 4)])
@pytest.mark.parametrize("method", ["auto", "vector", "dfs", "orbit"])
def test_count_examples(ell, r, n, expected, method):
    assert count(R(ell, r, n), method=method) == expected


def test_count_scaled_examples():
    assert count_scaled(R(2, 2, 4), (2, 1)) == 3
    assert count_scaled(R(1, 2, 6), (1, 1)) == 15
    assert count_scaled(R(2, 2, 4), (5, 5)) == 0
    assert count_scaled(R(2, 2, 4), ("2", "1"), method="dfs") == 3


def test_count_with_divisibility_examples():
    assert count_with_divisibility(R(2, 2, 4), (2, 1)) == 3
    assert count_with_divisibility(R(2, 2, 4), (1, 1)) == 8
    assert count_with_divisibility(R(1, 2, 6), (2, 2)) == 3


def test_count_constrained_examples():
    assert count_constrained(R(2, 2, 4), 2) == 3
    assert count_constrained(R(2, 2, 4), 4) == 8
    assert count_constrained(R(2, 3, 5), 1) == 1
    assert count_constrained(R(2, 3, 5), Fraction(3, 2), method="dfs") == 1


def test_count_completions_examples():
    assert count_completions(PrefixCoefficients.empty(2), 2, 4) == 8
    assert count_completions(PrefixCoefficients.from_prefix((2,), 2), 1, 4) == 2
    assert count_completions(PrefixCoefficients.from_prefix((4,), 2), 1, 4) == 1
    assert count_completions(PrefixCoefficients.from_prefix((4, 2), 2), 0, 4) == 0
    assert count_completions(PrefixCoefficients.from_prefix((2, 2), 2), 0, 4) == 1


def test_asymptotic_count_examples():
    assert asymptotic_count(R(1, 3, 100)) == pytest.approx(100**3 / 6)
    assert asymptotic_count(R(2, 2, 3)) == pytest.approx(3 * math.log(3))
    e_region = asymptotic_count(R(2, 2, 1))  # log 1 = 0
    assert e_region == 0.0
    assert asymptotic_count(R(2, 3, 10**6), float(V23_HAT)) == pytest.approx(float(V23_HAT) * 1e9)
    with pytest.raises(ValueError):
        asymptotic_count(R(2, 3, 10))


def test_region_validation():
    for bad in [(0, 2, 5), (3, 2, 5), (1, 0, 5), (1, 2, -1)]:
        with pytest.raises(ValueError):
            R(*bad)
    assert R(2, 3, 2).nonempty is False
    assert count(R(2, 3, 2)) == 0
    with pytest.raises(ValueError):
        count(R(2, 3, 5), method="nope")
    with pytest.raises(ValueError):
        count(R(2, 3, 5), method="formula")


@given(small_regions())
def test_count_matches_box_scan(reg):
    expected = box_count(reg.ell, reg.r, reg.n)
    for method in ("auto", "vector", "dfs", "orbit"):
        assert count(reg, method=method) == expected


@given(small_regions(), st.integers(0, 40))
def test_count_constrained_matches_box_scan(reg, cap):
    expected = box_count(reg.ell, reg.r, reg.n, cap=cap)
    for method in ("auto", "vector", "dfs", "orbit"):
        assert count_constrained(reg, cap, method=method) == expected


@given(small_regions(rmax=3), st.data())
def test_count_scaled_matches_box_scan(reg, data):
    mu = data.draw(st.lists(st.integers(1, 3), min_size=reg.r, max_size=reg.r))
    expected = box_count(reg.ell, reg.r, reg.n, scales=mu)
    assert count_scaled(reg, mu) == expected
    assert count_scaled(reg, mu, method="dfs") == expected


@given(st.integers(1, 3), st.integers(0, 300), st.data())
def test_rational_scales_clear_denominators(r, n, data):
    ell = data.draw(st.integers(1, r))
    t = data.draw(st.lists(st.fractions(Fraction(1, 3), 3, max_denominator=4), min_size=r, max_size=r))
    d = math.lcm(*(x.denominator for x in t))
    a = [int(x * d) for x in t]
    # P_l(t i) <= n  <=>  P_l(a i) <= n d^l
    assert count_scaled(R(ell, r, n), t) == count_scaled(R(ell, r, n * d**ell), a)


@given(st.integers(1, 4), st.integers(0, 300), st.data())
def test_substitution_identity(r, n, data):
    ell = data.draw(st.integers(1, r))
    mu = data.draw(st.lists(st.integers(1, 5), min_size=r, max_size=r))
    reg = R(ell, r, n)
    assert count_with_divisibility(reg, mu) == count_scaled(reg, mu)
    assert count_with_divisibility(reg, mu) == count_scaled(reg, mu, method="vector")


def test_binomial_identity():
    for r in range(1, 7):
        for n in range(61):
            assert count(R(1, r, n)) == comb(n, r)
    for r in range(1, 5):
        for n in range(0, 61, 7):
            assert count(R(1, r, n), method="vector") == comb(n, r)


def test_divisor_sum_identity():
    for n in range(1, 10**4 + 1):
        assert count(R(2, 2, n)) == int((n // np.arange(1, n + 1)).sum())
    for n in (10**4, 12345, 99991):
        assert count(R(2, 2, n), method="vector") == count(R(2, 2, n))


def test_divisor_recursion_higher_r():
    for r in (3, 4):
        for n in (0, 1, 2, 17, 360, 1000):
            assert divisor_count(r, n) == count(R(r, r, n), method="vector")
    assert divisor_count(0, 5) == 1
    assert divisor_count(3, 0) == 0
    with pytest.raises(ValueError):
        divisor_count(-1, 3)


@given(small_regions(rmax=4, nmax=60))
def test_monotone_in_n(reg):
    assert count(reg) <= count(R(reg.ell, reg.r, reg.n + 1))


@given(st.integers(2, 3), st.integers(0, 200), st.integers(0, 60))
def test_monotone_in_cap(r, n, cap):
    reg = R(r - 1, r, n)
    assert count_constrained(reg, cap) <= count_constrained(reg, cap + 1) <= count(reg)


@given(st.integers(1, 2000), st.lists(st.sampled_from([Fraction(1, 2), Fraction(1), Fraction(3, 2), Fraction(2)]),
                                      min_size=3, max_size=3))
def test_scaled_counts_below_volume(n, t):
    delta = 0.01  # well above the frozen constant's relative error 0.0049
    assert count_scaled(R(2, 3, n), t) * math.prod(t) <= float(V23_HAT) * n**1.5 * (1 + delta)


@given(st.integers(2, 4), st.data())
def test_support_and_inclusion_during_walk(r, data):
    n = data.draw(st.integers(0, {2: 120, 3: 50, 4: 20}[r]))
    ell = data.draw(st.integers(1, r - 1))
    seen = []

    def visit(p):
        assert math.prod(p) ** ell <= n**r
        assert esym(r - 1, p) ** ell <= r**ell * n ** (r - 1)
        seen.append(p)

    total = count(R(ell, r, n), method="dfs", visit=visit)
    assert total == len(seen) == len(set(seen))


def test_enumerate_points_lexicographic():
    pts = np.concatenate(list(enumerate_points(R(2, 3, 30))))
    assert [tuple(p) for p in pts.tolist()] == sorted(box_points(2, 3, 30))


def test_count_box():
    reg = R(2, 3, 60)
    for box in [(3, None, 5), (1, 1, 1), (100, 100, 100), (0, 5, 5)]:
        expected = sum(1 for p in box_points(2, 3, 60)
                       if all(b is None or x <= b for x, b in zip(p, box)))
        assert count_box(reg, box) == expected
        assert count_box(reg, box, method="dfs") == expected


def test_product_cap_exact():
    # floor(x n^{r/l}) for rational x, compared with exact rational arithmetic
    assert product_cap(Fraction(1, 8), 100, 1, 2) == 1250
    assert product_cap(Fraction(1, 2), 10**6, 2, 3) == 5 * 10**8
    assert product_cap(Fraction(1, 3), 2, 2, 3) == 0  # 2^1.5 / 3 = 0.94
    assert product_cap(1, 7, 2, 3) == 18  # floor(7^1.5) = floor(18.52)


def test_budget_exceeded():
    with pytest.raises(BudgetExceeded):
        count(R(2, 3, 10**5), node_budget=1000)
    with pytest.raises(BudgetExceeded):
        count(R(2, 3, 10**4), method="dfs", node_budget=1000)
    with pytest.raises(BudgetExceeded):
        count(R(2, 3, 10**4), method="orbit", node_budget=100)


def test_threads_do_not_change_results():
    reg = R(2, 4, 3000)
    assert count(reg, threads=1) == count(reg, threads=3)
    assert count_constrained(reg, 5000, threads=2) == count_constrained(reg, 5000)


def test_object_dtype_path_agrees():
    for ell, r, n, cap in [(2, 3, 500, None), (2, 4, 200, None), (2, 3, 500, 300)]:
        pb = _engine.Problem(ell, r, n, (1,) * r, cap=cap)
        fast = _engine.count(pb, _engine.Budget(10**9))
        pb.dtype = object
        assert _engine.count(pb, _engine.Budget(10**9)) == fast


def test_huge_scale_uses_exact_integers():
    # scales 10^20 push the cleared bound n 10^40 far past 64 bits
    big = (10**20, 2 * 10**20, 3 * 10**20)
    assert count_scaled(R(2, 3, 5000 * 10**40), big, method="vector") == count_scaled(R(2, 3, 5000), (1, 2, 3))
    small = (Fraction(1, 10**3), Fraction(2, 10**3), Fraction(3, 10**3))
    assert count_scaled(R(2, 3, 1), small, method="vector") == count_scaled(R(2, 3, 10**6), (1, 2, 3))


def test_iroot():
    for x in [0, 1, 2, 15, 16, 17, 10**40, 10**40 + 1, 2**64 - 1]:
        for k in (1, 2, 3, 5):
            y = _engine.iroot(x, k)
            assert y**k <= x < (y + 1) ** k


def test_cache_round_trip(tmp_path):
    cache = CountCache(tmp_path)
    reg = R(2, 3, 5000)
    fresh = count(reg)
    assert count(reg, cache=cache) == fresh
    assert cache.get(make_key(2, 3, 5000)) == fresh
    again = CountCache(tmp_path)
    assert again.get("v1:count:2:3:5000") == fresh
    assert count(reg, cache=again) == fresh
    count_constrained(reg, 77, cache=again)
    count_scaled(reg, (Fraction(1, 2), 1, 1), cache=again)
    lines = (tmp_path / "counts.tsv").read_text().splitlines()
    keys = [ln.split("\t")[0] for ln in lines]
    assert keys == sorted(keys)
    assert "v1:count:2:3:5000:cap=77" in keys
    assert "v1:count:2:3:5000:scaled=1/2,1,1" in keys
    for ln in lines:
        key, value = ln.split("\t")
        assert int(value) >= 0


def test_cache_concurrent_writers(tmp_path):
    def work(n):
        count(R(2, 2, n), cache=CountCache(tmp_path))

    threads = [threading.Thread(target=work, args=(n,)) for n in range(100, 110)]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    data = CountCache(tmp_path)
    for n in range(100, 110):
        hit = data.get(make_key(2, 2, n))
        assert hit is None or hit == count(R(2, 2, n))
