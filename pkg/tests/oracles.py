"""Slow, obviously-correct reference computations used only by the tests."""

import itertools
import math
from math import prod


def esym(ell, xs):
    return sum(prod(c) for c in itertools.combinations(xs, ell))


def box_points(ell, r, n):
    """All points of H(l, r, n) by scanning the full box [1, n]^r."""
    return [p for p in itertools.product(range(1, n + 1), repeat=r) if esym(ell, p) <= n]


def box_count(ell, r, n, cap=None, scales=None):
    total = 0
    for p in itertools.product(range(1, n + 1), repeat=r):
        q = p if scales is None else tuple(s * x for s, x in zip(scales, p))
        if esym(ell, q) <= n and (cap is None or prod(p) <= cap):
            total += 1
    return total


def primes_by_trial_division(limit):
    return [k for k in range(2, limit + 1) if all(k % d for d in range(2, math.isqrt(k) + 1))]


def gcd_by_search(*xs):
    return max(d for d in range(1, min(xs) + 1) if all(x % d == 0 for x in xs))


def lcm_by_search(*xs):
    m = max(xs)
    k = m
    while any(k % x for x in xs):
        k += m
    return k
