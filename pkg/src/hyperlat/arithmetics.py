"""Exact integer kernels: GCD/LCM of vectors, primes, valuations, factorization."""

from __future__ import annotations

import math
from functools import lru_cache, reduce
from math import isqrt
from typing import Sequence

import numpy as np

FACTORIZE_LIMIT = 10**12


def _check_positive(v: Sequence[int]) -> list[int]:
    v = [int(x) for x in v]
    if not v:
        raise ValueError("need a nonempty vector")
    if any(x < 1 for x in v):
        raise ValueError("entries must be positive integers")
    return v


def gcd_vec(v: Sequence[int]) -> int:
    return reduce(math.gcd, _check_positive(v))


def lcm_vec(v: Sequence[int]) -> int:
    """Least common multiple; Python integers, so the result never wraps."""
    return reduce(math.lcm, _check_positive(v))


def gcd_rows(points: np.ndarray) -> np.ndarray:
    """Row-wise GCD of an ``(m, r)`` array of positive integers."""
    points = np.asarray(points)
    if points.dtype == object:
        return np.array([reduce(math.gcd, row) for row in points.tolist()], dtype=object)
    return np.gcd.reduce(points, axis=1)


def lcm_rows(points: np.ndarray) -> np.ndarray:
    """Row-wise LCM.  int64 when every row product fits, Python ints otherwise."""
    points = np.asarray(points)
    if points.size and points.dtype != object:
        # lcm <= product, so a product bound below 2**62 makes int64 safe
        logmax = np.log2(points.astype(np.float64)).sum(axis=1).max()
        if logmax < 62:
            return np.lcm.reduce(points, axis=1)
    return np.array([reduce(math.lcm, (int(x) for x in row)) for row in points.tolist()], dtype=object)


def sieve_primes(limit: int) -> np.ndarray:
    """All primes ``<= limit`` in increasing order."""
    if limit < 2:
        raise ValueError("limit must be >= 2")
    is_p = np.ones(limit + 1, dtype=bool)
    is_p[:2] = False
    for p in range(2, isqrt(limit) + 1):
        if is_p[p]:
            is_p[p * p::p] = False
    return np.flatnonzero(is_p)


@lru_cache(maxsize=4)
def _small_primes(limit: int) -> tuple[int, ...]:
    return tuple(int(p) for p in sieve_primes(limit))


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p > FACTORIZE_LIMIT:
        raise ValueError(f"primality checks supported up to {FACTORIZE_LIMIT}")
    for q in _small_primes(10**6):
        if q * q > p:
            return True
        if p % q == 0:
            return p == q
    return True


def valuation(p: int, m: int) -> int:
    """Exponent of the prime ``p`` in ``m``."""
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    if m < 1:
        raise ValueError("m must be a positive integer")
    k = 0
    while m % p == 0:
        m //= p
        k += 1
    return k


def factorize(m: int) -> list[tuple[int, int]]:
    """``[(p, exponent), ...]`` with increasing primes; ``m <= 10**12``."""
    if m < 1:
        raise ValueError("m must be a positive integer")
    if m > FACTORIZE_LIMIT:
        raise ValueError(f"factorization supported up to {FACTORIZE_LIMIT}")
    out = []
    for p in _small_primes(10**6):
        if p * p > m:
            break
        if m % p == 0:
            k = 0
            while m % p == 0:
                m //= p
                k += 1
            out.append((p, k))
    if m > 1:
        out.append((m, 1))
    return out


def recompose(fac: Sequence[tuple[int, int]]) -> int:
    return math.prod(p ** k for p, k in fac)
