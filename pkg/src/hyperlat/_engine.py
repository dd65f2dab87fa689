"""Vectorized exact enumeration of weighted hyperbolic regions.

A problem is the set of positive integer vectors ``i`` with

    e_ell(a_1 i_1, ..., a_r i_r) <= N,   prod(i) <= cap,   i_k <= box_k,

where ``a`` are positive integer scales and ``cap``/``box`` are optional.
Coordinates are fixed left to right.  A *batch* holds many prefixes of the
same length at once (numpy arrays of their elementary symmetric values); the
admissible range of the next coordinate is ``1..vmax`` with ``vmax`` affine
in the prefix data, so a batch expands into its children with ``repeat`` and
a ``searchsorted`` over the cumulative child counts.  Work is split into
chunks of at most ``CHUNK`` children to bound memory.

Arrays are int64 when every intermediate value provably fits, and Python-int
object arrays otherwise (same code path, exact, slower).
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import comb, prod as iprod
from typing import Iterator, Optional, Sequence

import numpy as np

from .sympoly import elem_sym_all

CHUNK = 1 << 21
INT64_SAFE = 1 << 62


class BudgetExceeded(RuntimeError):
    """The enumeration visited more nodes than its configured budget."""


def iroot(x: int, k: int) -> int:
    """Largest integer ``y >= 0`` with ``y**k <= x``."""
    if x < 0 or k < 1:
        raise ValueError("iroot needs x >= 0 and k >= 1")
    if x < 2 or k == 1:
        return x
    y = 1 << -(-x.bit_length() // k)  # overshoots the root
    while True:
        z = ((k - 1) * y + x // y ** (k - 1)) // k
        if z >= y:
            break
        y = z
    while y ** k > x:
        y -= 1
    while (y + 1) ** k <= x:
        y += 1
    return y


@dataclass
class Budget:
    limit: int
    used: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def spend(self, k: int) -> None:
        with self._lock:
            self.used += k
            if self.used > self.limit:
                raise BudgetExceeded(f"node budget of {self.limit} exhausted")


@dataclass
class Problem:
    ell: int
    r: int
    N: int
    scales: tuple[int, ...]
    cap: Optional[int] = None
    box: Optional[tuple[Optional[int], ...]] = None
    suffix_sym: list[list[int]] = field(init=False, repr=False)
    dtype: object = field(init=False, repr=False)

    def __post_init__(self):
        ell, r = self.ell, self.r
        if len(self.scales) != r:
            raise ValueError("need one scale per coordinate")
        # e_j of the minimal suffix (every later coordinate equal to 1)
        self.suffix_sym = [elem_sym_all(self.scales[k:], ell) for k in range(r + 1)]
        if self.cap is not None:
            # the product can never exceed the r-th root bound (Maclaurin), so a
            # larger cap is not binding
            if self.N >= 0 and self.cap >= iroot(max(self.N, 0) ** r, ell):
                self.cap = None
        if self.box is not None:
            # a coordinate never exceeds N, so larger box bounds are inert
            self.box = tuple(None if b is None else min(b, max(self.N, 0)) for b in self.box)
        amax = max(self.scales) if self.scales else 1
        mag = (ell + 2) * comb(r, r // 2) ** 2 * amax ** ell * max(self.N, 1)
        safe = mag < INT64_SAFE and (self.cap is None or self.cap < INT64_SAFE)
        self.dtype = np.int64 if safe else object

    @property
    def start_feasible(self) -> bool:
        if self.N < self.suffix_sym[0][self.ell]:
            return False
        return self.cap is None or self.cap >= 1


@dataclass
class Batch:
    """Prefixes of length ``k``: symmetric values ``cs[j]``, product, coordinates."""

    k: int
    cs: list
    prod: Optional[np.ndarray] = None
    coords: Optional[list] = None

    def __len__(self):
        return len(self.cs[0])


def root_batch(pb: Problem, coeffs: Optional[Sequence[int]] = None, track_coords: bool = False) -> Batch:
    coeffs = list(coeffs) if coeffs is not None else [1] + [0] * pb.ell
    cs = [np.array([c], dtype=pb.dtype) for c in coeffs]
    prod = np.array([1], dtype=pb.dtype) if pb.cap is not None else None
    return Batch(0, cs, prod, [] if track_coords else None)


def bound(pb: Problem, b: Batch) -> np.ndarray:
    """Largest admissible value of coordinate ``b.k`` for every prefix (0 if none)."""
    ell, k = pb.ell, b.k
    rest = pb.suffix_sym[k + 1]
    a = b.cs[0] * rest[ell]
    for j in range(1, ell + 1):
        if rest[ell - j]:
            a = a + b.cs[j] * rest[ell - j]
    bb = 0
    for j in range(1, ell + 1):
        if rest[ell - j]:
            bb = bb + b.cs[j - 1] * rest[ell - j]
    vmax = (pb.N - a) // (pb.scales[k] * bb)
    if pb.cap is not None:
        vmax = np.minimum(vmax, pb.cap // b.prod)
    if pb.box is not None and pb.box[k] is not None:
        vmax = np.minimum(vmax, pb.box[k])
    vmax = np.maximum(vmax, 0)
    if vmax.dtype == object:
        vmax = vmax.astype(object)
    return vmax


def _chunks(vmax: np.ndarray, budget: Budget, size: int = CHUNK) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield ``(parent, v)`` index arrays covering all children, ``size`` at a time."""
    budget.spend(int(vmax.sum()))
    counts = np.asarray(vmax, dtype=np.int64)
    cum = np.cumsum(counts)
    total = int(cum[-1]) if len(cum) else 0
    start = cum - counts
    for g0 in range(0, total, size):
        g = np.arange(g0, min(g0 + size, total), dtype=np.int64)
        parent = np.searchsorted(cum, g, side="right")
        yield parent, g - start[parent] + 1


def extend(pb: Problem, b: Batch, parent: np.ndarray, v: np.ndarray) -> Batch:
    k = b.k
    z = v.astype(pb.dtype) * pb.scales[k] if pb.dtype is object else v * pb.scales[k]
    cs = [b.cs[0][parent]]
    for j in range(1, pb.ell + 1):
        cs.append(b.cs[j][parent] + z * b.cs[j - 1][parent])
    prod = None
    if b.prod is not None:
        prod = b.prod[parent] * (v.astype(object) if pb.dtype is object else v)
    coords = None
    if b.coords is not None:
        coords = [c[parent] for c in b.coords] + [v]
    return Batch(k + 1, cs, prod, coords)


def _segment_sums(parent: np.ndarray, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sum ``values`` over runs of equal (sorted) ``parent``."""
    starts = np.flatnonzero(np.r_[True, parent[1:] != parent[:-1]])
    return parent[starts], np.add.reduceat(values, starts)


def completions(pb: Problem, b: Batch, budget: Budget, threads: int = 1) -> np.ndarray:
    """Number of full points extending each prefix of ``b`` (prefixes assumed feasible)."""
    if b.k == pb.r:
        return np.ones(len(b), dtype=pb.dtype)
    vmax = bound(pb, b)
    if b.k == pb.r - 1:
        return vmax
    out = np.zeros(len(b), dtype=pb.dtype)

    def work(chunk):
        parent, v = chunk
        child = extend(pb, b, parent, v)
        cc = completions(pb, child, budget)
        return _segment_sums(parent, cc)

    if threads > 1 and b.k == 0:
        # split the first coordinate's range; integer partial sums recombine exactly
        size = min(CHUNK, max(1, -(-int(vmax.sum()) // (8 * threads))))
        pieces = _chunks(vmax, budget, size)
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(work, pieces))
    else:
        results = (work(c) for c in _chunks(vmax, budget))
    for idx, sums in results:
        out[idx] += sums
    return out


def count(pb: Problem, budget: Budget, threads: int = 1) -> int:
    if not pb.start_feasible:
        return 0
    return int(completions(pb, root_batch(pb), budget, threads)[0])


def walk(pb: Problem, budget: Budget, b: Optional[Batch] = None) -> Iterator[Batch]:
    """Yield batches of complete points (``coords`` filled), in lexicographic order."""
    if b is None:
        if not pb.start_feasible:
            return
        b = root_batch(pb, track_coords=True)
    if b.k == pb.r:
        yield b
        return
    for parent, v in _chunks(bound(pb, b), budget):
        yield from walk(pb, budget, extend(pb, b, parent, v))


def iter_points(pb: Problem, budget: Budget) -> Iterator[np.ndarray]:
    """Yield ``(m, r)`` arrays of the points of the region."""
    for b in walk(pb, budget):
        yield np.stack(b.coords, axis=1)


def child_weights(pb: Problem, b: Batch, budget: Budget) -> np.ndarray:
    """For a single-prefix batch: completion counts of each next value ``1..vmax``."""
    vmax = bound(pb, b)
    m = int(vmax[0])
    if m == 0:
        return np.zeros(0, dtype=pb.dtype)
    v = np.arange(1, m + 1, dtype=np.int64)
    budget.spend(m)
    child = extend(pb, b, np.zeros(m, dtype=np.int64), v)
    return completions(pb, child, budget)


def batch_for_prefix(pb: Problem, prefix: Sequence[int]) -> Batch:
    c = elem_sym_all([a * i for a, i in zip(pb.scales, prefix)], pb.ell)
    b = root_batch(pb, c)
    b.k = len(prefix)
    if b.prod is not None:
        b.prod = np.array([iprod(prefix)], dtype=pb.dtype)
    return b
