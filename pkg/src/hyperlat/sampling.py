"""Exact uniform sampling from H(l, r, n).

The conditional-count sampler draws coordinate ``k`` with probability
``completions(prefix + v) / completions(prefix)`` by inverse transform on an
integer uniform.  Drawing a single rank ``U`` uniform on ``[0, |H|)`` and
peeling coordinates off it (find ``v`` with ``cum(v-1) <= U < cum(v)``, keep
``U - cum(v-1)`` as the residual rank inside the chosen branch) realises the
same chain: the residual is uniform on ``[0, completions(prefix + v))`` given
the branch.  All decisions are integer comparisons.

Cumulative tables come from three sources:

* ``l == 1``: ``cum(v) = C(n', d) - C(n' - v, d)``, where ``n'`` is the
  remaining budget and ``d`` the number of open coordinates;
* ``l == r``: blocks of consecutive ``v`` sharing ``m // v`` share the weight
  ``W_{d-1}(m // v)``, so a table has ``O(sqrt m)`` rows;
* otherwise: per-prefix child counts from the exact counting engine, cached.
"""

from __future__ import annotations

import json
import math
from collections import OrderedDict
from dataclasses import asdict, dataclass
from math import comb, isqrt
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import _engine
from ._engine import Budget, Problem
from .counting import DEFAULT_NODE_BUDGET, RegionSpec, count, divisor_count
from .sympoly import elem_sym_rows

RNG_ID = "numpy-Philox4x64-10"
METHODS = ("conditional-count", "rejection")
INT64_MAX = (1 << 63) - 1


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Generator for sub-stream ``stream`` of ``seed``; distinct streams are independent."""
    if not 0 <= seed < 1 << 64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    ss = np.random.SeedSequence(seed, spawn_key=(stream,) if stream else ())
    return np.random.Generator(np.random.Philox(ss))


def uniform_below(rng: np.random.Generator, bound: int, size: int) -> np.ndarray:
    """``size`` exact uniform integers on ``[0, bound)``; object dtype beyond int64."""
    if bound < 1:
        raise ValueError("bound must be positive")
    if bound <= INT64_MAX:
        return rng.integers(0, bound, size=size, dtype=np.int64)
    bits = (bound - 1).bit_length()
    nbytes = -(-bits // 8)
    mask = (1 << bits) - 1
    out = np.empty(size, dtype=object)
    for i in range(size):
        while True:
            x = int.from_bytes(rng.bytes(nbytes), "little") & mask
            if x < bound:
                out[i] = x
                break
    return out


@dataclass(frozen=True)
class SamplerConfig:
    region: RegionSpec
    seed: int = 0
    method: str = "conditional-count"
    node_budget: int = DEFAULT_NODE_BUDGET

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if not self.region.nonempty:
            raise ValueError(f"region is empty: n < C(r, l) = {self.region.min_n}")
        if self.method == "rejection" and self.region.ell != 1:
            raise ValueError("rejection sampling is only available for l = 1")
        if not 0 <= self.seed < 1 << 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def metadata(self, m: int) -> dict:
        return {
            "region": {"l": self.region.ell, "r": self.region.r, "n": self.region.n},
            "seed": self.seed,
            "method": self.method,
            "rng": RNG_ID,
            "draws": m,
        }


def _comb_vec(x: np.ndarray, d: int) -> np.ndarray:
    """Exact ``C(x, d)`` elementwise for ``x >= 0`` (each step divides exactly)."""
    c = np.ones_like(x)
    for j in range(d):
        c = c * (x - j) // (j + 1)
    return np.where(x >= d, c, 0)


class Sampler:
    """Reusable exact sampler; precomputed tables are shared by all draws."""

    def __init__(self, cfg: SamplerConfig, table_cache: int = 1 << 16):
        self.cfg = cfg
        reg = cfg.region
        self.ell, self.r, self.n = reg.ell, reg.r, reg.n
        self.total = count(reg, node_budget=cfg.node_budget)
        self.dtype = np.int64 if self.total <= INT64_MAX and self.n < 1 << 62 else object
        self._pb = Problem(self.ell, self.r, self.n, (1,) * self.r)
        self._budget = Budget(cfg.node_budget)
        self._tables: OrderedDict = OrderedDict()
        self._cache_size = table_cache

    # -- tables -----------------------------------------------------------

    def _remember(self, key, table):
        self._tables[key] = table
        if len(self._tables) > self._cache_size:
            self._tables.popitem(last=False)
        return table

    def _generic_table(self, prefix: tuple) -> np.ndarray:
        key = ("g", prefix)
        t = self._tables.get(key)
        if t is not None:
            self._tables.move_to_end(key)
            return t
        b = _engine.batch_for_prefix(self._pb, prefix)
        w = _engine.child_weights(self._pb, b, self._budget)
        return self._remember(key, np.cumsum(w.astype(self.dtype)))

    def _divisor_table(self, d: int, m: int):
        """Blocks ``(start, weight, cum)`` for the next of ``d`` coordinates with product budget ``m``."""
        key = ("w", d, m)
        t = self._tables.get(key)
        if t is not None:
            self._tables.move_to_end(key)
            return t
        s = isqrt(m)
        starts = list(range(1, s + 1))
        lengths = [1] * s
        quot = [m // v for v in starts]
        for q in range(m // (s + 1), 0, -1):
            lo = max(s, m // (q + 1)) + 1
            hi = m // q
            if hi >= lo:
                starts.append(lo)
                lengths.append(hi - lo + 1)
                quot.append(q)
        weights = [divisor_count(d - 1, q) for q in quot]
        dt = self.dtype
        w = np.array(weights, dtype=dt)
        cum = np.cumsum(np.array(lengths, dtype=dt) * w)
        return self._remember(key, (np.array(starts, dtype=dt), w, cum))

    # -- unranking --------------------------------------------------------

    def unrank(self, U: np.ndarray) -> np.ndarray:
        """Points with the given ranks (lexicographic order), as an ``(m, r)`` array."""
        U = np.array(U, dtype=self.dtype)
        if len(U) and (U.min() < 0 or U.max() >= self.total):
            raise ValueError("rank out of range")
        if self.ell == self.r:
            return self._unrank_divisor(U)
        if self.ell == 1:
            return self._unrank_simplex(U)
        return self._unrank_generic(U)

    def _unrank_generic(self, U):
        m, r = len(U), self.r
        pts = np.zeros((m, r), dtype=self.dtype)
        for k in range(r - 1):
            if k == 0:
                groups = [(np.arange(m), ())]
            else:
                keys, inv = np.unique(pts[:, :k], axis=0, return_inverse=True)
                inv = inv.ravel()
                order = np.argsort(inv, kind="stable")
                bounds = np.searchsorted(inv[order], np.arange(len(keys) + 1))
                groups = [(order[bounds[g]:bounds[g + 1]], tuple(int(x) for x in keys[g]))
                          for g in range(len(keys))]
            for sel, prefix in groups:
                cum = self._generic_table(prefix)
                u = U[sel]
                idx = np.searchsorted(cum, u, side="right")
                below = np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0)
                pts[sel, k] = idx + 1
                U[sel] = u - below
        pts[:, r - 1] = U + 1
        return pts

    def _unrank_divisor(self, U):
        m, r = len(U), self.r
        pts = np.zeros((m, r), dtype=self.dtype)
        budget = np.full(m, self.n, dtype=self.dtype)
        for k in range(r - 1):
            d = r - k
            keys, inv = np.unique(budget, return_inverse=True)
            inv = inv.ravel()
            for g, mm in enumerate(keys.tolist()):
                sel = np.flatnonzero(inv == g)
                starts, w, cum = self._divisor_table(d, int(mm))
                u = U[sel]
                idx = np.searchsorted(cum, u, side="right")
                below = np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0)
                off = u - below
                v = starts[idx] + off // w[idx]
                pts[sel, k] = v
                U[sel] = off % w[idx]
                budget[sel] = budget[sel] // v
        pts[:, r - 1] = U + 1
        return pts

    def _unrank_simplex(self, U):
        m, r = len(U), self.r
        pts = np.zeros((m, r), dtype=self.dtype)
        rem = np.full(m, self.n, dtype=self.dtype)
        for k in range(r - 1):
            d = r - k
            # smallest v with C(rem, d) - C(rem - v, d) > U, i.e. C(rem - v, d) < C(rem, d) - U
            target = _comb_vec(rem, d) - U
            lo = np.ones(m, dtype=self.dtype)
            hi = rem - (d - 1)
            while True:
                active = lo < hi
                if not active.any():
                    break
                mid = (lo + hi) // 2
                ok = _comb_vec(rem - mid, d) < target
                hi = np.where(active & ok, mid, hi)
                lo = np.where(active & ~ok, mid + 1, lo)
            v = lo
            U = U - (_comb_vec(rem, d) - _comb_vec(rem - v + 1, d))
            pts[:, k] = v
            rem = rem - v
        pts[:, r - 1] = U + 1
        return pts

    # -- drawing ------------------------------------------------------------

    def batch(self, m: int, rng: np.random.Generator, check: bool = False) -> np.ndarray:
        if m < 0:
            raise ValueError("m must be >= 0")
        if m == 0:
            return np.zeros((0, self.r), dtype=self.dtype)
        if self.cfg.method == "rejection":
            pts = self._rejection(m, rng)
        else:
            pts = self.unrank(uniform_below(rng, self.total, m))
        if check:
            vals = elem_sym_rows(pts, self.ell)
            if (vals > self.n).any() or (pts < 1).any():
                raise AssertionError("sampled point outside the region")
        return pts

    def sample(self, rng: np.random.Generator) -> tuple[int, ...]:
        return tuple(int(x) for x in self.batch(1, rng)[0])

    def _rejection(self, m: int, rng: np.random.Generator) -> np.ndarray:
        r, n = self.r, self.n
        hi = n - r + 1
        out, have = [], 0
        while have < m:
            k = max(1024, 2 * (m - have) * math.factorial(r))
            block = rng.integers(1, hi + 1, size=(k, r), dtype=np.int64)
            block = block[block.sum(axis=1) <= n]
            out.append(block)
            have += len(block)
        return np.concatenate(out)[:m].astype(self.dtype)

    def first_marginal_counts(self) -> np.ndarray:
        """``counts[v-1] = #{i in H : i_1 = v}``, exact."""
        if self.ell == self.r:
            m = self.n
            return np.array([divisor_count(self.r - 1, m // v) for v in range(1, m + 1)], dtype=self.dtype)
        if self.ell == 1:
            v = np.arange(1, self.n - self.r + 2, dtype=object)
            return np.array([comb(self.n - int(x), self.r - 1) for x in v], dtype=self.dtype)
        cum = self._generic_table(())
        return np.diff(np.concatenate([np.zeros(1, dtype=cum.dtype), cum]))


def sample(cfg: SamplerConfig, rng: Optional[np.random.Generator] = None) -> tuple[int, ...]:
    rng = rng if rng is not None else make_rng(cfg.seed)
    return Sampler(cfg).sample(rng)


def sample_batch(cfg: SamplerConfig, m: int, stream: int = 0, check: bool = False) -> np.ndarray:
    """``m`` independent draws; a deterministic function of ``(cfg, m, stream)``."""
    return Sampler(cfg).batch(m, make_rng(cfg.seed, stream), check=check)


def log_coords(points, n: int) -> np.ndarray:
    """``log i_k / log n`` for a point or an array of points."""
    if n < 2:
        raise ValueError("n must be >= 2")
    return np.log(np.asarray(points, dtype=np.float64)) / math.log(n)


def dump_samples(path, points: np.ndarray, cfg: SamplerConfig) -> Path:
    """Write ``points`` as CSV plus a JSON metadata side file; returns the metadata path."""
    path = Path(path)
    r = cfg.region.r
    lines = [",".join(f"i{k + 1}" for k in range(r))]
    lines += [",".join(str(int(x)) for x in row) for row in np.asarray(points).tolist()]
    path.write_text("\n".join(lines) + "\n", encoding="ascii")
    meta = Path(str(path) + ".json")
    meta.write_text(json.dumps(cfg.metadata(len(points)), sort_keys=True, indent=2) + "\n", encoding="ascii")
    return meta


def read_samples(path) -> np.ndarray:
    rows = Path(path).read_text(encoding="ascii").split("\n")
    header = rows[0].split(",")
    data = [[int(x) for x in row.split(",")] for row in rows[1:] if row]
    arr = np.array(data, dtype=object).reshape(len(data), len(header))
    try:
        return arr.astype(np.int64)
    except OverflowError:
        return arr
