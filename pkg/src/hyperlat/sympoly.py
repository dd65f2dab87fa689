"""Elementary symmetric polynomials over positive integers.

Everything here is exact integer arithmetic.  The counting and sampling code
walks coordinates one at a time, so the central object is the vector of
elementary symmetric values of the coordinates fixed so far
(:class:`PrefixCoefficients`).  Adding a coordinate ``z`` updates it through

    e_j(prefix + (z,)) = e_j(prefix) + z * e_{j-1}(prefix),

and the value of the full polynomial splits as

    e_l(prefix, suffix) = sum_j e_j(prefix) * e_{l-j}(suffix).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Sequence

import numpy as np


def elem_sym_all(coords: Sequence[int], ell: int) -> list[int]:
    """Return ``[e_0, e_1, ..., e_ell]`` of ``coords`` (O(len * ell) operations)."""
    c = [1] + [0] * ell
    for z in coords:
        for j in range(ell, 0, -1):
            c[j] += z * c[j - 1]
    return c


def eval_elem_sym(ell: int, coords: Sequence[int]) -> int:
    """Value of the ``ell``-th elementary symmetric polynomial at ``coords``.

    >>> eval_elem_sym(2, (1, 2, 3))
    11
    """
    if not 1 <= ell <= len(coords):
        raise ValueError(f"need 1 <= ell <= {len(coords)}, got ell={ell}")
    if any(x < 1 for x in coords):
        raise ValueError("coordinates must be positive integers")
    return elem_sym_all(coords, ell)[ell]


def min_value(ell: int, r: int) -> int:
    """Smallest value of P_ell on positive integer r-vectors, i.e. at (1, ..., 1)."""
    if not 1 <= ell <= r:
        raise ValueError(f"need 1 <= ell <= r, got ell={ell}, r={r}")
    return comb(r, ell)


@dataclass(frozen=True)
class PrefixCoefficients:
    """Elementary symmetric values ``(e_0, ..., e_ell)`` of the fixed coordinates."""

    coeffs: tuple[int, ...]

    def __post_init__(self):
        if not self.coeffs or self.coeffs[0] != 1:
            raise ValueError("coeffs[0] must be 1")
        if any(c < 0 for c in self.coeffs):
            raise ValueError("coefficients must be nonnegative")

    @property
    def ell(self) -> int:
        return len(self.coeffs) - 1

    @classmethod
    def empty(cls, ell: int) -> "PrefixCoefficients":
        return cls((1,) + (0,) * ell)

    @classmethod
    def from_prefix(cls, prefix: Sequence[int], ell: int) -> "PrefixCoefficients":
        return cls(tuple(elem_sym_all(prefix, ell)))

    def extend(self, z: int) -> "PrefixCoefficients":
        c = self.coeffs
        return PrefixCoefficients((1,) + tuple(c[j] + z * c[j - 1] for j in range(1, len(c))))

    def completed_value(self, suffix_sym: Sequence[int]) -> int:
        """``sum_j e_j(prefix) e_{ell-j}(suffix)`` given ``suffix_sym = [e_0(suffix), ...]``."""
        ell = self.ell
        return sum(self.coeffs[j] * suffix_sym[ell - j] for j in range(ell + 1))


def affine_bound(coeffs: Sequence[int], rest_sym: Sequence[int], n: int, scale: int = 1) -> int:
    """Largest ``v`` with ``sum_j c'_j(v) rest_sym[ell-j] <= n``, where ``c'(v)`` is
    ``coeffs`` extended by the coordinate ``scale * v``; 0 when no ``v >= 1`` fits.

    The constraint is affine in ``v``: ``A + v * scale * B <= n`` with
    ``A = sum_j c_j rest_{ell-j}`` and ``B = sum_j c_{j-1} rest_{ell-j}``.
    """
    ell = len(coeffs) - 1
    a = sum(coeffs[j] * rest_sym[ell - j] for j in range(ell + 1))
    b = sum(coeffs[j - 1] * rest_sym[ell - j] for j in range(1, ell + 1))
    slack = n - a
    if b == 0:
        # the next coordinate does not enter the polynomial at all
        raise ValueError("degenerate prefix: next coordinate is unconstrained")
    if slack < scale * b:
        return 0
    return slack // (scale * b)


def next_coord_bound(pc: PrefixCoefficients, remaining_dims: int, n: int) -> int:
    """Largest value of the next coordinate keeping the region reachable.

    ``remaining_dims`` counts the next coordinate itself; every later coordinate
    is set to 1.  Returns 0 when the branch is infeasible.

    >>> next_coord_bound(PrefixCoefficients.from_prefix((2,), 2), 2, 5)
    1
    """
    if remaining_dims < 1:
        raise ValueError("remaining_dims must be >= 1")
    ell = pc.ell
    rest = [comb(remaining_dims - 1, j) for j in range(ell + 1)]
    return affine_bound(pc.coeffs, rest, n)


def elem_sym_rows(points, ell: int):
    """``e_ell`` of every row of an ``(m, r)`` integer array (exact for object arrays)."""
    pts = np.asarray(points)
    c = [np.ones(len(pts), dtype=pts.dtype)] + [np.zeros(len(pts), dtype=pts.dtype) for _ in range(ell)]
    for k in range(pts.shape[1]):
        z = pts[:, k]
        for j in range(ell, 0, -1):
            c[j] = c[j] + z * c[j - 1]
    return c[ell]
