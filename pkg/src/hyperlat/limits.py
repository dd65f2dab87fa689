"""Limit objects: the GCD law, LCM-ratio moments, product laws, volumes, spacings."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Optional, Sequence

import numpy as np

from .arithmetics import sieve_primes
from .counting import RegionSpec, count, count_constrained, product_cap

# count(2, 3, 4 * 10**6) / (4 * 10**6) ** 1.5, the frozen volume estimate
V23_HAT = Fraction(16657033517, 8 * 10**9)


# ---------------------------------------------------------------------------
# zeta


@lru_cache(maxsize=256)
def zeta_with_error(s: float, eps: float = 1e-12) -> tuple[float, float]:
    """``(value, bound)`` with ``|value - zeta(s)| <= bound <= eps`` (up to rounding).

    Sums ``k = 1..K`` directly.  For the convex decreasing ``f(x) = x^-s`` the
    tail ``sum_{k>K} f(k)`` lies between ``int_{K+1}^inf f + f(K+1)/2`` and
    ``int_{K+1/2}^inf f``; the midpoint of that bracket is added.
    """
    if not s > 1:
        raise ValueError("zeta needs s > 1")
    if not eps > 0:
        raise ValueError("eps must be positive")

    def bracket(K: int) -> tuple[float, float]:
        lo = (K + 1) ** (1 - s) / (s - 1) + 0.5 * (K + 1) ** -s
        hi = (K + 0.5) ** (1 - s) / (s - 1)
        return lo, hi

    K = 16
    while True:
        lo, hi = bracket(K)
        if (hi - lo) / 2 <= eps / 4 or K >= 1 << 26:
            break
        K *= 2
    head = math.fsum(np.arange(1, K + 1, dtype=np.float64) ** -s)
    # fsum is correctly rounded; each power carries relative error <= 2^-53
    return head + (lo + hi) / 2, (hi - lo) / 2 + 2.0**-51 * head


def zeta(s: float, eps: float = 1e-12) -> float:
    return zeta_with_error(s, eps)[0]


# ---------------------------------------------------------------------------
# GCD limit law


def gcd_limit_pmf(r: int, m: int) -> float:
    """``P{U = m} = m^-r / zeta(r)``."""
    if r < 2:
        raise ValueError("need r >= 2")
    if m < 1:
        raise ValueError("m must be a positive integer")
    return float(m) ** -r / zeta(r)


def gcd_limit_pmf_tail(r: int, M: int) -> float:
    """Upper bound on ``P{U > M}``."""
    return M ** (1 - r) / (r - 1) / zeta(r)


def gcd_limit_mellin(r: int, s: float) -> float:
    """``E[U^s] = zeta(r - s) / zeta(r)`` for ``s < r - 1``."""
    if r < 2:
        raise ValueError("need r >= 2")
    if not s < r - 1:
        raise ValueError("the Mellin transform needs s < r - 1")
    return zeta(r - s) / zeta(r)


# ---------------------------------------------------------------------------
# LCM ratio limit


@dataclass(frozen=True)
class LimitModel:
    prime_cutoff: int = 10**5
    exponent_cap: int = 40
    tolerance: float = 1e-6

    def __post_init__(self):
        if self.prime_cutoff < 2 or self.exponent_cap < 1 or not self.tolerance > 0:
            raise ValueError("need P >= 2, J >= 1 and eps > 0")


def _prime_factors(r: int, beta: float, p: np.ndarray, J: int) -> tuple[np.ndarray, np.ndarray]:
    """Truncated ``E[p^{beta (max - sum)}]`` over exponents ``<= J`` and the omitted mass bound."""
    q = 1.0 / p.astype(np.float64)
    qb = q ** (1.0 + beta)
    total = np.zeros_like(q)
    # the maximum equals m and is attained by exactly c coordinates; the
    # others lie below m and contribute prod q^{(1+beta) j}
    for m in range(J + 1):
        below = (1.0 - qb ** m) / (1.0 - qb)
        for c in range(1, r + 1):
            if m == 0 and c < r:
                continue
            term = comb(r, c) * q ** (c * m + beta * (c - 1) * m)
            if c < r:
                term = term * below ** (r - c)
            total += term
    total *= (1.0 - q) ** r
    tail = r * q ** (J + 1)
    return total, tail


def lcm_ratio_moment(r: int, beta: float, model: LimitModel = LimitModel()) -> tuple[float, float]:
    """``E[L^beta]`` for ``L = prod_p p^{max_k G_k(p) - sum_k G_k(p)}`` as ``(value, error_bound)``.

    Primes ``<= P`` use exponents up to ``J`` (omitted mass ``r p^-(J+1)``,
    integrand at most 1).  A prime ``p > P`` has factor in ``[1 - C(r,2)/p^2, 1]``
    because the integrand is 1 unless two exponents are positive, so their
    product lies in ``[1 - C(r,2)/P, 1]``.
    """
    if r < 2:
        raise ValueError("need r >= 2")
    if not beta > 0:
        raise ValueError("need beta > 0")
    primes = sieve_primes(model.prime_cutoff)
    F, tail = _prime_factors(r, float(beta), primes, model.exponent_cap)
    lo = float(np.prod(F)) * (1.0 - comb(r, 2) / model.prime_cutoff)
    hi = float(np.prod(np.minimum(F + tail, 1.0)))
    # float products of ~10^4 factors: relative rounding below 1e-11
    return (lo + hi) / 2, (hi - lo) / 2 + 1e-11


def lcm_ratio_denominators(r: int, model: LimitModel, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draws of ``1 / L`` (positive integers) with independent geometrics for ``p <= P``.

    Most primes leave most draws untouched, so for each prime only the draws
    with at least one positive exponent are visited.
    """
    if r < 2:
        raise ValueError("need r >= 2")
    D = [1] * size
    cvals = np.arange(1, r + 1)
    for p in sieve_primes(model.prime_cutoff).tolist():
        q = 1.0 / p
        p_any = -math.expm1(r * math.log1p(-q))
        k = int(rng.binomial(size, p_any))
        if k == 0:
            continue
        hit = rng.choice(size, size=k, replace=False)
        # number of positive exponents given at least one
        w = np.array([comb(r, c) * q ** c * (1 - q) ** (r - c) for c in cvals])
        c = rng.choice(cvals, size=k, p=w / w.sum())
        for idx, cc in zip(hit.tolist(), c.tolist()):
            if cc < 2:
                continue
            g = rng.geometric(1.0 - q, size=cc)
            D[idx] *= p ** int(g.sum() - g.max())
    return np.array(D, dtype=object)


def sample_lcm_ratio_limit(r: int, model: LimitModel, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """Draws of ``L`` in ``(0, 1]``; each equals ``1 / D`` for a positive integer ``D``."""
    return np.array([1.0 / d for d in lcm_ratio_denominators(r, model, rng, size)])


# ---------------------------------------------------------------------------
# volumes


@dataclass(frozen=True)
class VolumeEstimate:
    ell: int
    r: int
    value: float
    lower_bound: bool
    n: Optional[int] = None
    error: float = 0.0
    exact: Optional[Fraction] = None


def default_volume_n(ell: int, r: int) -> int:
    # about 10^9 lattice points
    return int(round(10 ** (9 * ell / r)))


def volume(ell: int, r: int, approximation_n: Optional[int] = None, *,
           estimate_error: bool = True, threads: int = 1) -> VolumeEstimate:
    """Volume of ``{y > 0 : e_l(y) <= 1}`` for ``l < r``.

    The lattice count at ``n`` is a Riemann sum on the grid ``n^{-1/l}`` from
    below, so ``count / n^{r/l}`` is a lower bound.  The reported error is
    ``|estimate(n) - estimate(n/4)|``.
    """
    RegionSpec(ell, r, 0)
    if ell == r:
        raise ValueError("the region has infinite volume when l == r")
    if ell == 1:
        v = Fraction(1, factorial(r))
        return VolumeEstimate(ell, r, float(v), False, None, 0.0, v)
    n = approximation_n or default_volume_n(ell, r)
    value = count(RegionSpec(ell, r, n), threads=threads) / n ** (r / ell)
    err = 0.0
    if estimate_error and n >= 8:
        m = n // 4
        err = abs(value - count(RegionSpec(ell, r, m), threads=threads) / m ** (r / ell))
    return VolumeEstimate(ell, r, value, True, n, err)


# ---------------------------------------------------------------------------
# product laws


def x_star(ell: int, r: int) -> float:
    """Right end of the support of the product law, ``C(r, l)^{-r/l}``."""
    RegionSpec(ell, r, 0)
    return comb(r, ell) ** (-r / ell)


def u12_cdf(x: float) -> float:
    if not 0 <= x <= 0.25:
        raise ValueError("x must lie in [0, 1/4]")
    if x == 0:
        return 0.0
    s = math.sqrt(max(0.0, 1 - 4 * x))
    if s == 0:
        return 1.0
    return 1 - s + 2 * x * math.log((1 + s) / (1 - s))


def u12_density(x: float) -> float:
    if not 0 <= x <= 0.25:
        raise ValueError("x must lie in [0, 1/4]")
    if x == 0:
        return math.inf
    s = math.sqrt(max(0.0, 1 - 4 * x))
    if s == 0:
        return 0.0
    return 2 * math.log((1 + s) / (1 - s))


def default_u_n(ell: int, r: int) -> int:
    return int(round(2e6 ** (ell / (r - 1)))) if r > 1 else 10**6


def _as_fraction(x) -> Fraction:
    return Fraction(x) if not isinstance(x, str) else Fraction(x.strip())


def u_cdf(ell: int, r: int, x, approximation_n: Optional[int] = None) -> float:
    """``P{U_{l,r} <= x}``: ``x`` when ``l == r``, else the lattice ratio at ``n``.

    The lattice value is ``#{i in H : prod(i) <= x n^{r/l}} / |H|`` with the
    cap computed exactly for rational ``x``.
    """
    RegionSpec(ell, r, 0)
    xf = _as_fraction(x)
    if ell == r:
        if not 0 <= xf <= 1:
            raise ValueError("x must lie in [0, 1]")
        return float(xf)
    # x <= x* iff x^l C(r,l)^r <= 1
    if xf < 0 or xf ** ell * comb(r, ell) ** r > 1 + Fraction(1, 10**12):
        raise ValueError(f"x must lie in [0, x*] with x* = {x_star(ell, r)}")
    n = approximation_n or default_u_n(ell, r)
    reg = RegionSpec(ell, r, n)
    total = count(reg)
    return count_constrained(reg, product_cap(xf, n, ell, r)) / total


@dataclass(frozen=True)
class ProductLimitLaw:
    ell: int
    r: int
    approximation_n: Optional[int] = None

    def __post_init__(self):
        RegionSpec(self.ell, self.r, 0)

    @property
    def representation(self) -> str:
        if self.ell == self.r:
            return "closed-form-uniform"
        if (self.ell, self.r) == (1, 2):
            return "closed-form-u12"
        return "lattice-approximated"

    @property
    def support_end(self) -> float:
        return x_star(self.ell, self.r)

    def note(self) -> str:
        if self.representation != "lattice-approximated":
            return "exact"
        return f"lattice ratio at n={self.approximation_n or default_u_n(self.ell, self.r)}"

    def cdf(self, x) -> float:
        rep = self.representation
        if rep == "closed-form-uniform":
            return u_cdf(self.ell, self.r, x)
        if rep == "closed-form-u12":
            return u12_cdf(float(x))
        return u_cdf(self.ell, self.r, x, self.approximation_n)

    def cdf_vec(self, xs: Sequence[float]) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.float64)
        if self.representation == "closed-form-uniform":
            return np.clip(xs, 0.0, 1.0)
        return np.array([self.cdf(min(max(float(x), 0.0), self.support_end)) for x in xs])

    def moment(self, beta: float) -> float:
        """``E[U^beta]``; numeric quadrature for the ``(1, 2)`` density."""
        if self.representation == "closed-form-uniform":
            return 1.0 / (1.0 + beta)
        if self.representation == "closed-form-u12":
            from scipy.integrate import quad

            val, _ = quad(lambda t: t ** beta * u12_density(t), 0.0, 0.25, limit=200)
            return val
        raise NotImplementedError("moments of lattice-approximated laws are not tabulated")


# ---------------------------------------------------------------------------
# spacings


def spacing_marginal_cdf(r: int, x: float) -> float:
    """CDF ``1 - (1 - x)^{r-1}`` of one gap between sorted uniforms."""
    if r < 2:
        raise ValueError("need r >= 2")
    if not 0 <= x <= 1:
        raise ValueError("x must lie in [0, 1]")
    return 1.0 - (1.0 - x) ** (r - 1)


def spacing_joint_density(r: int, point: Sequence[float]) -> float:
    """Density of the first ``r - 1`` gaps: ``(r-1)!`` on the open simplex."""
    if r < 2:
        raise ValueError("need r >= 2")
    if len(point) != r - 1:
        raise ValueError(f"need {r - 1} coordinates")
    if any(x <= 0 for x in point) or sum(point) >= 1:
        raise ValueError("point must lie in the open simplex")
    return float(factorial(r - 1))
