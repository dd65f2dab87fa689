import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from hyperlat.limits import (V23_HAT, LimitModel, ProductLimitLaw, gcd_limit_mellin, gcd_limit_pmf,
                             gcd_limit_pmf_tail, lcm_ratio_denominators, lcm_ratio_moment, sample_lcm_ratio_limit,
                             spacing_joint_density, spacing_marginal_cdf, u12_cdf, u12_density, u_cdf, volume,
                             x_star, zeta, zeta_with_error)
from hyperlat.sampling import make_rng


def mp_zeta(s):
    return float(mpmath.zeta(s))


def test_zeta_examples():
    assert zeta(2) == pytest.approx(math.pi**2 / 6, abs=1e-12)
    assert zeta(4) == pytest.approx(math.pi**4 / 90, abs=1e-12)
    assert zeta(3) == pytest.approx(1.2020569031595942, abs=1e-12)
    with pytest.raises(ValueError):
        zeta(1.0)
    with pytest.raises(ValueError):
        zeta(2, eps=0)


@given(st.floats(1.05, 30))
def test_zeta_error_bound_holds(s):
    value, err = zeta_with_error(s, 1e-10)
    assert err <= 1e-10
    assert abs(value - mp_zeta(s)) <= err + 1e-15


def test_gcd_pmf_examples():
    assert gcd_limit_pmf(2, 1) == pytest.approx(0.6079271, abs=1e-7)
    assert gcd_limit_pmf(2, 2) == pytest.approx(0.1519818, abs=1e-7)
    assert gcd_limit_pmf(3, 1) == pytest.approx(0.8319074, abs=1e-7)
    with pytest.raises(ValueError):
        gcd_limit_pmf(1, 1)
    with pytest.raises(ValueError):
        gcd_limit_pmf(2, 0)


@pytest.mark.parametrize("r", [2, 3, 4])
def test_pmf_normalization(r):
    M = 10**4
    head = math.fsum(gcd_limit_pmf(r, m) for m in range(1, M + 1))
    tail = gcd_limit_pmf_tail(r, M)
    assert head <= 1 + 1e-12
    assert head + tail >= 1 - 1e-12
    assert tail < 1e-4 or r == 2
    assert abs(head + tail / 2 - 1) <= tail / 2 + 1e-6


def test_mellin_examples():
    assert gcd_limit_mellin(2, 0) == pytest.approx(1.0, abs=1e-12)
    assert gcd_limit_mellin(3, 1) == pytest.approx(1.3684328, abs=1e-7)
    assert gcd_limit_mellin(2, 0.5) == pytest.approx(1.5881, abs=1e-4)
    with pytest.raises(ValueError):
        gcd_limit_mellin(2, 1)


@pytest.mark.parametrize("r,s", [(2, 0), (2, 0.5), (3, 0), (3, 0.5), (3, 1), (4, 1)])
def test_mellin_matches_pmf_series(r, s):
    M = 10**5
    m = np.arange(1, M + 1, dtype=np.float64)
    head = math.fsum(m**s * m**-r) / zeta(r)
    # sum_{m>M} m^{s-r} <= int_M^inf x^{s-r} dx
    tail = M ** (s - r + 1) / (r - s - 1) / zeta(r)
    target = gcd_limit_mellin(r, s)
    assert head <= target + 1e-10
    assert target - head <= tail + 1e-10


@pytest.mark.parametrize("beta", [1, 2, 0.5, 3])
def test_lcm_moment_r2_closed_form(beta):
    value, err = lcm_ratio_moment(2, beta)
    exact = mp_zeta(2 + beta) / mp_zeta(2)
    assert abs(value - exact) <= err
    assert err < 1e-4


def test_lcm_moment_examples():
    v, e = lcm_ratio_moment(2, 1)
    assert v == pytest.approx(0.7307630, abs=1e-5)
    v, e = lcm_ratio_moment(2, 2)
    assert v == pytest.approx(0.6579737, abs=1e-5)
    v, e = lcm_ratio_moment(3, 1, LimitModel(10**5, 40))
    assert 0 < v < 1 and e < 1e-4
    assert v == pytest.approx(0.44374028, abs=1e-7)  # frozen regression constant


def test_lcm_moment_tightens_with_cutoff():
    _, e_small = lcm_ratio_moment(3, 1, LimitModel(10**3, 40))
    v, e_big = lcm_ratio_moment(3, 1, LimitModel(10**5, 40))
    v2, _ = lcm_ratio_moment(3, 1, LimitModel(10**3, 40))
    assert e_big < e_small
    assert abs(v - v2) <= e_small + e_big


def test_lcm_moment_validation():
    with pytest.raises(ValueError):
        lcm_ratio_moment(1, 1)
    with pytest.raises(ValueError):
        lcm_ratio_moment(2, 0)
    with pytest.raises(ValueError):
        LimitModel(prime_cutoff=1)


@pytest.mark.parametrize("r", [2, 3, 4])
def test_lcm_limit_draws_are_unit_fractions(r):
    model = LimitModel(prime_cutoff=10**4)
    D = lcm_ratio_denominators(r, model, make_rng(5), 4000)
    assert all(isinstance(d, int) and d >= 1 for d in D)
    x = sample_lcm_ratio_limit(r, model, make_rng(5), 4000)
    assert ((x > 0) & (x <= 1)).all()
    assert np.array_equal(x, 1.0 / np.array([float(d) for d in D]))


def test_lcm_limit_r2_law():
    model = LimitModel(prime_cutoff=10**4)
    D = lcm_ratio_denominators(2, model, make_rng(6), 10**5).astype(np.float64)
    for m in (1, 2, 3, 6):
        p = gcd_limit_pmf(2, m)
        se = math.sqrt(p * (1 - p) / len(D))
        assert abs((D == m).mean() - p) <= 4 * se + 1e-4
    mean = (1 / D).mean()
    exact, err = lcm_ratio_moment(2, 1, model)
    assert abs(mean - exact) <= 4 * (1 / D).std() / math.sqrt(len(D)) + err


def test_lcm_limit_r3_mean():
    model = LimitModel(prime_cutoff=10**4)
    x = sample_lcm_ratio_limit(3, model, make_rng(7), 5 * 10**4)
    v, err = lcm_ratio_moment(3, 1, model)
    assert abs(x.mean() - v) <= 4 * x.std() / math.sqrt(len(x)) + err


def test_volume_exact_for_l1():
    v = volume(1, 3)
    assert v.exact == Fraction(1, 6) and v.value == 1 / 6 and not v.lower_bound
    assert volume(1, 2).exact == Fraction(1, 2)
    with pytest.raises(ValueError):
        volume(2, 2)


def test_volume_lower_bound_and_frozen_constant():
    v = volume(2, 3, 10**5)
    assert v.lower_bound and v.n == 10**5
    assert 0 < v.value < float(V23_HAT)
    assert v.error > 0
    assert abs(v.value - float(V23_HAT)) / float(V23_HAT) < 0.05


@pytest.mark.parametrize("r,n", [(2, None), (3, 10**5), (4, 10**4)])
def test_volume_below_product_integral_bound(r, n):
    v = volume(r - 1, r, n, estimate_error=False)
    assert 0 < v.value <= (r - 1) ** (r - 1)


def test_x_star():
    assert x_star(3, 3) == 1.0
    assert x_star(2, 3) == pytest.approx(0.1924501, abs=1e-7)
    assert x_star(1, 2) == 0.25


def test_u12_closed_form():
    assert u12_cdf(0) == 0.0
    assert u12_cdf(0.25) == 1.0
    assert u12_cdf(1 / 8) == pytest.approx(0.73358, abs=1e-5)
    total, _ = quad(u12_density, 0, 0.25, limit=200)
    assert total == pytest.approx(1.0, abs=1e-6)
    part, _ = quad(u12_density, 0, 1 / 8, limit=200)
    assert part == pytest.approx(u12_cdf(1 / 8), abs=1e-6)
    grid = np.linspace(0, 0.25, 501)
    vals = [u12_cdf(x) for x in grid]
    assert (np.diff(vals) >= -1e-15).all()
    with pytest.raises(ValueError):
        u12_cdf(0.3)
    with pytest.raises(ValueError):
        u12_density(-0.1)


def test_u_cdf():
    assert u_cdf(3, 3, 0.3) == pytest.approx(0.3)
    assert u_cdf(1, 2, Fraction(1, 4), 2000) == 1.0
    assert u_cdf(1, 2, Fraction(1, 8), 4000) == pytest.approx(0.73358, abs=2e-3)
    assert u_cdf(2, 3, x_star(2, 3) * (1 - 1e-13), 2000) <= 1.0
    with pytest.raises(ValueError):
        u_cdf(1, 2, 0.3)
    with pytest.raises(ValueError):
        u_cdf(2, 2, 1.5)


@given(st.lists(st.fractions(0, Fraction(19, 100), max_denominator=1000), min_size=2, max_size=6))
def test_u_cdf_monotone(xs):
    xs = sorted(xs)
    vals = [u_cdf(2, 3, x, 500) for x in xs]
    assert all(0 <= v <= 1 for v in vals)
    assert vals == sorted(vals)


def test_product_law():
    law = ProductLimitLaw(2, 2)
    assert law.representation == "closed-form-uniform" and law.note() == "exact"
    assert law.moment(1) == 0.5
    assert law.cdf_vec([-1, 0.5, 2]).tolist() == [0.0, 0.5, 1.0]
    law12 = ProductLimitLaw(1, 2)
    assert law12.cdf(0.25) == 1.0 and law12.support_end == 0.25
    # E U_{1,2} = int_0^{1/4} (1 - F(x)) dx
    alt, _ = quad(lambda x: 1 - u12_cdf(x), 0, 0.25)
    assert law12.moment(1) == pytest.approx(alt, abs=1e-8)
    law23 = ProductLimitLaw(2, 3, approximation_n=400)
    assert law23.representation == "lattice-approximated" and "400" in law23.note()
    assert law23.cdf_vec([1.0])[0] == 1.0
    with pytest.raises(NotImplementedError):
        law23.moment(1)


def test_spacings():
    assert spacing_marginal_cdf(2, 0.37) == pytest.approx(0.37)
    assert spacing_marginal_cdf(3, 0.5) == 0.75
    assert spacing_joint_density(3, (0.2, 0.3)) == 2.0
    assert spacing_joint_density(4, (0.1, 0.1, 0.1)) == 6.0
    for bad in [(0.5, 0.5), (0.0, 0.2), (0.2,)]:
        with pytest.raises(ValueError):
            spacing_joint_density(3, bad)
    with pytest.raises(ValueError):
        spacing_marginal_cdf(3, 1.5)
