"""Exact finite-n averages against their limits along a range of thresholds.

Shows how slowly the coprime fraction and the mean of 1/gcd over the divisor
region H(2, 2, n) approach 1/zeta(2) and zeta(3)/zeta(2).

    python3 scripts/finite_n_drift.py --kmax 8
"""

import argparse
import math

from hyperlat.acceptance import inverse_gcd_mean
from hyperlat.counting import RegionSpec, count
from hyperlat.experiments import ArithmeticFunction, hypersum
from hyperlat.limits import zeta


def coprime_fraction(n):
    # sum over d of mu(d) W_2(n / d^2), divided by W_2(n)
    mu = [1] * (math.isqrt(n) + 1)
    is_comp = [False] * len(mu)
    for p in range(2, len(mu)):
        if not is_comp[p]:
            for k in range(p, len(mu), p):
                if k > p:
                    is_comp[k] = True
                mu[k] = -mu[k]
            for k in range(p * p, len(mu), p * p):
                mu[k] = 0
    total = sum(mu[d] * count(RegionSpec(2, 2, n // (d * d))) for d in range(1, len(mu)) if mu[d])
    return total / count(RegionSpec(2, 2, n))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kmax", type=int, default=7)
    a = ap.parse_args()
    t1, t2 = 1 / zeta(2), zeta(3) / zeta(2)
    small = RegionSpec(2, 2, 10**3)
    check = hypersum(small, ArithmeticFunction("indicator_of_one"), "GCD").mean
    assert abs(check - coprime_fraction(10**3)) < 1e-12
    print(f"{'n':>12} {'coprime':>10} {'rel.err':>8} {'E 1/gcd':>10} {'rel.err':>8}")
    for k in range(3, a.kmax + 1):
        n = 10**k
        c, g = coprime_fraction(n), inverse_gcd_mean(n)
        print(f"{n:>12} {c:10.6f} {abs(c - t1) / t1:8.4f} {g:10.6f} {abs(g - t2) / t2:8.4f}")


if __name__ == "__main__":
    main()
