"""Recompute the regression constants pinned in the test suite.

    python3 scripts/freeze_constants.py [--threads 4]
"""

import argparse
from fractions import Fraction

from hyperlat.counting import RegionSpec, count
from hyperlat.limits import V23_HAT, LimitModel, lcm_ratio_moment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--threads", type=int, default=1)
    a = ap.parse_args()

    counts = {n: count(RegionSpec(2, 3, n), threads=a.threads) for n in (10**6, 4 * 10**6)}
    v1, v4 = (Fraction(c, round(n**1.5)) for n, c in counts.items())
    print(f"|H(2,3,1e6)| = {counts[10**6]}  ratio {float(v1):.9f}")
    print(f"|H(2,3,4e6)| = {counts[4 * 10**6]}  ratio {float(v4):.9f}")
    print(f"relative gap {abs(float(v1 - v4)) / float(v4):.3e}")
    print(f"frozen V23_HAT {V23_HAT} = {float(V23_HAT):.12f}  matches: {v4 == V23_HAT}")

    model = LimitModel()
    for r, beta in [(2, 1.0), (2, 2.0), (3, 1.0), (4, 1.0)]:
        v, e = lcm_ratio_moment(r, beta, model)
        print(f"E[L^{beta:g}] r={r}: {v:.10f} +/- {e:.2e}  (P={model.prime_cutoff}, J={model.exponent_cap})")


if __name__ == "__main__":
    main()
