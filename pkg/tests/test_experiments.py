import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperlat.counting import RegionSpec
from hyperlat.experiments import (CSV_COLUMNS, ArithmeticFunction, gcd_limit_gate, hypersum, joint_cdf_gate,
                                  lcm_moment_gate, logcoord_ks_gate, product_ks_gate, reports_to_csv,
                                  valuation_gate)
from oracles import box_points

R = RegionSpec
IND = ArithmeticFunction("indicator_of_one")
IDENT = ArithmeticFunction("identity")


def brute(ell, r, n, f, mode):
    agg = math.gcd if mode == "GCD" else math.lcm
    return sum(f(np.array([agg(*p)]))[0] for p in box_points(ell, r, n))


def test_hypersum_examples():
    res = hypersum(R(2, 2, 4), IND, "GCD")
    # every point except (2, 2) has gcd 1
    assert res.value == 7 and res.count == 8 and res.exact
    assert hypersum(R(2, 2, 1), IDENT, "LCM").value == 1


@settings(max_examples=30)
@given(st.integers(1, 3), st.data(), st.sampled_from(["GCD", "LCM"]))
def test_hypersum_matches_brute_force(r, data, mode):
    ell = data.draw(st.integers(1, r))
    n = data.draw(st.integers(0, 30 if r < 3 else 14))
    for f in (IND, IDENT, ArithmeticFunction("log"), ArithmeticFunction("power", beta=0.5)):
        got = hypersum(R(ell, r, n), f, mode).value
        want = brute(ell, r, n, f, mode)
        if f.integer_valued:
            assert got == want and isinstance(got, int)
        else:
            assert got == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_identity_sum_is_exact_integer():
    n = 2000
    res = hypersum(R(1, 2, n), IDENT, "LCM")
    a = np.arange(1, n)[:, None]
    b = np.arange(1, n)[None, :]
    mask = a + b <= n
    want = int(np.lcm(a, b)[mask].sum(dtype=np.int64))
    assert isinstance(res.value, int) and res.value == want


def test_sampled_hypersum_is_unbiased():
    reg = R(2, 3, 200)
    exact = hypersum(reg, IDENT, "LCM")
    ests = [hypersum(reg, IDENT, "LCM", m=400, seed=s) for s in range(50)]
    mean = np.mean([e.value for e in ests])
    se = np.std([e.value for e in ests], ddof=1) / math.sqrt(len(ests))
    assert abs(mean - exact.value) <= 4 * se
    assert all(e.count == exact.count and not e.exact for e in ests)
    typical = np.median([e.stderr for e in ests])
    assert typical == pytest.approx(np.std([e.value for e in ests]), rel=0.5)


def test_table_function(tmp_path):
    path = tmp_path / "f.txt"
    path.write_text("# k value\n1 1.5\n2, 0.25\n3 0\n4 2\n")
    f = ArithmeticFunction.from_table_file(path)
    assert f(np.array([1, 4, 2])).tolist() == [1.5, 2.0, 0.25]
    res = hypersum(R(2, 2, 4), f, "GCD")
    assert res.value == pytest.approx(7 * 1.5 + 0.25)
    with pytest.raises(ValueError, match="tabulated at 5"):
        f(np.array([5]))
    with pytest.raises(ValueError):
        ArithmeticFunction("table")
    with pytest.raises(ValueError):
        ArithmeticFunction("power")
    with pytest.raises(ValueError):
        ArithmeticFunction("cube")


def test_function_index():
    assert IDENT.index == 1.0
    assert ArithmeticFunction("power", beta=2.5).index == 2.5
    assert ArithmeticFunction("log").index == 0.0
    assert IND.index is None


def test_reports_are_reproducible():
    a = gcd_limit_gate(R(2, 2, 10**4), m=2000, seed=4)
    b = gcd_limit_gate(R(2, 2, 10**4), m=2000, seed=4)
    assert a.to_json() == b.to_json()
    d = json.loads(a.to_json())
    assert d["l"] == 2 and d["rng"] == "numpy-Philox4x64-10" and d["stat_kind"] == "z_score"
    assert d["verdict"] in ("pass", "fail")
    c = gcd_limit_gate(R(2, 2, 10**4), m=2000, seed=5)
    assert c.to_json() != a.to_json()


def test_gcd_gate_exact_mode():
    rep = gcd_limit_gate(R(2, 2, 2000))
    assert rep.exact and rep.seed is None and rep.stat_kind == "relative_error"
    assert rep.empirical == hypersum(R(2, 2, 2000), IND, "GCD").mean
    assert rep.tol == 0.05


def test_csv_output():
    reps = [gcd_limit_gate(R(2, 2, 500)), valuation_gate(R(2, 2, 5000), [2, 3], [[1, 0], [0, 1]])]
    rows = list(csv.reader(io.StringIO(reports_to_csv(reps))))
    assert rows[0] == CSV_COLUMNS
    assert len(rows) == 3 and rows[1][0] == "gcd_limit" and rows[2][0] == "valuation"
    assert float(rows[2][5]) == pytest.approx(1 / 6)


def test_valuation_gate():
    rep = valuation_gate(R(2, 3, 10**4), [2, 3], [[1, 0], [0, 1], [0, 0]])
    assert rep.extra["mu"] == [2, 3, 1]
    assert rep.target == pytest.approx(1 / 6)
    with pytest.raises(ValueError):
        valuation_gate(R(2, 3, 100), [2], [[1], [1]])


def test_lcm_moment_gate_shape():
    regs = [R(2, 2, 10**3), R(2, 2, 10**4)]
    rep = lcm_moment_gate(regs, 1.0, m=3000, seed=1)
    assert rep.extra["ns"] == [10**3, 10**4] and len(rep.extra["errors"]) == 2
    assert rep.target == pytest.approx(0.5 * 0.7307630, rel=1e-4)
    with pytest.raises(ValueError):
        lcm_moment_gate([R(2, 2, 100), R(1, 2, 100)])


def test_product_and_logcoord_gates_run():
    rep = product_ks_gate(R(2, 2, 10**4), m=5000, seed=2)
    assert rep.stat_kind == "ks" and 0 <= rep.stat <= 1
    rep = product_ks_gate(R(1, 2, 10**4), m=5000, seed=2)
    assert rep.passed
    rep = logcoord_ks_gate(2, 10**4, m=3000, seed=3)
    assert rep.extra["atom_at_zero"] > 0
    assert rep.stat >= rep.extra["marginal_ks"]


def test_joint_cdf_gate():
    rep = joint_cdf_gate(2, 3, 2000, ["1/2", 1, "3/2"], m=5000, seed=6, reference_n=8000)
    assert 0 < rep.target < 1 and rep.extra["alpha"] == ["1/2", "1", "3/2"]
    assert rep.passed
    with pytest.raises(ValueError):
        joint_cdf_gate(2, 2, 100, [1, 1])
