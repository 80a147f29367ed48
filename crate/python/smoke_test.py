"""Smoke test for the `anscombe` extension module.

Build it first: pip install --no-build-isolation -e crates/python
Then: python3 python/smoke_test.py
"""

import json
import math
import pathlib

import anscombe

SCENARIOS = pathlib.Path(__file__).resolve().parent.parent / "crates" / "core" / "scenarios"


def check_helpers():
    assert anscombe.normal_cdf(0.0) == 0.5
    assert abs(anscombe.normal_cdf(1.96) - 0.975) < 1e-3
    assert anscombe.window_bounds(100, 0.1) == (90, 110)
    assert anscombe.window_bounds(1, 0.5) == (1, 1)

    # the law of X_n is a point mass at 1/n; the target is a point mass at 0
    marginals = [[(1.0 / n, 1.0)] for n in range(1, 6)]
    forms = anscombe.five_forms(marginals, [(0.0, 1.0)], alphas=[0.1, 0.3, 0.5])
    assert len(forms) == 5
    assert max(forms) - min(forms) < 1e-9, forms


def check_runs():
    sc = anscombe.Scenario.from_path(str(SCENARIOS / "verify" / "degenerate.json"), samples=500)
    assert sc.samples == 500
    rep = sc.verify(threads=2)
    assert rep.passed, rep.summary
    doc = json.loads(rep.json())
    assert doc["command"] == "verify" and doc["verdict"] == "pass"
    assert rep.json() == sc.verify(threads=1).json()

    text = (SCENARIOS / "enumerable" / "e02_alternating_two_point.json").read_text()
    sc = anscombe.Scenario.from_json(text, seed=9, samples=5000)
    cmp = sc.compare()
    assert cmp.passed, cmp.summary
    rows = {r["quantity"]: r for r in json.loads(cmp.json())["comparison"]}
    assert math.isclose(rows["chi"]["oracle"], 1.0)
    assert cmp.csv().splitlines()[0] == "quantity,epsilon,delta,alpha,n,value,stderr"

    oracle = json.loads(sc.oracle().json())["oracle"]
    assert math.isclose(oracle["chi"], 1.0)


def check_errors():
    try:
        anscombe.Scenario.from_json('{"seed": 1,')
    except ValueError as e:
        assert "cli::ParseError" in str(e)
    else:
        raise AssertionError("malformed config accepted")


if __name__ == "__main__":
    check_helpers()
    check_runs()
    check_errors()
    print("python smoke test passed")
