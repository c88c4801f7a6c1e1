"""One test per acceptance criterion; each prints its pass/fail line."""
import math

import pytest

from fraclind import acceptance as acc


def report(result):
    print(result.line())
    for key, value in result.metrics.items():
        print(f"    {key}: {value}")
    return result.metrics


def test_criterion_01_counterexample():
    r = acc.criterion_counterexample()
    m = report(r)
    assert m["k0"] == 2
    assert abs(m["dTop"] - 2.0) < 1e-12
    assert abs(m["a"]) < 1e-10
    assert m["refused"]
    assert r.passed


def test_criterion_02_constant_a():
    r = acc.criterion_constant_a()
    m = report(r)
    assert m["generalVsSpecial"] < 1e-10
    assert m["generalVsNormalForm"] < 1e-10
    assert m["specialVsNormalForm"] < 1e-10
    assert m["generalVsDerived"] < 1e-10
    assert r.passed


def test_criterion_03_branches():
    r = acc.criterion_branches()
    m = report(r)
    assert max(m["residuals"]) < 1e-12
    assert sorted(m["types"]) == ["elliptic", "hyperbolic"]
    assert r.passed


def test_criterion_04_orders():
    r = acc.criterion_orders(K=6)
    m = report(r)
    assert m["maxCompatibility"] < 1e-9
    assert m["fittedExponent"] >= 6 + 0.5
    assert m["runtime"] < 30
    assert r.passed


def test_criterion_05_trees():
    r = acc.criterion_trees()
    m = report(r)
    assert m["maxDegree"] == 2 * 2 + 2
    assert m["maxRelativeError"] < 1e-10
    assert m["lineCountFailures"] == []
    assert m["runtime"] < 120
    assert r.passed


def test_criterion_06_self_energy_structure():
    r = acc.criterion_self_energy_structure()
    m = report(r)
    assert m["lowestBlocksExact"] and m["symmetric"]
    assert m["patternViolations"] == []
    assert m["determinantMaxRelError"] < 1e-10
    assert r.passed


def test_criterion_07_propagator_bound():
    r = acc.criterion_propagator_bound()
    m = report(r)
    assert m["eta"] == 1e-2
    assert m["checked"] > 0 and m["violations"] == []
    assert r.passed


def test_criterion_08_cancellations():
    r = acc.criterion_cancellations()
    m = report(r)
    assert m["valueMax"] < 1e-10
    assert m["derivativeMax"] < 1e-7
    assert m["singleClusterMax"] > 1e-6
    assert r.passed


def test_criterion_09_eigenvalue():
    r = acc.criterion_eigenvalue()
    m = report(r)
    assert m["errors"][-1] < 1e-6
    assert m["resolventBound"]["minRatio"] >= 1.0
    assert abs(m["slope"] - 1.0) <= 0.3
    assert r.passed


def test_criterion_10_excluded_measure():
    r = acc.criterion_excluded_measure()
    m = report(r)
    assert 0 < m["measure"] <= m["bound"]
    assert m["ratio"] == pytest.approx(2**-0.5, rel=0.1)
    assert m["target"] == pytest.approx(1 / math.sqrt(2))
    assert r.passed
