import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from fraclind.errors import AssumptionAViolated, DegenerateAverage, DomainViolation, OrderExceeded
from fraclind.model import GOLDEN, Model, build_function, quadratic_h0, trig_terms_2d
from fraclind.resonance import (
    TorusType,
    analyze,
    beta1_branches,
    classify_torus,
    constant_a,
    constant_a_special,
    degeneracy_order,
    find_stationary_points,
    first_order_correction,
    heuristic_normal_form,
)


def slow_function(entries):
    return build_function(2, trig_terms_2d([(0, m, c) for m, c in entries]))


SIN3 = [(1, -1j / 8), (-1, 1j / 8), (3, 1j / 24), (-3, -1j / 24)]
COS = [(1, 0.5), (-1, 0.5)]


def a_oracle_custom(omega):
    """Closed-form mode sum differentiated symbolically (nu = +-1 terms)."""
    b, w = sp.symbols("beta omega", real=True)
    f1 = (sp.sin(b) + sp.cos(2 * b)) / 2
    summand = 2 * (f1**2 + sp.diff(f1, b) ** 2) / w**2
    expr = sp.Rational(1, 2) * sp.diff(summand, b)
    return float(expr.subs({b: 0, w: omega}))


def test_a_oracle_matches_closed_form():
    assert a_oracle_custom(GOLDEN) == pytest.approx(-3 / (2 * GOLDEN**2), abs=1e-15)


def test_stationary_points_sin_cubed():
    roots = find_stationary_points(slow_function(SIN3))
    for target in (0.0, math.pi / 2, math.pi, 3 * math.pi / 2):
        assert min(abs(r - target) for r in roots) < 1e-10


def test_stationary_points_cos():
    roots = find_stationary_points(slow_function(COS))
    assert roots == pytest.approx([0.0, math.pi], abs=1e-12)


def test_stationary_points_constant():
    with pytest.raises(DegenerateAverage):
        find_stationary_points(build_function(2, {}))


def test_degeneracy_order():
    assert degeneracy_order(slow_function(SIN3), 0.0) == (2, pytest.approx(1.0, abs=1e-14))
    k0, c = degeneracy_order(slow_function(COS), 0.0)
    assert k0 == 1 and c == pytest.approx(-1.0)
    flat = build_function(2, {((0,), 0, (0, 0)): 1.0})
    with pytest.raises(OrderExceeded):
        degeneracy_order(flat, 0.0)


def test_first_order_modes_counterexample(counterexample):
    xp = first_order_correction(counterexample, 0.0)
    n = 2
    for nu in [(1,), (-1,)]:
        div = 1j * counterexample.small_divisor(nu)
        dbeta = counterexample.f.derivative([3]).fourier_coefficient(nu, np.zeros(2), 0.0)
        assert div * xp.mode(nu)[n - 1] == pytest.approx(-dbeta, abs=1e-15)
    assert xp.b0_pending


coeff = st.complex_numbers(max_magnitude=1.0, allow_nan=False, allow_infinity=False)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(-3, 3), st.integers(-3, 3), coeff), min_size=1, max_size=5))
def test_first_order_invariants(terms):
    entries = []
    for nu, m, c in terms:
        entries += [(nu, m, c), (-nu, -m, np.conj(c))]
    f = build_function(2, trig_terms_2d(entries))
    model = Model(2, (GOLDEN,), quadratic_h0(2), f)
    xp = first_order_correction(model, 0.3)
    hess = model.hessian()
    for nu in f.modes():
        if not any(nu):
            continue
        div = 1j * model.small_divisor(nu)
        grad = np.array([f.derivative([g]).fourier_coefficient(nu, np.zeros(2), 0.3) for g in range(4)])
        v = xp.mode(nu)
        assert np.allclose(div * v[:2], -grad[2:], atol=1e-10)
        assert np.allclose(div * v[2:], grad[:2] + hess @ v[:2], atol=1e-10)


def test_constant_a_counterexample(counterexample):
    assert abs(constant_a(counterexample, 0.0)) < 1e-15
    assert abs(constant_a_special(counterexample, 0.0)) < 1e-15


def test_constant_a_custom(custom):
    oracle = a_oracle_custom(GOLDEN)
    assert constant_a(custom, 0.0) == pytest.approx(oracle, abs=1e-12)
    assert constant_a_special(custom, 0.0) == pytest.approx(oracle, abs=1e-12)


def test_constant_a_single_mode_constant_modulus():
    # f_1(beta) = exp(i beta) / 2: constant modulus and constant |d_beta f_1|
    f = build_function(2, trig_terms_2d([(1, 1, 0.5), (-1, -1, 0.5)] + [(0, m, c) for m, c in SIN3]))
    model = Model(2, (GOLDEN,), quadratic_h0(2), f)
    assert abs(constant_a(model, 0.0)) < 1e-15
    assert abs(constant_a_special(model, 0.0)) < 1e-15


def test_constant_a_special_domain(custom):
    f = custom.f + build_function(2, {((1,), 0, (1, 0)): 0.5, ((-1,), 0, (1, 0)): 0.5})
    with pytest.raises(DomainViolation):
        constant_a_special(Model(2, custom.omega, custom.H0, f), 0.0)


def test_beta1_branches():
    assert beta1_branches(-1.0, 1.0, 1, 3) == pytest.approx([1.0])
    a = -3 / (2 * GOLDEN**2)
    assert sorted(beta1_branches(a, 1.0, 1, 2)) == pytest.approx([-math.sqrt(-a), math.sqrt(-a)])
    with pytest.raises(AssumptionAViolated):
        beta1_branches(0.0, 1.0, 1, 2)
    assert beta1_branches(1.0, 1.0, 1, 2) == []


def test_classification():
    assert classify_torus(3, 1.0, 1.0, -1, -1.0) == TorusType.HYPERBOLIC
    b = math.sqrt(3 / (2 * GOLDEN**2))
    a = -3 / (2 * GOLDEN**2)
    assert classify_torus(2, 1.0, a, 1, b) == TorusType.ELLIPTIC
    assert classify_torus(2, 1.0, a, 1, -b) == TorusType.HYPERBOLIC


def test_analyze_reports(custom_res, counterexample):
    assert custom_res.k0 == 2 and custom_res.exists
    labels = {d["label"]: d["type"] for d in custom_res.as_dict()["branches"]}
    assert labels == {"plus": "elliptic", "minus": "hyperbolic"}
    rep = analyze(counterexample)
    assert (rep.k0, rep.a, rep.exists) == (2, 0.0, False)
    assert rep.as_dict()["existsFlag"] is False


def test_analyze_nondegenerate_guard():
    f = build_function(2, trig_terms_2d([(0, 1, 0.5), (0, -1, 0.5), (1, 1, 0.25), (-1, -1, 0.25)]))
    rep = analyze(Model(2, (GOLDEN,), quadratic_h0(2), f))
    assert rep.k0 == 1 and not rep.exists and "out of scope" in rep.note


def test_normal_form_counterexample(counterexample):
    rep = heuristic_normal_form(counterexample, 0.0)
    assert abs(rep.a_from_phi) < 1e-14
    assert rep.delta_beta0 == []


@pytest.mark.parametrize("eps", [1e-2, 1e-4])
def test_normal_form_custom(custom, eps):
    rep = heuristic_normal_form(custom, 0.0, eps)
    a = -3 / (2 * GOLDEN**2)
    assert rep.a_from_phi == pytest.approx(a, abs=1e-12)
    assert sorted(rep.delta_beta0) == pytest.approx([-math.sqrt(-a * eps), math.sqrt(-a * eps)], rel=1e-12)
    assert sorted(t.value for t in rep.stability) == ["elliptic", "hyperbolic"]


def test_normal_form_without_fast_modes():
    # no fast harmonics: the generator and its bracket vanish identically
    f = build_function(2, trig_terms_2d([(0, m, c) for m, c in SIN3]))
    rep = heuristic_normal_form(Model(2, (GOLDEN,), quadratic_h0(2), f), 0.0)
    assert rep.psi1 == {} and rep.phi0 == {}
    assert rep.a_from_phi == 0.0
