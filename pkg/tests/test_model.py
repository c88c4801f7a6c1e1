import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraclind.errors import (
    DimensionMismatch,
    DiophantineViolation,
    NonPrimitive,
    NotResonant,
    ParseError,
    RealityViolation,
    SingularHessian,
    ValidationError,
)
from fraclind.model import (
    GOLDEN,
    ComponentLabel,
    Frequency,
    Model,
    adapt_coordinates,
    all_labels,
    average_over_fast_angles,
    best_diophantine_constant,
    build_function,
    counterexample_model,
    custom3_model,
    custom_model,
    dump_model,
    from_adapted,
    load_model,
    model_from_dict,
    model_to_dict,
    quadratic_h0,
    tensor_derivative,
    to_adapted,
)
from fraclind.resonance import slow_derivative


def test_cos_alpha_terms():
    f = build_function(2, {((1,), 0, (0, 0)): 0.5, ((-1,), 0, (0, 0)): 0.5})
    assert f.terms == {((1,), 0, (0, 0)): 0.5, ((-1,), 0, (0, 0)): 0.5}
    for a in (0.0, 0.7, 2.0):
        assert f(np.zeros(2), [a], 0.3) == pytest.approx(math.cos(a), abs=1e-15)


@pytest.mark.parametrize("beta", [0.0, math.pi / 4, 1.0])
def test_sin_cubed_pointwise(counterexample, beta):
    f0 = average_over_fast_angles(counterexample.f)
    assert f0(np.zeros(2), [0.3], beta).real == pytest.approx(math.sin(beta) ** 3 / 3, abs=1e-15)
    assert abs(f0(np.zeros(2), [0.3], beta).imag) < 1e-15


def test_missing_conjugate_rejected():
    with pytest.raises(RealityViolation):
        build_function(2, {((1,), 1, (0, 0)): 1.0 + 2.0j})


def test_inconsistent_conjugate_rejected():
    with pytest.raises(RealityViolation):
        build_function(2, {((1,), 0, (0, 0)): 1.0, ((-1,), 0, (0, 0)): 2.0})


def test_completion_adds_partner():
    f = build_function(2, {((1,), 2, (1, 0)): 1.0 + 2.0j}, complete=True)
    assert f.terms[((-1,), -2, (1, 0))] == pytest.approx(1.0 - 2.0j)
    assert f.reality_defect() == 0


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        build_function(2, {((1, 0), 0, (0, 0)): 1.0})
    with pytest.raises(DimensionMismatch):
        build_function(1, {})


def test_average_over_fast_angles(counterexample):
    avg = average_over_fast_angles(counterexample.f)
    assert all(k[0] == (0,) for k in avg.terms)
    no_zero = build_function(2, {((1,), 0, (0, 0)): 0.5, ((-1,), 0, (0, 0)): 0.5})
    assert average_over_fast_angles(no_zero).is_zero()
    slow = build_function(2, {((0,), 1, (0, 0)): 0.5, ((0,), -1, (0, 0)): 0.5})
    assert average_over_fast_angles(slow).terms == slow.terms


def test_tensor_derivative_angle_rule():
    f = build_function(2, {((1,), 0, (0, 0)): 0.5, ((-1,), 0, (0, 0)): 0.5})
    d = tensor_derivative(f, [2])
    assert d[(1,)] == pytest.approx(0.5j)
    assert d[(-1,)] == pytest.approx(-0.5j)


def test_counterexample_slow_derivatives(counterexample):
    f0 = average_over_fast_angles(counterexample.f)
    for order in (1, 2):
        assert abs(slow_derivative(f0, order, 0.0)) < 1e-15
    assert slow_derivative(f0, 3, 0.0) == pytest.approx(2.0, abs=1e-12)


def test_component_labels():
    names = [lab.name for lab in all_labels(3)]
    assert names == ["A1", "A2", "B", "alpha1", "alpha2", "beta"]
    for lab in all_labels(3):
        assert ComponentLabel.parse(lab.name, 3) == lab
        assert lab.partner().partner() == lab
    assert ComponentLabel(2, 3).is_slow and ComponentLabel(5, 3).is_slow
    with pytest.raises(ValidationError):
        ComponentLabel.parse("gamma", 2)
    with pytest.raises(DimensionMismatch):
        ComponentLabel(4, 2)


def test_adapt_identity():
    S, omega = adapt_coordinates([1.0, GOLDEN, 0.0], [0, 0, 1])
    assert np.array_equal(S, np.eye(3, dtype=int))
    assert omega == pytest.approx([1.0, GOLDEN])


def test_adapt_golden_resonance():
    omega0 = np.array([1 + GOLDEN, 2 + 2 * GOLDEN])
    S, omega = adapt_coordinates(omega0, [2, -1])
    assert round(np.linalg.det(S)) == 1
    assert S.T @ np.array([omega[0], 0.0]) == pytest.approx(omega0, abs=1e-12)
    actions, angles = to_adapted(S, [0.3, -0.2], [1.0, 2.0])
    back = from_adapted(S, actions, angles)
    assert back[0] == pytest.approx([0.3, -0.2]) and back[1] == pytest.approx([1.0, 2.0])


def test_adapt_errors():
    with pytest.raises(NonPrimitive):
        adapt_coordinates([1.0, 1.0], [2, -2])
    with pytest.raises(NotResonant):
        adapt_coordinates([1.0, GOLDEN], [1, -1])


def test_frequency_certificate():
    C0 = best_diophantine_constant([GOLDEN], 1.0, 50)
    assert Frequency.certified([GOLDEN]).C0 == C0
    with pytest.raises(DiophantineViolation):
        Frequency((GOLDEN,), 2 * C0)


def test_model_validation():
    f = custom_model().f
    with pytest.raises(DimensionMismatch):
        Model(2, (1.0, 2.0), quadratic_h0(2), f)
    with pytest.raises(SingularHessian):
        Model(2, (1.0,), quadratic_h0(2, [1.0, 0.0]), f)


@pytest.mark.parametrize("builder", [counterexample_model, custom_model, custom3_model])
def test_shipped_model_files(builder, models_dir):
    model = builder()
    loaded = load_model(models_dir / f"{model.name}.json")
    assert loaded == model


def test_round_trip_file(tmp_path):
    model = custom3_model()
    path = tmp_path / "m.json"
    dump_model(model, path)
    assert load_model(path) == model
    first = path.read_text()
    dump_model(load_model(path), path)
    assert path.read_text() == first


def test_reality_pairs_optional():
    data = {"N": 2, "omega": GOLDEN, "H0": [{"actionExp": [2, 0], "re": 0.5}, {"actionExp": [0, 2], "re": 0.5}],
            "f": [{"nu": [1], "m": 0, "actionExp": [0, 0], "re": 0.5}]}
    model = model_from_dict(data)
    assert model.f.terms[((-1,), 0, (0, 0))] == 0.5


@pytest.mark.parametrize("text, fragment", [
    ('{"N": 2, "omega": [1.0], "H0": []}', "missing field 'f'"),
    ('{"N": 2, "omega": [1.0], "H0": [], "f": [{"nu": "x"}]}', "f[0]"),
    ('{"N": 2,\n "omega": [1.0\n}', "line 3"),
    ('[1, 2]', "top level"),
    ('{"N": 2, "omega": [1.0], "H0": [], "f": [{"nu": [1, 0]}]}', "f:"),
])
def test_parse_diagnostics(tmp_path, text, fragment):
    path = tmp_path / "bad.json"
    path.write_text(text)
    with pytest.raises(ParseError, match=fragment.replace("[", r"\[").replace("]", r"\]")):
        load_model(path)


coeff = st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False)
term = st.tuples(st.integers(-3, 3), st.integers(-3, 3), st.integers(0, 2), st.integers(0, 2), coeff)


def real_function(terms):
    out = {}
    for nu, m, p, q, c in terms:
        for key, val in ((((nu,), m, (p, q)), c), (((-nu,), -m, (p, q)), np.conj(c))):
            out[key] = out.get(key, 0.0) + val
    return build_function(2, out)


@settings(max_examples=50, deadline=None)
@given(st.lists(term, min_size=1, max_size=6))
def test_json_round_trip_property(terms):
    f = real_function(terms)
    model = Model(2, (GOLDEN,), quadratic_h0(2), f, "random")
    data = json.loads(json.dumps(model_to_dict(model)))
    again = model_from_dict(data)
    assert again.f.terms.keys() == model.f.terms.keys()
    for k, c in model.f.terms.items():
        assert again.f.terms[k] == c
    assert again.f.reality_defect() == 0


@settings(max_examples=50, deadline=None)
@given(st.lists(term, min_size=1, max_size=6), st.floats(-3, 3), st.floats(-3, 3),
       st.lists(st.floats(-1, 1), min_size=2, max_size=2))
def test_real_valued_property(terms, alpha, beta, actions):
    f = real_function(terms)
    val = f(actions, [alpha], beta)
    assert abs(val.imag) <= 1e-12 * max(1.0, sum(abs(c) for c in f.terms.values()) * 4)


@settings(max_examples=30, deadline=None)
@given(st.lists(term, min_size=1, max_size=4), st.integers(0, 3), st.integers(0, 3))
def test_derivatives_commute(terms, i, j):
    f = real_function(terms)
    a = f.derivative([i, j]).terms
    b = f.derivative([j, i]).terms
    assert a.keys() == b.keys()
    for k in a:
        assert a[k] == pytest.approx(b[k])
