import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraclind.errors import AssumptionAViolated, DegenerateGrid, ValidationError
from fraclind.lindstedt import (
    check_compatibility,
    evaluate_torus,
    expand,
    new_series,
    residual,
    residual_direct,
    residual_scaling,
    select_branch,
    solve_order,
)
from fraclind.model import GOLDEN

ETAS = (1e-3, 2e-3, 5e-3, 1e-2)


def test_order_k0_action_modes(series6):
    # A^(k0)_nu = -sigma nu f_nu(beta0) / (omega.nu) with f_{+-1}(0) = 1/2
    for nu in [(1,), (-1,)]:
        assert series6.coefficient(2, nu, 0) == pytest.approx(-1 / (2 * GOLDEN), abs=1e-15)


def test_order_k0_slow_action_modes(series6):
    # B^(k0)_nu = -sigma [d_beta f]_nu / (i omega.nu) with [d_beta f]_{+-1}(0) = 1/2
    for nu in [(1,), (-1,)]:
        expected = -0.5 / (1j * GOLDEN * nu[0])
        assert series6.coefficient(2, nu, 1) == pytest.approx(expected, abs=1e-15)


def test_beta1_is_branch_root(series6):
    assert series6.beta1 == pytest.approx(math.sqrt(3 / (2 * GOLDEN**2)), abs=1e-15)
    assert series6.branch_label == "plus"


def test_below_k0_only_leaf(custom, custom_res):
    s = expand(custom, 1, resonance=custom_res)
    nz = np.argwhere(s.coeffs[1] != 0)
    assert len(nz) == 1 and tuple(nz[0]) == (3, 0)


def test_counterexample_refused(counterexample):
    with pytest.raises(AssumptionAViolated):
        expand(counterexample, 4)


def test_branch_selection(custom_res):
    assert select_branch(custom_res, "minus") < 0 < select_branch(custom_res, "plus")
    assert select_branch(custom_res, "auto") == custom_res.beta1_branches[0]
    with pytest.raises(ValidationError):
        select_branch(custom_res, "sideways")


def test_orders_in_sequence(custom, custom_res):
    s = new_series(custom, custom_res, custom_res.beta1_branches[0], 3)
    with pytest.raises(ValidationError):
        solve_order(s, 2)


def test_compatibility_identities(series6, custom_res):
    for k, vals in series6.compatibility.items():
        assert max(vals) < 1e-9, k
    # at k = 2 k0 the slow-angle identity is sigma a + c beta1^k0
    assert abs(custom_res.sigma * custom_res.a + custom_res.c * series6.beta1**2) < 1e-15
    assert check_compatibility(series6, 4) == series6.compatibility[4]


def test_evaluate_torus_zero_eta(series6):
    psi = 0.7
    point = evaluate_torus(series6, 0.0, [psi])
    assert point == pytest.approx([0, 0, psi, 0.0], abs=1e-15)


@pytest.mark.parametrize("eta", [1e-2, 1e-3])
def test_evaluate_torus_leading_shift(series6, eta):
    point = evaluate_torus(series6, eta, [0.0])
    assert abs(point.imag).max() < 1e-12
    # beta = beta0 + eta beta1 + O(eta^2)
    assert abs(point.real[3] - eta * series6.beta1) < 5 * eta**2


def test_residual_exponent(series6):
    rep = residual_scaling(series6, ETAS)
    assert rep.fitted_exponent >= 6.5


def test_residual_routes_agree(series6):
    assert residual(series6, 0.05) == pytest.approx(residual_direct(series6, 0.05), rel=1e-6)


def test_residual_exponent_tracks_order(custom, custom_res):
    slopes = [residual_scaling(expand(custom, K, resonance=custom_res), ETAS).fitted_exponent for K in (4, 5, 6)]
    assert np.diff(slopes) == pytest.approx([1.0, 1.0], abs=0.1)


def test_corrupted_beta1_control(custom, custom_res):
    s = expand(custom, 4, resonance=custom_res)
    s.set_beta(1, 1.1 * s.beta1)
    rep = residual_scaling(s, ETAS)
    assert rep.fitted_exponent <= 2 * custom_res.k0 + 0.5


@pytest.mark.parametrize("grid", [(1e-3, 2e-3, 5e-3), (1e-3, 1e-3, 2e-3, 5e-3), (1e-3, 2e-3, 5e-3, 0.1)])
def test_degenerate_grids(series6, grid):
    with pytest.raises(DegenerateGrid):
        residual_scaling(series6, grid)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.0, 2 * math.pi), st.floats(1e-4, 1e-2))
def test_torus_is_real(series6, psi, eta):
    assert abs(evaluate_torus(series6, eta, [psi]).imag).max() < 1e-12
