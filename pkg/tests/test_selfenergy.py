import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from fraclind.errors import BoundViolated, NonMonotone, OutOfRange, SingularDenominator
from fraclind.model import GOLDEN, Model, build_function
from fraclind.resonance import analyze
from fraclind.selfenergy import (
    FirstBandSelfEnergy,
    ScaleBand,
    allowed_pattern,
    cancellation_family_check,
    check_symmetry,
    check_symmetry_at,
    divisor_grid,
    e_matrix,
    eigenvalue_function,
    ell_convergence,
    ell_limit,
    excluded_measure_single_scale,
    invertibility_condition,
    invertibility_expression,
    resolvent_lower_bound_scan,
    lowest_eigenvalue_estimate,
    n0_from_epsilon,
    n0_from_threshold,
    operator_norm,
    propagator_bound_scan,
    resummed_propagator,
    scale_functions,
    self_energy_scale_minus1,
    smooth_step,
    zero_pattern_violations,
)


def sin4_variant(base, kappa):
    """``f + kappa sin^4(beta) / 4``; sin^4 = (3 - 4 cos 2b + cos 4b) / 8."""
    terms = dict(base.f.terms)
    for m, c in [(0, 3 / 8), (2, -1 / 4), (-2, -1 / 4), (4, 1 / 16), (-4, 1 / 16)]:
        key = ((0,), m, (0, 0))
        terms[key] = terms.get(key, 0) + kappa / 4 * c
    return Model(2, base.omega, base.H0, build_function(2, terms), "sin4")


# -- structure ----------------------------------------------------------

def test_lowest_degree_blocks(M0, custom):
    assert np.array_equal(M0.coeffs[0].real[2:, :2], custom.hessian())
    assert np.count_nonzero(M0.coeffs[0]) == 2


def test_degree_k0_truncation_is_hessian_of_average(custom, custom_res):
    # action-dependent average so that the Q block is populated
    extra = build_function(2, {((0,), 1, (0, 1)): -0.5j, ((0,), -1, (0, 1)): 0.5j,
                               ((0,), 0, (2, 0)): 0.25})
    model = Model(2, custom.omega, custom.H0, custom.f + extra, "extra")
    res = analyze(model)
    M = self_energy_scale_minus1(model, res, degree=res.k0, branch="plus")
    f0 = {k: c for k, c in model.f.terms.items() if k[0] == (0,)}
    f0 = build_function(2, f0)
    hess = np.array([[f0.derivative([i, j])(np.zeros(2), [0.0], res.beta0).real for j in range(4)]
                     for i in range(4)])
    expected = res.sigma * e_matrix(2) @ hess
    assert np.allclose(M.coeffs[res.k0].real, expected, atol=1e-14)
    assert np.all(M.coeffs[1] == 0)
    P, Q, R = M.blocks(0.1)
    assert np.all(Q[0] == 0)
    assert Q[1, 1] != 0


def test_custom_entries(M0):
    # degree-3 slow corner: -sigma d^3 f0 beta1 (d^3 f0 = 2)
    assert M0.coeffs[3][1, 3].real == pytest.approx(-2 * M0.beta1, abs=1e-14)
    assert M0.coeffs[3][1, 3].real == pytest.approx(-1.5138679161342414, abs=1e-12)
    nz = {(d, r, c) for d, r, c in zip(*np.nonzero(M0.coeffs))}
    assert nz == {(0, 2, 0), (0, 3, 1), (3, 1, 3)}


def test_symmetry(M0, M0_minus):
    assert check_symmetry(M0) and check_symmetry(M0_minus)
    assert not check_symmetry(M0.with_entry(3, 0, 3, 0.5))
    zero = M0.with_entry(0, 2, 0, 0.0).with_entry(0, 3, 1, 0.0).with_entry(3, 1, 3, 0.0)
    assert check_symmetry(zero)


def test_zero_pattern(M0):
    assert zero_pattern_violations(M0) == []
    pattern = allowed_pattern(2)
    assert not pattern[0, :2].any()
    bad = M0.with_entry(2, 0, 1, 1.0)
    assert zero_pattern_violations(bad) == [(2, 0, 1)]


def test_zero_mode_clusters_three_dof(custom3):
    res = analyze(custom3)
    M = self_energy_scale_minus1(custom3, res, branch="plus")
    assert check_symmetry(M)
    assert zero_pattern_violations(M) == []


# -- determinant identity -----------------------------------------------

@pytest.mark.parametrize("n", [2, 3])
def test_determinant_identity_symbolic(n):
    """det(ix - M) for a generic matrix with the allowed pattern and symmetry."""
    x = sp.symbols("x", real=True)
    E = sp.Matrix(e_matrix(n).astype(int))
    # M = E S with S symmetric and supported so that M has the allowed pattern
    pat = allowed_pattern(n)
    S = sp.zeros(2 * n, 2 * n)
    syms = {}
    Einv = E.inv()
    for i in range(2 * n):
        for j in range(i, 2 * n):
            s = sp.Symbol(f"s{i}{j}", real=True)
            syms[(i, j)] = s
            S[i, j] = S[j, i] = s
    M = E * S
    # impose the pattern by zeroing the symmetric entries that would break it
    subs = {}
    for r in range(2 * n):
        for c in range(2 * n):
            if not pat[r, c] and M[r, c] != 0:
                for sym in M[r, c].free_symbols:
                    subs[sym] = 0
    M = M.subs(subs)
    assert all(M[r, c] == 0 for r in range(2 * n) for c in range(2 * n) if not pat[r, c])
    lhs = (sp.I * x * sp.eye(2 * n) - M).det()
    B, b = n - 1, 2 * n - 1
    P = M[n:, :n]
    Q = M[:n, :n]
    R = M[:n, n:]
    rhs = -(sp.I * x) ** (2 * (n - 1)) * (x**2 + P[B, B] * R[B, B] + Q[B, B] ** 2)
    assert sp.expand(lhs - rhs) == 0
    assert Einv * M == S.subs(subs)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.01, 3.0), st.floats(1e-3, 0.2))
def test_determinant_identity_numeric(M0, x, eta):
    det = np.linalg.det(1j * x * np.eye(4) - M0(eta))
    pred = -((1j * x) ** 2) * invertibility_expression(x, eta, M0)
    assert abs(det - pred) <= 1e-10 * abs(det)


@settings(max_examples=20, deadline=None)
@given(st.floats(-3.0, 3.0), st.floats(1e-3, 0.1))
def test_first_band_symmetry(first_band, x, eta):
    assert check_symmetry_at(first_band.at, x, eta, 2, tol=1e-12)


# -- invertibility and propagator ---------------------------------------

def test_propagator_inverse(M0):
    g = resummed_propagator(0.7, 1e-2, M0)
    assert np.allclose((0.7j * np.eye(4) - M0(1e-2)) @ g, np.eye(4), atol=1e-12)


def test_singular_denominator(M0):
    eta = 1e-2
    P, Q, R = M0.blocks(eta)
    root = math.sqrt(-(P[1, 1] * R[1, 1] + Q[1, 1] ** 2).real)
    assert abs(invertibility_expression(root, eta, M0)) < 1e-15
    assert not invertibility_condition(root, eta, M0)
    with pytest.raises(SingularDenominator):
        resummed_propagator(root, eta, M0)


def test_hyperbolic_sign_always_invertible(M0_minus):
    for x in np.linspace(1e-4, 2.0, 50):
        assert invertibility_condition(float(x), 1e-2, M0_minus)


def test_zero_eta_reduces_to_x_squared(M0):
    assert invertibility_expression(0.3, 0.0, M0) == pytest.approx(0.09)
    assert not invertibility_condition(0.0, 1e-2, M0)


def test_operator_norms():
    g = np.array([[1.0, -2.0], [3.0, 0.5]])
    assert operator_norm(g, "l1") == 4.0
    assert operator_norm(g, "spectral") == pytest.approx(np.linalg.norm(g, 2))


@pytest.mark.parametrize("norm", ["l1", "spectral"])
def test_propagator_bound_scan(M0, custom, norm):
    rep = propagator_bound_scan(M0, 1e-2, 10.0, omega=custom.omega, cutoff=50, norm=norm)
    assert rep.ok and rep.n_checked == len(divisor_grid(custom.omega, 50))
    assert rep.mu1 == rep.muN == 1.0


def test_scan_threshold_excludes(M0, custom):
    rep = propagator_bound_scan(M0, 1e-2, 1e8, omega=custom.omega)
    assert rep.n_checked < len(rep.points)
    assert rep.n_checked > 0
    assert all(x * x > 1e8 * 1e-6 for x, _, _, checked in rep.points if checked)


def test_scan_raises_on_violation(M0):
    # next to the invertibility root the propagator norm is unbounded
    eta = 1e-2
    P, Q, R = M0.blocks(eta)
    root = math.sqrt(-(P[1, 1] * R[1, 1] + Q[1, 1] ** 2).real)
    with pytest.raises(BoundViolated):
        propagator_bound_scan(M0, eta, 1e-12, x_grid=[root * (1 + 1e-9)], raise_on_fail=True)


# -- scale functions ----------------------------------------------------

def test_smooth_step_limits():
    t = np.array([-1.0, 0.0, 1.0, 2.0])
    assert np.array_equal(smooth_step(t), [0.0, 0.0, 1.0, 1.0])
    assert smooth_step(0.5) == pytest.approx(0.5)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 3.0), st.integers(0, 6), st.floats(0.0, 10.0))
def test_partition_of_unity(C0, n, D):
    band = ScaleBand(C0, n)
    assert band.psi(D) + band.chi(D) == 1.0
    lo = C0**2 / 4 * 4.0**-n
    hi = C0**2 * 4.0**-n
    if D <= lo:
        assert band.psi(D) == 0.0
    if D >= hi:
        assert band.psi(D) == 1.0


def test_partition_sampled():
    band = scale_functions(1.3)(2)
    D = np.linspace(0, 1, 1000)
    assert np.array_equal(band.psi(D) + band.chi(D), np.ones(1000))
    assert np.all(np.diff(band.psi(D)) >= 0)


def test_n0():
    assert n0_from_threshold(1.0, 1 / 20) == 2
    assert n0_from_threshold(1.0, 4.0**-3) == 3
    assert n0_from_threshold(2.0, 4.0 * 4.0**-1) == 1
    for bad in (0.0, 1.0, 2.0, -1.0):
        with pytest.raises(OutOfRange):
            n0_from_threshold(1.0, bad)
    assert n0_from_epsilon(1.0, 10.0, 0.1, 2) == 3


# -- first band and cancellations -----------------------------------------

def test_cancellations(custom, custom_res, M0):
    rep = cancellation_family_check(custom, M0, resonance=custom_res)
    assert rep.ok and rep.control_ok
    assert rep.value_max < 1e-10 and rep.derivative_max < 1e-7 and rep.single_max > 1e-6


def test_first_band_reduces_at_x(first_band, M0):
    # the x-independent part is M0 plus the single-node clusters
    diff = first_band.at(0.2, 1e-2) - M0(1e-2)
    assert np.abs(diff).max() < 1e-6
    assert np.abs(diff).max() > 0


# -- eigenvalue estimates -------------------------------------------------

def test_ell_limit(M0, custom_res):
    limit = ell_limit(custom_res, M0.beta1, M0.hessian)
    assert limit == pytest.approx(2 * M0.beta1, abs=1e-15)
    assert lowest_eigenvalue_estimate(M0, 0.0, 1e-4).ell == pytest.approx(limit, rel=1e-8)


def test_hyperbolic_eigenvalue_negative(M0_minus):
    est = lowest_eigenvalue_estimate(M0_minus, 0.0, 1e-2)
    assert est.lam < 0
    x = 1e-3
    lam = lowest_eigenvalue_estimate(M0_minus, x, 1e-2).lam
    assert min(x * x, abs(x * x - lam)) == x * x


def test_eigen_range_guard(M0):
    with pytest.raises(OutOfRange):
        lowest_eigenvalue_estimate(M0, 1.0, 1e-2, rho=10.0)


def test_resolvent_lower_bound_small_x(first_band):
    eta, rho = 1e-2, 10.0
    xs = np.linspace(1e-5, math.sqrt(rho * eta**3), 200)
    rep = resolvent_lower_bound_scan(first_band, eta, xs, rho)
    assert rep.ok and rep.excluded == 0 and rep.min_ratio > 1


@pytest.mark.parametrize("kappa", [0.5, -0.3])
def test_first_order_eigen_error_generic(custom, kappa):
    """With a quartic slow term the O(eta) coefficient of ell is 2 kappa beta1^2."""
    model = sin4_variant(custom, kappa)
    res = analyze(model)
    M = self_energy_scale_minus1(model, res, branch="plus")
    fb = FirstBandSelfEnergy(model, M, res)
    limit = ell_limit(res, M.beta1, M.hessian)
    conv = ell_convergence(fb, limit)
    assert conv["slope"] == pytest.approx(1.0, abs=0.05)
    coef = (conv["ells"][2] - limit) / 1e-4
    assert coef == pytest.approx(2 * kappa * M.beta1**2, rel=1e-3)


# -- excluded measure -----------------------------------------------------

def test_no_exclusion_two_dof(M0, custom):
    lam = eigenvalue_function(M0)
    rep = excluded_measure_single_scale(lam, custom.omega, 3, 100, 1.25 + 2, (1e-4 / 4, 1e-4), M0.C0, 2)
    assert rep.measure == 0.0 and rep.intervals == []


def test_hyperbolic_no_exclusion(M0_minus, custom3):
    lam = eigenvalue_function(M0_minus)
    rep = excluded_measure_single_scale(lam, custom3.omega, 3, 100, 4.25, (1e-4, 1e-2), 1.0, 2)
    assert rep.measure == 0.0 and rep.modes_checked == 0


def test_excluded_measure_custom3(custom3):
    res = analyze(custom3)
    M = self_energy_scale_minus1(custom3, res, branch="plus")
    lam = eigenvalue_function(M)
    reps = [excluded_measure_single_scale(lam, custom3.omega, m, 100, 4.25, (0.0025, 0.01), M.C0, 2)
            for m in (3, 4)]
    assert reps[0].measure == pytest.approx(5.2146508672766545e-08, rel=1e-6)
    assert reps[0].measure <= reps[0].bound
    assert reps[1].measure / reps[0].measure == pytest.approx(2**-0.5, rel=1e-3)


def test_non_monotone():
    with pytest.raises(NonMonotone):
        excluded_measure_single_scale(lambda e: math.cos(400 * e), (GOLDEN,), 3, 10, 3.0, (0.0, 0.1), 1.0, 2)
