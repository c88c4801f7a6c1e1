"""Quantitative acceptance checks on the canonical models.

Each ``criterion_*`` function computes its metrics and a pass flag with the
pinned tolerances; :func:`run_all` collects them for ``fraclind verify``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import AssumptionAViolated
from .lindstedt import expand, residual_scaling
from .model import counterexample_model, custom3_model, custom_model, integer_vectors
from .resonance import (
    TorusType,
    analyze,
    constant_a,
    constant_a_special,
    heuristic_normal_form,
)
from .selfenergy import (
    FirstBandSelfEnergy,
    cancellation_family_check,
    check_symmetry,
    divisor_grid,
    eigenvalue_function,
    ell_convergence,
    ell_limit,
    excluded_measure_single_scale,
    invertibility_expression,
    resolvent_lower_bound_scan,
    n0_from_epsilon,
    propagator_bound_scan,
    self_energy_scale_minus1,
    zero_pattern_violations,
)
from .trees import TreeContext, TreeEnumerator, compare_with_recursion, line_count_check

ETA_GRID = (1e-3, 2e-3, 5e-3, 1e-2)


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    metrics: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        return f"criterion {self.number:2d} [{'PASS' if self.passed else 'FAIL'}] {self.title}"

    def as_dict(self) -> dict:
        return {"criterion": self.number, "title": self.title, "passed": self.passed,
                "seconds": round(self.seconds, 3), "metrics": _plain(self.metrics)}


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _timed(fn):
    def wrapper(*args, **kwargs):
        t = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@_timed
def criterion_counterexample() -> CriterionResult:
    """Degenerate average with vanishing ``a``: construction must be refused."""
    model = counterexample_model()
    res = analyze(model)
    refused = False
    try:
        expand(model, 4, resonance=res)
    except AssumptionAViolated:
        refused = True
    except Exception:
        refused = False
    ok = (res.k0 == 2 and abs(res.d_top - 2.0) < 1e-12 and abs(res.a) < 1e-10
          and refused and not res.exists)
    return CriterionResult(1, "counterexample detection", ok,
                           {"k0": res.k0, "dTop": res.d_top, "a": res.a, "refused": refused})


@_timed
def criterion_constant_a() -> CriterionResult:
    """General, closed-form and normal-form values of ``a`` against ``-3/(2 omega^2)``."""
    model = custom_model()
    res = analyze(model)
    general = constant_a(model, res.beta0)
    special = constant_a_special(model, res.beta0)
    normal_form = heuristic_normal_form(model, res.beta0).a_from_phi
    omega = model.omega[0]
    derived = -3.0 / (2.0 * omega**2)
    diffs = {"generalVsSpecial": abs(general - special), "generalVsNormalForm": abs(general - normal_form),
             "specialVsNormalForm": abs(special - normal_form), "generalVsDerived": abs(general - derived)}
    ok = all(v < 1e-10 for v in diffs.values())
    return CriterionResult(2, "constant a cross-oracle", ok,
                           {"general": general, "special": special, "normalForm": normal_form,
                            "derived": derived, **diffs})


@_timed
def criterion_branches() -> CriterionResult:
    """Branch equation residuals and elliptic/hyperbolic split on the custom model."""
    res = analyze(custom_model())
    residuals = [abs(res.sigma * res.a + res.c * b ** res.k0) for b in res.beta1_branches]
    types = sorted(t.value for t in res.classification)
    ok = (len(residuals) == 2 and max(residuals) < 1e-12
          and types == sorted([TorusType.ELLIPTIC.value, TorusType.HYPERBOLIC.value]))
    return CriterionResult(3, "branches and classification", ok,
                           {"branches": res.beta1_branches, "residuals": residuals, "types": types})


@_timed
def criterion_orders(K: int = 6) -> CriterionResult:
    """Zero-average identities at every order and the residual exponent."""
    t = time.perf_counter()
    series = expand(custom_model(), K)
    rep = residual_scaling(series, ETA_GRID)
    elapsed = time.perf_counter() - t
    compat = max(max(v) for v in series.compatibility.values())
    ok = compat < 1e-9 and rep.fitted_exponent >= K + 0.5 and elapsed < 30
    return CriterionResult(4, "order-by-order correctness", ok,
                           {"K": K, "maxCompatibility": compat, "fittedExponent": rep.fitted_exponent,
                            "residualNorms": rep.residual_norms, "runtime": elapsed})


def _class_kind(gamma: int, nu, dims: int) -> str:
    if gamma == 2 * dims - 1 and not any(nu):
        return "slow"
    return "action" if gamma < dims else "angle"


@_timed
def criterion_trees() -> CriterionResult:
    """Tree sums equal the recursion coefficients; line counts within bounds."""
    t = time.perf_counter()
    model = custom_model()
    res = analyze(model)
    k0 = res.k0
    top = 2 * k0 + 2
    series = expand(model, top + k0, resonance=res)
    en = TreeEnumerator(TreeContext(model, res, series.beta1))
    n = model.dims
    width = max(1, model.f.max_mode())
    worst, classes, n_trees, line_fail = 0.0, 0, 0, []
    for k in range(1, top + 1):
        nus = [(0,) * (n - 1)] + list(integer_vectors(n - 1, k * width))
        for nu in nus:
            for gamma in range(2 * n):
                cmp = compare_with_recursion(series, k, nu, gamma, en)
                classes += 1
                n_trees += cmp.count
                worst = max(worst, cmp.relative_error)
                if cmp.count:
                    trees = [tr for tr, _ in en.trees(k, tuple(nu), gamma)]
                    rep = line_count_check(trees, k, k0, _class_kind(gamma, nu, n))
                    if not rep.ok:
                        line_fail.append((k, list(nu), gamma))
    elapsed = time.perf_counter() - t
    ok = worst < 1e-10 and not line_fail and elapsed < 120
    return CriterionResult(5, "tree-oracle equivalence", ok,
                           {"maxDegree": top, "classes": classes, "trees": n_trees,
                            "maxRelativeError": worst, "lineCountFailures": line_fail, "runtime": elapsed})


@_timed
def criterion_self_energy_structure(points: int = 20, seed: int = 0) -> CriterionResult:
    """Lowest-degree blocks, symmetry, zero pattern and determinant identity."""
    model = custom_model()
    res = analyze(model)
    M = self_energy_scale_minus1(model, res, branch="plus")
    n = model.dims
    lowest = np.zeros((2 * n, 2 * n))
    lowest[n:, :n] = model.hessian()
    lowest_ok = bool(np.array_equal(M.coeffs[0], lowest.astype(complex)))
    sym = check_symmetry(M)
    pattern = zero_pattern_violations(M)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(points):
        x = float(rng.uniform(0.01, 2.0))
        eta = float(rng.uniform(1e-3, 0.1))
        det = np.linalg.det(1j * x * np.eye(2 * n) - M(eta))
        pred = -((1j * x) ** (2 * (n - 1))) * invertibility_expression(x, eta, M)
        worst = max(worst, abs(det - pred) / abs(det))
    ok = lowest_ok and sym and not pattern and worst < 1e-10
    return CriterionResult(6, "self-energy structure", ok,
                           {"degree": M.degree, "lowestBlocksExact": lowest_ok, "symmetric": sym,
                            "patternViolations": pattern, "determinantMaxRelError": worst})


@_timed
def criterion_propagator_bound(eta: float = 1e-2, rho: float = 10.0, cutoff: int = 50) -> CriterionResult:
    """Resummed propagator bound on the divisor grid above the threshold."""
    model = custom_model()
    res = analyze(model)
    M = self_energy_scale_minus1(model, res, branch="plus")
    rep = propagator_bound_scan(M, eta, rho, omega=model.omega, cutoff=cutoff)
    return CriterionResult(7, "propagator bound", rep.ok, rep.as_dict())


@_timed
def criterion_cancellations() -> CriterionResult:
    """Family sums of the lowest-degree clusters and the single-cluster control."""
    model = custom_model()
    res = analyze(model)
    rep = cancellation_family_check(model, resonance=res)
    return CriterionResult(8, "cancellations", rep.ok and rep.control_ok, rep.as_dict())


@_timed
def criterion_eigenvalue(eta: float = 1e-2, rho: float = 10.0, cutoff: int = 50,
                         dense: int = 400) -> CriterionResult:
    """Convergence rate of ``ell`` and the lower bound on ``ix - M``.

    The bound is checked on the divisor grid and a dense grid, restricted to
    the small-``x`` regime ``x^2 <= rho eta^{2k0-1}``; the unrestricted grid
    ratio is reported alongside.
    """
    model = custom_model()
    res = analyze(model)
    M0 = self_energy_scale_minus1(model, res, branch="plus")
    fb = FirstBandSelfEnergy(model, M0, res)
    limit = ell_limit(res, M0.beta1, M0.hessian)
    conv = ell_convergence(fb, limit)
    slope = conv["slope"]
    slope_ok = bool(np.isfinite(slope) and abs(slope - 1.0) <= 0.3)
    grid = divisor_grid(model.omega, cutoff)
    xs = np.concatenate([grid, np.linspace(1e-5, math.sqrt(rho * eta ** (2 * res.k0 - 1)), dense)])
    scan = resolvent_lower_bound_scan(fb, eta, xs, rho)
    literal = resolvent_lower_bound_scan(M0, eta, grid, math.inf)
    ok = slope_ok and scan.ok
    return CriterionResult(9, "eigenvalue asymptotics", ok,
                           {"limit": limit, "ells": conv["ells"], "errors": conv["errors"], "slope": slope,
                            "slopeOk": slope_ok, "resolventBound": scan.as_dict(),
                            "resolventBoundFullGridMinRatio": literal.min_ratio})


@_timed
def criterion_excluded_measure(eta_bar: float = 0.1, rho: float = 10.0, cutoff: int = 100,
                               tau0: float = 1.0, delta1: float = 0.25) -> CriterionResult:
    """Excluded measure at scale ``n0`` and its scaling under ``m -> m + 1``."""
    model = custom3_model()
    res = analyze(model)
    plus = [b for b, t in zip(res.beta1_branches, res.classification) if t == TorusType.ELLIPTIC]
    M = self_energy_scale_minus1(model, res, branch=plus[0])
    n0 = n0_from_epsilon(M.C0, rho, eta_bar, res.k0)
    tau1 = tau0 * (1 + delta1) + model.dims
    eps_bar = eta_bar ** res.k0
    lam = eigenvalue_function(M)
    reps = [excluded_measure_single_scale(lam, model.omega, m, cutoff, tau1, (eps_bar / 4, eps_bar), M.C0, res.k0,
                                          delta1=delta1)
            for m in (n0, n0 + 1)]
    ratio = reps[1].measure / reps[0].measure if reps[0].measure > 0 else math.nan
    target = 2 ** -0.5
    scaling_ok = bool(np.isfinite(ratio) and abs(ratio - target) <= 0.1 * target)
    ok = reps[0].ok and reps[0].measure > 0 and scaling_ok
    return CriterionResult(10, "excluded measure", ok,
                           {"n0": n0, "C0": M.C0, "branch": float(plus[0]), "measure": reps[0].measure,
                            "bound": reps[0].bound, "K": reps[0].K, "nextMeasure": reps[1].measure,
                            "ratio": ratio, "target": target, "modesChecked": reps[0].modes_checked})


CRITERIA = (
    criterion_counterexample,
    criterion_constant_a,
    criterion_branches,
    criterion_orders,
    criterion_trees,
    criterion_self_energy_structure,
    criterion_propagator_bound,
    criterion_cancellations,
    criterion_eigenvalue,
    criterion_excluded_measure,
)


def run_all() -> list[CriterionResult]:
    return [fn() for fn in CRITERIA]
