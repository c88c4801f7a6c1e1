"""Resonance diagnostics at a stationary point of the averaged perturbation.

Covers the slow-angle equilibrium ``beta0``, its degeneracy order ``k0`` and
leading coefficient ``c``, the first-order correction ``X'``, the constant
``a`` (three independent routes), the branches of the leading shift ``beta1``
and the elliptic/hyperbolic classification.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import (
    AssumptionAViolated,
    DegenerateAverage,
    DomainViolation,
    NoStationaryPoint,
    OrderExceeded,
    SingularHessian,
    ValidationError,
)
from .model import AngleActionFunction, Model, average_over_fast_angles

A_TOL = 1e-10
DERIV_TOL = 1e-9


class TorusType(str, enum.Enum):
    ELLIPTIC = "elliptic"
    HYPERBOLIC = "hyperbolic"


def _slow_derivative(f0: AngleActionFunction, order: int):
    """Vectorized ``d^order/dbeta^order f0(0, 0, beta)``."""
    prof: dict[int, complex] = {}
    zero = (0,) * (f0.dims - 1)
    for (nu, m, p), c in f0.terms.items():
        if nu == zero and not any(p):
            prof[m] = prof.get(m, 0.0) + c
    ms = np.array(sorted(prof), dtype=float)
    cs = np.array([prof[int(m)] for m in ms], dtype=complex) * (1j * ms) ** order

    def g(beta):
        beta = np.asarray(beta, dtype=float)
        return np.real(np.exp(1j * np.multiply.outer(beta, ms)) @ cs) if len(ms) else np.zeros_like(beta)

    return g


def slow_derivative(f0: AngleActionFunction, order: int, beta: float) -> float:
    return float(_slow_derivative(f0, order)(beta))


def find_stationary_points(f0: AngleActionFunction, tol: float = 1e-12, samples: int = 2048) -> list[float]:
    """Zeros of ``d f0/d beta`` on ``[0, 2 pi)``.

    Simple zeros come from sign changes of the derivative, zeros of even
    multiplicity from sign changes of the next derivative; each candidate is
    refined on the lowest derivative that has a simple zero there.

    Raises
    ------
    DegenerateAverage
        ``f0`` does not depend on ``beta``.
    """
    f0 = average_over_fast_angles(f0)
    if all(m == 0 for (_, m, _), c in f0.terms.items() if c != 0):
        raise DegenerateAverage("averaged perturbation is independent of beta")
    scale = max(f0.scale(), 1e-300)
    mmax = max(1, f0.max_slow_harmonic())
    grid = np.linspace(0.0, 2 * np.pi, samples, endpoint=False)
    step = grid[1]
    derivs = [_slow_derivative(f0, j) for j in range(1, 12)]

    def bracket_roots(g):
        vals = g(grid)
        nxt = np.roll(vals, -1)
        out = []
        for i in np.nonzero(vals == 0)[0]:
            out.append(float(grid[i]))
        for i in np.nonzero(vals * nxt < 0)[0]:
            a, b = grid[i], grid[i] + step
            out.append(float(brentq(lambda x: float(g(x)), a, b, xtol=1e-15, rtol=1e-15)))
        return out

    candidates = bracket_roots(derivs[0]) + bracket_roots(derivs[1])
    roots: list[float] = []
    for beta in candidates:
        # multiplicity estimate: lowest derivative that is clearly nonzero
        r = 1
        while r < len(derivs) and abs(float(derivs[r - 1](beta))) < 1e-6 * scale * mmax**r:
            r += 1
        refined = beta
        if r >= 2:
            g = derivs[r - 2]
            lo, hi = beta - 1e-3, beta + 1e-3
            if float(g(lo)) * float(g(hi)) < 0:
                refined = float(brentq(lambda x: float(g(x)), lo, hi, xtol=1e-16, rtol=1e-15))
        if abs(float(derivs[0](refined))) < tol * scale * mmax:
            refined = refined % (2 * np.pi)
            if abs(refined - 2 * np.pi) < 1e-12:
                refined = 0.0
            if abs(refined) < 1e-14:
                refined = 0.0
            if all(abs((refined - q + np.pi) % (2 * np.pi) - np.pi) > 1e-8 for q in roots):
                roots.append(refined)
    if not roots:
        raise NoStationaryPoint("no zero of the averaged slow-angle derivative found")
    return sorted(roots)


def degeneracy_order(f0: AngleActionFunction, beta0: float, jmax: int = 10,
                     tol: float = DERIV_TOL) -> tuple[int, float]:
    """Order ``k0`` of the first nonvanishing derivative minus one, and ``c``.

    Returns ``(k0, c)`` with ``c = d^{k0+1} f0(beta0) / k0!``.

    Raises
    ------
    OrderExceeded
        All derivatives up to order ``jmax + 1`` vanish.
    """
    f0 = average_over_fast_angles(f0)
    scale = max(f0.scale(), 1e-300)
    mmax = max(1, f0.max_slow_harmonic())
    first = slow_derivative(f0, 1, beta0)
    if abs(first) >= tol * scale * mmax:
        raise ValidationError(f"beta0={beta0} is not stationary (derivative {first:.3e})")
    for j in range(2, jmax + 2):
        d = slow_derivative(f0, j, beta0)
        if abs(d) >= tol * scale * mmax**j:
            k0 = j - 1
            return k0, d / math.factorial(k0)
    raise OrderExceeded(f"all beta-derivatives up to order {jmax + 1} vanish at beta0={beta0}")


@dataclass(frozen=True)
class FirstOrderCorrection:
    """Fourier coefficients of ``X'`` (mode -> complex 2N-vector).

    The slow-angle average ``b'_0`` is a free parameter left at zero and
    flagged by ``b0_pending``.
    """

    dims: int
    coeffs: dict
    beta0: float
    b0_pending: bool = True

    def mode(self, nu) -> np.ndarray:
        return self.coeffs.get(tuple(nu), np.zeros(2 * self.dims, dtype=complex))


def _gradient_modes(model: Model, beta0: float, labels_prefix=()) -> dict:
    """``{nu: vector of d_gamma (d_prefix f)_nu(0, 0, beta0)}`` over all components."""
    n = model.dims
    base = model.f.derivative(list(labels_prefix)) if labels_prefix else model.f
    zero = np.zeros(n)
    out: dict = {}
    for gamma in range(2 * n):
        g = base.derivative([gamma])
        for nu in g.modes():
            vec = out.setdefault(nu, np.zeros(2 * n, dtype=complex))
            vec[gamma] += g.fourier_coefficient(nu, zero, beta0)
    return out


def _hessian_inverse(model: Model) -> np.ndarray:
    h = model.hessian()
    if abs(np.linalg.det(h)) < 1e-14:
        raise SingularHessian("action Hessian of H0 is singular")
    return np.linalg.inv(h)


def first_order_correction(model: Model, beta0: float) -> FirstOrderCorrection:
    """Solve the first-order equations along the unperturbed torus.

    Actions: ``(omega.d)(A', B') = -d_phi f``; the action averages cancel the
    average of ``d_I f``; angles: ``(omega.d)(a', b') = d_I f + H (A', B')``
    with ``a'_0 = 0`` and ``b'_0`` left free.
    """
    n = model.dims
    hinv = _hessian_inverse(model)
    hess = model.hessian()
    grad = _gradient_modes(model, beta0)
    zero = (0,) * (n - 1)
    coeffs: dict = {}
    for nu, g in grad.items():
        if nu == zero:
            continue
        div = 1j * model.small_divisor(nu)
        vec = np.zeros(2 * n, dtype=complex)
        vec[:n] = -g[n:] / div
        vec[n:] = (g[:n] + hess @ vec[:n]) / div
        coeffs[nu] = vec
    g0 = grad.get(zero, np.zeros(2 * n, dtype=complex))
    vec0 = np.zeros(2 * n, dtype=complex)
    vec0[:n] = -hinv @ g0[:n]
    coeffs[zero] = vec0
    return FirstOrderCorrection(n, coeffs, beta0)


def constant_a(model: Model, beta0: float, xprime: FirstOrderCorrection | None = None) -> float:
    """First-order average of ``d_beta f`` along ``X0 + eps X'``.

    Computed as the average of
    ``d_{beta,phi} f . phi'_{!=0} + d_{beta,I} f . I'_{!=0}`` plus the zero-mode
    contribution ``d_{beta,I} f_0 . I'_0`` (absent when ``f_0`` has no action
    dependence). The imaginary part is checked to vanish.
    """
    n = model.dims
    xp = first_order_correction(model, beta0) if xprime is None else xprime
    slow = 2 * n - 1
    second = _gradient_modes(model, beta0, labels_prefix=(slow,))
    total = 0.0 + 0.0j
    for nu, g in second.items():
        partner = tuple(-v for v in nu)
        total += g @ xp.mode(partner)
    scale = max(model.f.scale() ** 2, 1e-300)
    if abs(total.imag) > 1e-12 * max(1.0, scale):
        raise ValidationError(f"constant a has imaginary part {total.imag:.3e}")
    return float(total.real)


def _is_identity_hessian(model: Model) -> bool:
    return np.allclose(model.hessian(), np.eye(model.dims), atol=1e-12)


def constant_a_special(model: Model, beta0: float) -> float:
    """Closed-form sum over fast modes valid for angle-only ``f`` and unit Hessian.

    ``a = 1/2 d_beta sum_nu (|nu|^2 |f_nu|^2 + |d_beta f_nu|^2) / (omega.nu)^2``.

    Raises
    ------
    DomainViolation
        ``f`` depends on the actions or the Hessian is not the identity.
    """
    if not model.f.is_angle_only() or not _is_identity_hessian(model):
        raise DomainViolation("closed form needs angle-only f and identity action Hessian")
    total = 0.0
    for nu in model.f.modes():
        if not any(nu):
            continue
        prof = model.f.slow_profile(nu)
        ms = np.array(sorted(prof), dtype=float)
        cs = np.array([prof[int(m)] for m in ms])
        ph = np.exp(1j * ms * beta0)
        f = np.sum(cs * ph)
        f1 = np.sum(1j * ms * cs * ph)
        f2 = np.sum(-(ms**2) * cs * ph)
        nn = float(np.dot(nu, nu))
        total += (nn * np.real(np.conj(f) * f1) + np.real(np.conj(f1) * f2)) / model.small_divisor(nu) ** 2
    return float(total)


def beta1_branches(a: float, c: float, sigma: int, k0: int, tol: float = A_TOL) -> list[float]:
    """Real solutions of ``sigma a + c beta1^k0 = 0``.

    Raises
    ------
    AssumptionAViolated
        ``|a| < tol``.
    """
    if abs(a) < tol:
        raise AssumptionAViolated(f"a = {a:.3e} vanishes; the fractional series cannot be built")
    if c == 0:
        raise ValidationError("c must be nonzero")
    if sigma not in (1, -1):
        raise ValidationError("sigma must be +1 or -1")
    r = -a * sigma / c
    if k0 % 2 == 1:
        return [math.copysign(abs(r) ** (1.0 / k0), r)]
    if r > 0:
        root = r ** (1.0 / k0)
        return [root, -root]
    return []


def classify_torus(k0: int, c: float, a: float, sigma: int, beta1: float) -> TorusType:
    """Elliptic or hyperbolic character of the torus on a given branch.

    Odd ``k0``: the sign of ``c sigma`` decides. Even ``k0``: the sign of
    ``c sigma beta1``. The nondegenerate case ``k0 = 1`` is rejected.
    """
    if k0 < 2:
        raise DomainViolation("k0 = 1 (nondegenerate resonance) is out of scope")
    s = c * sigma if k0 % 2 == 1 else c * sigma * beta1
    return TorusType.ELLIPTIC if s > 0 else TorusType.HYPERBOLIC


@dataclass
class ResonanceData:
    beta0: float
    k0: int
    c: float
    a: float
    sigma: int
    beta1_branches: list = field(default_factory=list)
    classification: list = field(default_factory=list)
    exists: bool = False
    d_top: float = 0.0
    note: str = ""

    def as_dict(self) -> dict:
        return {
            "beta0": self.beta0,
            "k0": self.k0,
            "c": self.c,
            "a": self.a,
            "sigma": self.sigma,
            "dTop": self.d_top,
            "branches": [{"beta1": b, "label": "plus" if b >= 0 else "minus", "type": t.value}
                         for b, t in zip(self.beta1_branches, self.classification)],
            "existsFlag": self.exists,
            "note": self.note,
        }


def default_beta0(model: Model) -> float:
    """First stationary point with a degenerate (``k0 >= 2``) resonance, else the first one."""
    f0 = average_over_fast_angles(model.f)
    roots = find_stationary_points(f0)
    for b in roots:
        try:
            if degeneracy_order(f0, b)[0] >= 2:
                return b
        except OrderExceeded:
            continue
    return roots[0]


def analyze(model: Model, beta0: float | None = None, sigma: int = 1, jmax: int = 10) -> ResonanceData:
    """All resonance diagnostics at ``beta0`` (default from :func:`default_beta0`)."""
    f0 = average_over_fast_angles(model.f)
    b0 = default_beta0(model) if beta0 is None else float(beta0)
    k0, c = degeneracy_order(f0, b0, jmax)
    a = constant_a(model, b0)
    data = ResonanceData(b0, k0, c, a, sigma, d_top=slow_derivative(f0, k0 + 1, b0))
    if k0 < 2:
        data.note = "k0 = 1: nondegenerate resonance, out of scope"
        return data
    try:
        branches = beta1_branches(a, c, sigma, k0)
    except AssumptionAViolated as exc:
        data.note = str(exc)
        return data
    data.beta1_branches = branches
    data.classification = [classify_torus(k0, c, a, sigma, b) for b in branches]
    data.exists = bool(branches)
    if not branches:
        data.note = "k0 even and sigma a c > 0: no real branch"
    return data


@dataclass
class NormalFormReport:
    """Output of the heuristic canonical transformation (quadratic ``H0``, angle-only ``f``)."""

    psi1: dict
    phi0: dict
    zeta: np.ndarray
    rho: float
    a_from_phi: float
    delta_beta0: list
    stability: list
    top_coefficient: float
    expected_top_coefficient: float


def heuristic_normal_form(model: Model, beta0: float, eps: float = 1.0) -> NormalFormReport:
    """Generating-function construction for ``H0 = omega.A + (A^2 + B^2)/2``.

    The first generator is
    ``Psi1 = -D^{-1} [1 - (A'.d_alpha + B' d_beta) D^{-1}] f_{!=0}`` with
    ``D = omega.d_alpha``; ``Phi = ((d_alpha Psi1)^2 + (d_beta Psi1)^2)/2``.
    Everything is evaluated on an ``(alpha, beta)`` grid, independently of the
    closed-form mode sum.

    Raises
    ------
    DomainViolation
        ``f`` has action dependence or the Hessian is not the identity.
    """
    if not model.f.is_angle_only() or not _is_identity_hessian(model):
        raise DomainViolation("heuristic normal form needs angle-only f and identity action Hessian")
    n = model.dims
    d = n - 1
    fnz = {k: c for k, c in model.f.terms.items() if any(k[0])}
    nmax = max([1] + [max(abs(v) for v in k[0]) for k in fnz])
    mmax = max([1] + [abs(k[1]) for k in fnz])
    Ga = 8
    while Ga < 4 * nmax + 2:
        Ga *= 2
    Gb = 8
    while Gb < 4 * mmax + 2:
        Gb *= 2
    shape = (Ga,) * d + (Gb,)
    fa = np.rint(np.fft.fftfreq(Ga, 1.0 / Ga)).astype(int)
    fb = np.rint(np.fft.fftfreq(Gb, 1.0 / Gb)).astype(int)
    grids = np.meshgrid(*([fa] * d + [fb]), indexing="ij")
    nus = np.stack(grids[:d])
    ms = grids[d]
    div = 1j * np.tensordot(np.asarray(model.omega), nus, axes=(0, 0))
    F = np.zeros(shape, dtype=complex)
    for (nu, m, _), c in fnz.items():
        F[tuple(v % Ga for v in nu) + (m % Gb,)] += c
    safe = np.where(div == 0, 1.0, div)
    inv = np.where(div == 0, 0.0, 1.0 / safe)
    P0 = -inv * F
    PA = [1j * nus[i] * inv**2 * F for i in range(d)]
    PB = 1j * ms * inv**2 * F

    def grads(P):
        return [np.fft.ifftn(1j * nus[i] * P) * P.size for i in range(d)] + [np.fft.ifftn(1j * ms * P) * P.size]

    g0 = grads(P0)
    axes = tuple(range(d))

    def alpha_avg(x):
        return np.real(x).mean(axis=axes)

    phi_beta = alpha_avg(0.5 * sum(g * g for g in g0))
    zeta = np.array([-alpha_avg(sum(a * b for a, b in zip(g0, grads(P)))) for P in PA])
    rho_prof = -alpha_avg(sum(a * b for a, b in zip(g0, grads(PB))))
    # trig interpolation in beta, evaluated exactly at beta0
    phi_c = np.fft.fft(phi_beta) / Gb
    rho_c = np.fft.fft(rho_prof) / Gb
    zeta_c = np.fft.fft(zeta, axis=-1) / Gb
    ph = np.exp(1j * fb * beta0)
    a_phi = float(np.real(np.sum(1j * fb * phi_c * ph)))
    rho = float(np.real(np.sum(rho_c * ph)))
    zeta0 = np.real(zeta_c @ ph)
    psi1 = {(tuple(int(v) for v in nus[(slice(None),) + idx]), int(ms[idx])): complex(P0[idx])
            for idx in zip(*np.nonzero(np.abs(P0) > 1e-15))}
    phi0 = {int(fb[j]): complex(phi_c[j]) for j in range(Gb) if abs(phi_c[j]) > 1e-15}

    f0 = average_over_fast_angles(model.f)
    k0, c = degeneracy_order(f0, beta0)
    top = eps * slow_derivative(f0, k0 + 1, beta0) / math.factorial(k0 + 1)
    shifts: list[float] = []
    r = -a_phi * eps / c
    if abs(a_phi) >= A_TOL:
        if k0 % 2 == 1:
            shifts = [math.copysign(abs(r) ** (1.0 / k0), r)]
        elif r > 0:
            shifts = [r ** (1.0 / k0), -(r ** (1.0 / k0))]
    stability = []
    for db in shifts:
        s = c * eps if k0 % 2 == 1 else c * eps * db
        stability.append(TorusType.ELLIPTIC if s > 0 else TorusType.HYPERBOLIC)
    return NormalFormReport(psi1, phi0, zeta0, rho, a_phi, shifts, stability, top, eps * c / (k0 + 1))
