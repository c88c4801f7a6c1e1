"""First-band resummation: self-energy matrices, resummed propagators and
the single-scale checks built on them.

Matrices act on the component order ``(A_1..A_{N-1}, B, alpha_1..alpha_{N-1},
beta)`` and are split in ``N x N`` blocks as ``M = [[Q, R], [P, -Q^T]]``.
Entry ``(gamma', gamma)`` of a cluster value is indexed by the label of the
exiting line (row) and of the entering line (column).

Two matrices are built here:

* :class:`SelfEnergyMatrix`, the scale-``[-1]`` sum. Its clusters are a node of
  zero fast mode with zero-mode subtrees attached; it is a polynomial in
  ``eta`` whose coefficients do not depend on ``x``;
* :class:`FirstBandSelfEnergy`, which adds the lowest-degree (``2 k0``)
  clusters: two nodes of opposite modes joined by a line on scale ``[0]``,
  which give the first dependence on ``x``, and single nodes of zero mode
  whose zero-momentum subtrees carry nonzero modes.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations_with_replacement, product

import numpy as np
from scipy.optimize import brentq

from .errors import (
    BoundViolated,
    CancellationViolated,
    NonMonotone,
    NotIsolated,
    OutOfRange,
    SingularDenominator,
    ValidationError,
)
from .lindstedt import select_branch
from .model import Frequency, Model, integer_vectors
from .resonance import ResonanceData, analyze
from .trees import TreeContext, TreeEnumerator, is_leaf, root_label


def e_matrix(dims: int) -> np.ndarray:
    """Symplectic matrix with ``(E d)_action = -d_angle`` and ``(E d)_angle = d_action``."""
    n = dims
    E = np.zeros((2 * n, 2 * n))
    E[:n, n:] = -np.eye(n)
    E[n:, :n] = np.eye(n)
    return E


def _zero_mode_tree(t) -> bool:
    if is_leaf(t):
        return True
    return not any(t[4]) and all(_zero_mode_tree(c) for c in t[5])


def _symmetry(children) -> float:
    out = 1.0
    for mult in Counter(children).values():
        out /= math.factorial(mult)
    return out


@dataclass
class SelfEnergyMatrix:
    """Truncated polynomial ``M(eta) = sum_d coeffs[d] eta^d``.

    ``coeffs`` has shape ``(D + 1, 2N, 2N)``; the ``f`` nodes carry the sign
    ``sigma`` and the powers of ``eta`` count the cluster degree.
    """

    coeffs: np.ndarray
    dims: int
    k0: int
    sigma: int
    beta1: float
    hessian: np.ndarray
    C0: float = 1.0

    @property
    def degree(self) -> int:
        return self.coeffs.shape[0] - 1

    def __call__(self, eta: float) -> np.ndarray:
        powers = float(eta) ** np.arange(self.coeffs.shape[0])
        return np.tensordot(powers, self.coeffs, axes=(0, 0))

    def at(self, x: float, eta: float) -> np.ndarray:
        return self(eta)

    def blocks(self, eta: float, x: float = 0.0):
        """``(P, Q, R)`` with ``M = [[Q, R], [P, -Q^T]]``."""
        M = self.at(x, eta)
        n = self.dims
        return M[n:, :n], M[:n, :n], M[:n, n:]

    def with_entry(self, d: int, row: int, col: int, value: complex) -> "SelfEnergyMatrix":
        c = self.coeffs.copy()
        c[d, row, col] = value
        return SelfEnergyMatrix(c, self.dims, self.k0, self.sigma, self.beta1, self.hessian, self.C0)

    def as_dict(self) -> dict:
        from .model import ComponentLabel

        labels = [ComponentLabel(i, self.dims).name for i in range(2 * self.dims)]
        entries = []
        for r in range(2 * self.dims):
            for c in range(2 * self.dims):
                col = self.coeffs[:, r, c]
                if np.any(np.abs(col) > 0):
                    entries.append({"row": labels[r], "col": labels[c],
                                    "coefficients": [float(v.real) for v in col]})
        return {"dims": self.dims, "k0": self.k0, "sigma": self.sigma, "beta1": self.beta1,
                "degree": self.degree, "labels": labels, "entries": entries}


def _context(model: Model, resonance: ResonanceData | None, branch, sigma: int,
             beta1: float | None) -> TreeContext:
    res = analyze(model, sigma=sigma) if resonance is None else resonance
    b1 = select_branch(res, branch) if beta1 is None else float(beta1)
    return TreeContext(model, res, b1)


def self_energy_scale_minus1(model: Model, resonance: ResonanceData | None = None, degree: int | None = None,
                             branch: str | float = "auto", sigma: int = 1,
                             beta1: float | None = None) -> SelfEnergyMatrix:
    """Sum of the scale-``[-1]`` self-energy cluster values up to ``degree``.

    A cluster is a node with zero fast mode (an ``f`` node or an ``H0`` node)
    with zero-mode subtrees attached; its degree is ``k0`` for an ``f`` node
    plus the degrees of the subtrees. Subtrees are the allowed trees whose
    nodes all have zero fast mode.

    Parameters
    ----------
    degree
        Truncation degree ``D`` (default ``2 k0``); must be at least ``k0``.
    """
    ctx = _context(model, resonance, branch, sigma, beta1)
    D = 2 * ctx.k0 if degree is None else int(degree)
    if D < ctx.k0:
        raise ValidationError(f"degree {D} below k0={ctx.k0}")
    coeffs = _single_node_clusters(ctx, D, zero_mode_only=True)
    C0 = Frequency.certified(model.omega).C0
    return SelfEnergyMatrix(coeffs, ctx.dims, ctx.k0, ctx.resonance.sigma, ctx.beta1, model.hessian(), C0)


class _ZeroModeContext(TreeContext):
    """Tree context restricted to nodes of zero fast mode."""

    def fmodes(self):
        zero = (0,) * (self.dims - 1)
        return [nu for nu in self.model.f.modes() if tuple(nu) == zero]


def _single_node_clusters(ctx: TreeContext, D: int, zero_mode_only: bool) -> np.ndarray:
    """Clusters made of one zero-mode node with zero-momentum subtrees attached."""
    k0 = ctx.k0
    n = ctx.dims
    zero = (0,) * (n - 1)
    if zero_mode_only:
        ctx = _ZeroModeContext(ctx.model, ctx.resonance, ctx.beta1)
    en = TreeEnumerator(ctx, cap=max(D, 1))
    if zero_mode_only:
        en.maxnu = 0
    options = {}
    for d in range(1, D + 1):
        for lab in range(2 * n):
            if d > en.cap:
                continue
            trees = [(t, v) for t, v in en.trees(d, zero, lab) if _zero_mode_tree(t) or not zero_mode_only]
            if trees:
                options[(d, lab)] = trees
    slots = sorted(options)

    def multisets(budget: int, start: int, chosen: list, allowed):
        if budget == 0:
            yield list(chosen)
            return
        for i in range(start, len(slots)):
            d, lab = slots[i]
            if d > budget or lab not in allowed:
                continue
            chosen.append(slots[i])
            yield from multisets(budget - d, i, chosen, allowed)
            chosen.pop()

    def fills(chosen):
        groups = Counter(chosen)
        per = []
        for slot, mult in groups.items():
            opts = options[slot]
            per.append([(slot, combo) for combo in combinations_with_replacement(range(len(opts)), mult)])
        for choice in product(*per):
            children, val = [], 1.0 + 0j
            for slot, combo in choice:
                for idx in combo:
                    t, v = options[slot][idx]
                    children.append(t)
                    val *= v
            yield children, val

    coeffs = np.zeros((D + 1, 2 * n, 2 * n), dtype=complex)
    for delta in (0, 1):
        allowed = set(range(n)) if delta == 0 else set(range(2 * n))
        for budget in range(0, D - k0 * delta + 1):
            deg = budget + k0 * delta
            for chosen in multisets(budget, 0, [], allowed):
                for children, val in fills(chosen):
                    labels = [root_label(c, ctx.slow) for c in children]
                    sym = _symmetry(children)
                    for gp in range(2 * n):
                        if delta == 0 and gp < n:
                            continue
                        for g in range(2 * n):
                            fac = ctx.node_factor(delta, zero, gp, [g] + labels)
                            if fac != 0:
                                coeffs[deg, gp, g] += fac * sym * val
    return coeffs


def allowed_pattern(dims: int) -> np.ndarray:
    """Boolean mask of the entries that may be nonzero at scale ``[-1]``."""
    n = dims
    mask = np.zeros((2 * n, 2 * n), dtype=bool)
    mask[n:, :n] = True            # P
    mask[n - 1, :n] = True         # bottom row of Q
    mask[n:, 2 * n - 1] = True     # right column of -Q^T
    mask[n - 1, 2 * n - 1] = True  # corner of R
    return mask


def zero_pattern_violations(M: SelfEnergyMatrix) -> list[tuple[int, int, int]]:
    """``(degree, row, col)`` of nonzero entries outside the allowed pattern."""
    mask = allowed_pattern(M.dims)
    bad = np.argwhere((M.coeffs != 0) & ~mask[None])
    return [tuple(int(v) for v in b) for b in bad]


def check_symmetry(M: SelfEnergyMatrix, tol: float = 0.0) -> bool:
    """``E M E = M^T`` and ``M`` real, degree by degree.

    ``tol`` is relative to the largest coefficient; the default asks for exact
    equality.
    """
    E = e_matrix(M.dims)
    scale = max(float(np.abs(M.coeffs).max(initial=0.0)), 1.0)
    for c in M.coeffs:
        if np.abs(c.imag).max(initial=0.0) > tol * scale:
            return False
        if np.abs(E @ c @ E - c.T).max(initial=0.0) > tol * scale:
            return False
    return True


def check_symmetry_at(matrix_fn, x: float, eta: float, dims: int, tol: float = 1e-12) -> bool:
    """``E M(x) E = M(-x)^T`` and ``M(x)^* = M(-x)`` for an ``x``-dependent matrix."""
    E = e_matrix(dims)
    a, b = matrix_fn(x, eta), matrix_fn(-x, eta)
    scale = max(float(np.abs(a).max()), 1.0)
    return bool(np.abs(E @ a @ E - b.T).max() <= tol * scale and np.abs(a.conj() - b).max() <= tol * scale)


def _corner_entries(M: np.ndarray, dims: int):
    n = dims
    return M[2 * n - 1, n - 1], M[n - 1, n - 1], M[n - 1, 2 * n - 1]


def invertibility_expression(x: float, eta: float, M) -> float:
    """``x^2 + P_BB R_bb + Q_BB^2``, the nontrivial factor of ``det(ix - M)``.

    ``det(ix - M) = -(ix)^{2(N-1)} (x^2 + P_BB R_bb + Q_BB^2)`` for every matrix
    of the block form; ``Q_BB`` is the ``(B, B)`` entry and equals minus the
    ``(beta, beta)`` one.

    Raises
    ------
    ValidationError
        The ``(B, B)`` and ``(beta, beta)`` entries are not opposite reals.
    """
    Mx = M.at(x, eta)
    n = M.dims
    p_bb, q_bb, r_bb = _corner_entries(Mx, n)
    q_ss = Mx[2 * n - 1, 2 * n - 1]
    scale = max(abs(q_bb), 1e-300)
    if abs(q_bb + q_ss) > 1e-10 * max(scale, 1.0) or abs(complex(q_bb).imag) > 1e-10 * max(scale, 1.0):
        raise ValidationError("the (B,B) and (beta,beta) entries must be opposite reals")
    return float((x * x + p_bb * r_bb + q_bb * q_bb).real)


def invertibility_condition(x: float, eta: float, M, tol: float = 1e-12) -> bool:
    """True when ``ix - M(eta)`` is invertible (``x != 0`` and the scalar factor nonzero)."""
    if x == 0 and M.dims > 1:
        return False
    return abs(invertibility_expression(x, eta, M)) > tol * max(1.0, x * x)


def resummed_propagator(x: float, eta: float, M, tol: float = 1e-12) -> np.ndarray:
    """``(ix - M(eta))^{-1}``.

    Raises
    ------
    SingularDenominator
        The invertibility condition fails at ``(x, eta)``.
    """
    if not invertibility_condition(x, eta, M, tol):
        raise SingularDenominator(f"ix - M is singular at x={x}, eta={eta}")
    return np.linalg.inv(1j * x * np.eye(2 * M.dims) - M.at(x, eta))


def operator_norm(g: np.ndarray, kind: str = "l1") -> float:
    """Uniform norm induced by the ``l1`` vector norm, or the spectral norm."""
    return float(np.linalg.norm(g, 1 if kind == "l1" else 2))


@dataclass
class BoundScanReport:
    eta: float
    rho: float
    norm: str
    mu1: float
    muN: float
    points: list = field(default_factory=list)   # (x, norm, bound, checked)
    violations: list = field(default_factory=list)
    rho_min: float = 0.0
    ok: bool = True

    @property
    def n_checked(self) -> int:
        return sum(1 for p in self.points if p[3])

    def as_dict(self) -> dict:
        return {"eta": self.eta, "rho": self.rho, "norm": self.norm, "mu1": self.mu1, "muN": self.muN,
                "checked": self.n_checked, "excluded": len(self.points) - self.n_checked,
                "violations": self.violations, "rhoMin": self.rho_min, "ok": self.ok}


def divisor_grid(omega, cutoff: int) -> np.ndarray:
    """Sorted distinct values ``|omega . nu|`` for ``0 < |nu| <= cutoff``."""
    om = np.atleast_1d(np.asarray(omega, float))
    xs = {round(abs(float(np.dot(om, nu))), 15) for nu in integer_vectors(len(om), cutoff)}
    return np.array(sorted(v for v in xs if v > 0))


def propagator_bound_scan(M: SelfEnergyMatrix, eta: float, rho: float, x_grid=None, cutoff: int = 50,
                          omega=None, norm: str = "l1", raise_on_fail: bool = False) -> BoundScanReport:
    """Check ``|g(x)| <= max(2 mu_N / x^2, 2 / mu_1)`` where ``x^2 > rho eta^{2k0-1}``.

    ``mu_1, mu_N`` are the extreme eigenvalues of ``P(eta)``. Points below the
    threshold are recorded but not checked. ``rho_min`` is the smallest
    threshold constant for which every grid point above it passes.

    Raises
    ------
    BoundViolated
        A checked point violates the bound (only with ``raise_on_fail``).
    """
    if x_grid is None:
        if omega is None:
            raise ValidationError("either x_grid or omega is required")
        x_grid = divisor_grid(omega, cutoff)
    P, _, _ = M.blocks(eta)
    mu = np.linalg.eigvalsh(0.5 * (P + P.T).real)
    mu1, muN = float(mu[0]), float(mu[-1])
    thr = rho * eta ** (2 * M.k0 - 1)
    rep = BoundScanReport(eta, rho, norm, mu1, muN)
    worst = 0.0
    for x in np.asarray(x_grid, float):
        g = np.linalg.inv(1j * x * np.eye(2 * M.dims) - M.at(x, eta))
        val = operator_norm(g, norm)
        bound = max(2 * muN / x**2, 2 / mu1)
        checked = x * x > thr
        rep.points.append((float(x), val, bound, checked))
        if val > bound:
            worst = max(worst, x * x / eta ** (2 * M.k0 - 1))
            if checked:
                rep.violations.append(float(x))
    rep.rho_min = worst
    rep.ok = not rep.violations
    if raise_on_fail and not rep.ok:
        raise BoundViolated(f"propagator bound fails at x={rep.violations[:5]}")
    return rep


# -- multiscale support functions -----------------------------------------

def smooth_step(t) -> np.ndarray:
    """C-infinity step: 0 for ``t <= 0``, 1 for ``t >= 1``."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


@dataclass(frozen=True)
class ScaleBand:
    """Cutoffs ``psi_n(D) = psi(4^n D)`` and ``chi_n = 1 - psi_n``.

    ``psi`` vanishes for ``D <= C0^2/4``, equals one for ``D >= C0^2`` and is
    the C-infinity step :func:`smooth_step` in between.
    """

    C0: float
    n: int = 0

    def psi(self, D) -> np.ndarray:
        D = np.ldexp(np.asarray(D, dtype=float), 2 * self.n)
        lo = self.C0**2 / 4
        return smooth_step((D - lo) / (self.C0**2 - lo))

    def chi(self, D) -> np.ndarray:
        return 1.0 - self.psi(D)


def scale_functions(C0: float):
    """Factory ``n -> ScaleBand(C0, n)``."""
    if C0 <= 0:
        raise ValidationError("C0 must be positive")
    return lambda n: ScaleBand(C0, n)


def n0_from_threshold(C0: float, threshold: float) -> int:
    """Integer ``n0`` with ``C0^2 4^{-(n0+1)} < threshold <= C0^2 4^{-n0}``.

    Raises
    ------
    OutOfRange
        ``threshold`` is not in ``(0, C0^2)``.
    """
    if not 0 < threshold < C0**2:
        raise OutOfRange(f"threshold {threshold} outside (0, C0^2={C0**2})")
    n = 0
    while threshold <= math.ldexp(C0**2, -2 * (n + 1)):
        n += 1
    return n


def n0_from_epsilon(C0: float, rho: float, eta_bar: float, k0: int) -> int:
    """``n0`` for ``eps_bar = eta_bar^k0`` and threshold ``rho eps_bar eta_bar^{k0-1}``."""
    return n0_from_threshold(C0, rho * eta_bar**k0 * eta_bar ** (k0 - 1))


# -- lowest-degree scale-[0] clusters --------------------------------------

def _positive_modes(model: Model) -> list[tuple[int, ...]]:
    out = []
    for nu in model.f.modes():
        if any(nu) and tuple(nu) > tuple(-v for v in nu):
            out.append(tuple(nu))
    return sorted(set(out))


@dataclass
class ClusterFamily:
    """Two ``f`` nodes of modes ``mu`` and ``-mu`` joined by one line.

    The family runs over the four attachments of the entering and exiting
    lines; configuration ``(e, o)`` has the entering line on node ``e`` and the
    exiting line on node ``o`` (node 0 has mode ``mu``).
    """

    mu: tuple
    t1: list
    t2: list
    t3: list

    @property
    def modes(self) -> tuple:
        return self.mu, tuple(-v for v in self.mu)


class FirstBandSelfEnergy:
    """``M(x, eta) = M0(eta) + eta^{2k0} sum_F V_F(x; eta)``.

    Internal lines of the ``2 k0`` clusters carry the scale-``[0]`` propagator
    ``psi_0(y^2) (iy - M0(eta))^{-1}``. Only the ``f`` nodes of the skeleton
    enter the families; further ``H0`` nodes would need third action
    derivatives of ``H0``, which vanish for quadratic ``H0``.
    """

    def __init__(self, model: Model, M0: SelfEnergyMatrix, resonance: ResonanceData | None = None,
                 use_cutoff: bool = True):
        self.model = model
        self.M0 = M0
        res = analyze(model, sigma=M0.sigma) if resonance is None else resonance
        self.ctx = TreeContext(model, res, M0.beta1)
        self.band = ScaleBand(M0.C0, 0)
        self.use_cutoff = use_cutoff
        self.families = [self._family(mu) for mu in _positive_modes(model)]
        D = 2 * M0.k0
        self.single = (_single_node_clusters(self.ctx, D, zero_mode_only=False)
                       - _single_node_clusters(self.ctx, D, zero_mode_only=True))

    dims = property(lambda self: self.M0.dims)
    k0 = property(lambda self: self.M0.k0)
    sigma = property(lambda self: self.M0.sigma)
    beta1 = property(lambda self: self.M0.beta1)
    hessian = property(lambda self: self.M0.hessian)
    C0 = property(lambda self: self.M0.C0)

    def _family(self, mu) -> ClusterFamily:
        n2 = 2 * self.dims
        t1, t2, t3 = [], [], []
        for nu in (mu, tuple(-v for v in mu)):
            a = np.zeros(n2, dtype=complex)
            b = np.zeros((n2, n2), dtype=complex)
            c = np.zeros((n2, n2, n2), dtype=complex)
            for gp in range(n2):
                a[gp] = self.ctx.node_factor(1, nu, gp, [])
                for i in range(n2):
                    b[gp, i] = self.ctx.node_factor(1, nu, gp, [i])
                    for j in range(n2):
                        c[gp, i, j] = self.ctx.node_factor(1, nu, gp, [i, j])
            t1.append(a)
            t2.append(b)
            t3.append(c)
        return ClusterFamily(tuple(mu), t1, t2, t3)

    def propagator0(self, y: float, eta: float) -> np.ndarray:
        g = np.linalg.inv(1j * y * np.eye(2 * self.dims) - self.M0(eta))
        return g * float(self.band.psi(y * y)) if self.use_cutoff else g

    def configuration(self, fam: ClusterFamily, e: int, o: int, x: float, eta: float) -> np.ndarray:
        """Value (without ``eta^{2k0}``) of one cluster of the family."""
        om = self.model.omega_vec
        if e != o:
            y = float(np.dot(om, fam.modes[e])) + x
            return fam.t2[o] @ self.propagator0(y, eta) @ fam.t2[e]
        u = 1 - e
        y = float(np.dot(om, fam.modes[u]))
        v = self.propagator0(y, eta) @ fam.t1[u]
        return np.tensordot(fam.t3[e], v, axes=(2, 0))

    def family_value(self, fam: ClusterFamily, x: float, eta: float) -> np.ndarray:
        return sum(self.configuration(fam, e, o, x, eta) for e in (0, 1) for o in (0, 1))

    def correction(self, x: float, eta: float) -> np.ndarray:
        n2 = 2 * self.dims
        out = np.zeros((n2, n2), dtype=complex)
        for fam in self.families:
            out += self.family_value(fam, x, eta)
        return out

    def single_node(self, eta: float) -> np.ndarray:
        """Clusters with one node of zero mode and a subtree with nonzero modes."""
        powers = float(eta) ** np.arange(self.single.shape[0])
        return np.tensordot(powers, self.single, axes=(0, 0))

    def at(self, x: float, eta: float) -> np.ndarray:
        return self.M0(eta) + self.single_node(eta) + eta ** (2 * self.k0) * self.correction(x, eta)

    def blocks(self, eta: float, x: float = 0.0):
        M = self.at(x, eta)
        n = self.dims
        return M[n:, :n], M[:n, :n], M[:n, n:]


@dataclass
class CancellationReport:
    families: list
    value_max: float
    derivative_max: float
    single_max: float
    ok: bool
    control_ok: bool

    def as_dict(self) -> dict:
        return {"families": [list(f) for f in self.families], "valueMax": self.value_max,
                "derivativeMax": self.derivative_max, "singleClusterMax": self.single_max,
                "ok": self.ok, "controlOk": self.control_ok}


def cancellation_family_check(model: Model, M0: SelfEnergyMatrix | None = None, x: float = 0.0,
                              eta: float = 1e-2, value_tol: float = 1e-10, deriv_tol: float = 1e-7,
                              control_tol: float = 1e-6, raise_on_fail: bool = False,
                              resonance: ResonanceData | None = None) -> CancellationReport:
    """Family sums of the lowest-degree (``2 k0``) scale-``[0]`` clusters.

    At ``x`` the entries in an ``A_i`` row or an ``alpha_j`` column of each
    family sum must vanish, and so must the ``x``-derivative of the
    ``(A_i, alpha_j)`` entries (central difference with step ``1e-5 C0``).
    Single clusters must not vanish (negative control).

    Raises
    ------
    CancellationViolated
        A family sum exceeds its tolerance (only with ``raise_on_fail``).
    """
    M0 = self_energy_scale_minus1(model, resonance) if M0 is None else M0
    fb = FirstBandSelfEnergy(model, M0, resonance)
    n = model.dims
    rows = list(range(n - 1))
    cols = list(range(n, 2 * n - 1))
    h = 1e-5 * M0.C0
    vmax = dmax = smax = 0.0
    for fam in fb.families:
        V = fb.family_value(fam, x, eta)
        if rows:
            vmax = max(vmax, float(np.abs(V[rows, :]).max()))
        if cols:
            vmax = max(vmax, float(np.abs(V[:, cols]).max()))
        if rows and cols:
            dV = (fb.family_value(fam, x + h, eta) - fb.family_value(fam, x - h, eta)) / (2 * h)
            dmax = max(dmax, float(np.abs(dV[np.ix_(rows, cols)]).max()))
        for e in (0, 1):
            for o in (0, 1):
                C = fb.configuration(fam, e, o, x, eta)
                if rows:
                    smax = max(smax, float(np.abs(C[rows, :]).max()))
                if cols:
                    smax = max(smax, float(np.abs(C[:, cols]).max()))
    ok = vmax < value_tol and dmax < deriv_tol
    rep = CancellationReport([f.mu for f in fb.families], vmax, dmax, smax, ok, smax > control_tol)
    if raise_on_fail and not ok:
        raise CancellationViolated(f"family sums do not cancel: value {vmax:.2e}, derivative {dmax:.2e}")
    return rep


# -- eigenvalue estimate ---------------------------------------------------

@dataclass
class EigenEstimate:
    lam: float
    ell: float
    x: float
    eta: float
    eigenvalues: list
    gap: float

    def as_dict(self) -> dict:
        return {"lambda": self.lam, "ell": self.ell, "x": self.x, "eta": self.eta,
                "eigenvalues": self.eigenvalues, "gap": self.gap}


def _sqrtm_spd(H: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(H)
    return (V * np.sqrt(w)) @ V.T


def lowest_eigenvalue_estimate(M, x: float, eta: float, rho: float | None = None,
                               isolation: float = 0.1) -> EigenEstimate:
    """Isolated eigenvalue ``lambda`` of the reduced slow block.

    Forms ``N = -R - (-ix + Q) P^{-1} (ix + Q^T)``, conjugates it by the square
    root of the action Hessian of ``H0`` and returns ``lambda = mu + x^2`` for
    the eigenvalue ``mu`` farthest from ``-x^2``, with
    ``ell = lambda / (eps eta^{k0-1})``.

    Raises
    ------
    OutOfRange
        ``x^2 > rho eta^{2k0-1}`` when ``rho`` is given.
    NotIsolated
        The gap to the other eigenvalues is below ``isolation |eps| eta^{k0-1}``.
    """
    k0 = M.k0
    if rho is not None and x * x > rho * eta ** (2 * k0 - 1):
        raise OutOfRange(f"x^2={x * x:.3e} above rho eta^(2k0-1)")
    P, Q, R = M.blocks(eta, x)
    n = M.dims
    I = np.eye(n)
    Nm = -R - (-1j * x * I + Q) @ np.linalg.solve(P, 1j * x * I + Q.conj().T)
    S = _sqrtm_spd(M.hessian)
    T = S @ Nm @ S
    mu = np.linalg.eigvalsh(0.5 * (T + T.conj().T))
    idx = int(np.argmax(np.abs(mu + x * x)))
    lam = float(mu[idx] + x * x)
    scale = abs(M.sigma) * eta ** (2 * k0 - 1)
    others = np.delete(mu, idx)
    gap = float(np.min(np.abs(others - mu[idx]))) if len(others) else math.inf
    if gap <= isolation * scale:
        raise NotIsolated(f"eigenvalue gap {gap:.3e} below {isolation * scale:.3e}")
    ell = lam / (M.sigma * scale)
    return EigenEstimate(lam, ell, float(x), float(eta), [float(v) for v in mu], gap)


def ell_limit(resonance: ResonanceData, beta1: float, hessian: np.ndarray) -> float:
    """``c k0 d_B^2 H0 beta1^{k0-1}``."""
    n = hessian.shape[0]
    return resonance.c * resonance.k0 * hessian[n - 1, n - 1] * beta1 ** (resonance.k0 - 1)


def ell_convergence(M, limit: float, etas=(1e-2, 1e-3, 1e-4)) -> dict:
    """Errors ``|ell(eta) - limit|`` at ``x = 0`` and their log-log slope."""
    ells = [lowest_eigenvalue_estimate(M, 0.0, e).ell for e in etas]
    errs = [abs(v - limit) for v in ells]
    slope = math.nan
    if all(e > 0 for e in errs):
        slope = float(np.polyfit(np.log(etas), np.log(errs), 1)[0])
    return {"etas": list(etas), "ells": ells, "errors": errs, "limit": limit, "slope": slope}


@dataclass
class ResolventBoundReport:
    points: list   # (x, smallest |eigenvalue|, bound)
    excluded: int
    min_ratio: float
    ok: bool

    def as_dict(self) -> dict:
        return {"checked": len(self.points), "excluded": self.excluded, "minRatio": self.min_ratio, "ok": self.ok}


def resolvent_lower_bound_scan(M, eta: float, x_grid, rho: float) -> ResolventBoundReport:
    """Check ``s_min(ix - M) >= min(x^2, |x^2 - lambda(x)|) / (4 mu)`` for ``x^2 <= rho eta^{2k0-1}``.

    ``s_min`` is the smallest absolute eigenvalue of the Hermitian matrix
    ``(ix - M) E`` and ``mu`` the largest eigenvalue of ``P``. Grid points
    outside the small-``x`` regime are counted as excluded.
    """
    E = e_matrix(M.dims)
    P, _, _ = M.blocks(eta)
    mu = float(np.linalg.eigvalsh(0.5 * (P + P.T).real)[-1])
    thr = rho * eta ** (2 * M.k0 - 1)
    pts, excluded, ratio = [], 0, math.inf
    for x in np.asarray(x_grid, float):
        if x * x > thr or x == 0:
            excluded += 1
            continue
        A = (1j * x * np.eye(2 * M.dims) - M.at(x, eta)) @ E
        smin = float(np.min(np.abs(np.linalg.eigvalsh(0.5 * (A + A.conj().T)))))
        lam = lowest_eigenvalue_estimate(M, x, eta).lam
        bound = min(x * x, abs(x * x - lam)) / (4 * mu)
        pts.append((float(x), smin, bound))
        if bound > 0:
            ratio = min(ratio, smin / bound)
    return ResolventBoundReport(pts, excluded, ratio, bool(ratio >= 1.0))


# -- excluded measure ------------------------------------------------------

def eigenvalue_function(M, x: float = 0.0):
    """``eps -> lambda`` with ``eta = |eps|^{1/k0}`` (``eps`` of the sign of ``M``)."""
    def lam(eps: float) -> float:
        eta = abs(eps) ** (1.0 / M.k0)
        return lowest_eigenvalue_estimate(M, x, eta).lam
    return lam


@dataclass
class ExcludedMeasureReport:
    intervals: list
    measure: float
    bound: float
    K: float
    threshold_scale: float
    modes_checked: int
    ok: bool

    def as_dict(self) -> dict:
        return {"intervals": self.intervals, "measure": self.measure, "bound": self.bound, "K": self.K,
                "modesChecked": self.modes_checked, "ok": self.ok}


def _merge(intervals):
    out = []
    for a, b in sorted(intervals):
        if out and a <= out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return [tuple(v) for v in out]


def excluded_measure_single_scale(lam, omega, m: int, cutoff: int, tau1: float, eps_range, C0: float,
                                  k0: int, delta1: float = 0.25, samples: int = 256) -> ExcludedMeasureReport:
    """Values of ``eps`` where ``| |x| - sqrt(lambda(eps)) | < 2^{-m/2} C0 / |nu|^tau1``.

    For each ``0 < |nu| <= cutoff`` with ``x = omega . nu`` the excluded set is
    found by bracketing ``sqrt(lambda) = |x| -+ threshold``. The bound sums the
    per-mode estimates ``2 threshold / min |d sqrt(lambda) / d eps|`` over the
    modes allowed by the Diophantine filter, and ``K`` expresses it in units of
    ``C0 2^{-m/2} |eps| eta^{delta1 (k0 - 1/2)}`` at the top of the range.

    Raises
    ------
    NonMonotone
        ``lambda`` is not strictly monotone on the range.
    """
    lo, hi = sorted(float(v) for v in eps_range)
    grid = np.linspace(lo, hi, samples)
    lv = np.array([lam(e) for e in grid])
    dl = np.diff(lv)
    if not (np.all(dl > 0) or np.all(dl < 0)):
        raise NonMonotone("lambda(eps) is not strictly monotone on the range")
    thr_scale = C0 * 2.0 ** (-m / 2)
    eps_top = max(abs(lo), abs(hi))
    eta_top = eps_top ** (1.0 / k0)
    unit = thr_scale * eps_top * eta_top ** (delta1 * (k0 - 0.5))
    if lv.max() <= 0:
        return ExcludedMeasureReport([], 0.0, 0.0, 0.0, thr_scale, 0, True)
    pos = lv > 0
    if not pos.all():
        raise NonMonotone("lambda(eps) changes sign on the range")
    s = np.sqrt(lv)
    smin, smax = float(s.min()), float(s.max())
    ds = np.abs(np.diff(s) / np.diff(grid))
    dmin = float(ds.min())

    def sqrt_lam(e):
        return math.sqrt(lam(e))

    def solve(y):
        if y <= smin:
            return grid[int(np.argmin(s))]
        if y >= smax:
            return grid[int(np.argmax(s))]
        i = int(np.searchsorted(s, y)) if s[-1] > s[0] else int(np.searchsorted(-s, -y))
        i = min(max(i, 1), samples - 1)
        return brentq(lambda e: sqrt_lam(e) - y, grid[i - 1], grid[i], xtol=1e-15, rtol=1e-14)

    om = np.atleast_1d(np.asarray(omega, float))
    raw, bound, checked = [], 0.0, 0
    for nu in integer_vectors(len(om), cutoff):
        norm = sum(abs(v) for v in nu)
        x = abs(float(np.dot(om, nu)))
        thr = thr_scale / norm**tau1
        if x - thr > smax or x + thr < smin:
            continue
        checked += 1
        bound += 2 * thr / dmin
        a, b = solve(x - thr), solve(x + thr)
        if a != b:
            raw.append((min(a, b), max(a, b)))
    merged = _merge(raw)
    measure = float(sum(b - a for a, b in merged))
    K = bound / unit if unit > 0 else 0.0
    return ExcludedMeasureReport(merged, measure, bound, K, thr_scale, checked, measure <= bound * (1 + 1e-12))
