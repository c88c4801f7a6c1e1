"""Order-by-order construction of the fractional Lindstedt series.

The torus is parametrized as ``X(psi) = X0(psi) + sum_k eta^k X^(k)(psi)``
with ``X0 = (0, 0, psi, beta0)`` and ``eps = sigma eta^k0``. The slow-angle
average of ``X^(k)`` is ``beta_k``; fast-angle averages vanish.

At step ``j`` the slow average ``beta_{j-k0}`` is fixed first, by requiring
that the average of ``d_beta f`` vanish at order ``j - 1``; this condition is
linear in the unknown with coefficient ``k0 c beta1^{k0-1}``. Then the
nonzero modes are divided by ``i omega.nu`` and the action averages are
obtained from the inverse Hessian of ``H0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CompatibilityViolation, DegenerateGrid, ValidationError, ZeroBranch
from .fourier import AngleGrid, Composer, grid_size
from .model import Model
from .resonance import ResonanceData, analyze, beta1_branches

COMPAT_TOL = 1e-9


@dataclass
class EtaSeries:
    """Truncated fractional series with its working grid.

    ``coeffs[k]`` has shape ``(2N, *grid)`` and holds FFT-ordered Fourier
    coefficients of ``X^(k)``; ``coeffs[0]`` is unused (zero).
    """

    model: Model
    resonance: ResonanceData
    beta1: float
    K: int
    grid: AngleGrid
    coeffs: np.ndarray
    determined: list = field(default_factory=list)
    compatibility: dict = field(default_factory=dict)
    solved: int = 0

    @property
    def dims(self) -> int:
        return self.model.dims

    @property
    def k0(self) -> int:
        return self.resonance.k0

    @property
    def sigma(self) -> int:
        return self.resonance.sigma

    @property
    def branch_label(self) -> str:
        return "plus" if self.beta1 >= 0 else "minus"

    def betas(self) -> list[float]:
        """``[beta_1, ..., beta_K]`` (undetermined entries are zero)."""
        z = self.grid.zero_index()
        return [float(self.coeffs[k][(2 * self.dims - 1,) + z].real) for k in range(1, self.K + 1)]

    def coefficient(self, k: int, nu, component: int) -> complex:
        if k < 1 or k > self.K:
            return 0.0j
        if any(abs(v) >= self.grid.G // 2 for v in nu):
            return 0.0j
        return complex(self.coeffs[k][(component,) + self.grid.index(nu)])

    def set_beta(self, k: int, value: float) -> None:
        self.coeffs[k][(2 * self.dims - 1,) + self.grid.zero_index()] = value

    def support(self, k: int, tol: float = 1e-13) -> list[tuple[int, ...]]:
        scale = max(1.0, float(np.abs(self.coeffs[k]).max()))
        mag = np.abs(self.coeffs[k]).max(axis=0)
        return self.grid.support(mag, tol * scale)


def _deviation_values(series: EtaSeries, M: int) -> np.ndarray:
    """Grid values of the deviation series, orders ``0..M`` (orders above ``K`` are zero)."""
    n2 = 2 * series.dims
    dev = np.zeros((n2, M + 1) + series.grid.shape, dtype=complex)
    top = min(M, series.K)
    if top >= 1:
        vals = series.grid.values(series.coeffs[1:top + 1])
        dev[:, 1:top + 1] = np.moveaxis(vals, 0, 1)
    return dev


def new_series(model: Model, resonance: ResonanceData, beta1: float, K: int,
               residual_orders: int | None = None) -> EtaSeries:
    """Empty series with ``beta_1`` set and a grid resolving ``residual_orders``."""
    if K < 1:
        raise ValidationError("K must be at least 1")
    if beta1 == 0:
        raise ZeroBranch("beta1 = 0 selected")
    M = residual_orders if residual_orders is not None else 2 * K + 4
    harmonic = (max(M, K) + 1) * max(1, model.f.max_mode())
    grid = AngleGrid(model.dims - 1, grid_size(harmonic))
    coeffs = np.zeros((K + 1, 2 * model.dims) + grid.shape, dtype=complex)
    series = EtaSeries(model, resonance, beta1, K, grid, coeffs, determined=[False] * (K + 1))
    series.set_beta(1, beta1)
    series.determined[1] = True
    return series


def _order_gradients(series: EtaSeries, j: int):
    comp = Composer(series.model, series.grid, series.resonance.beta0)
    dev = _deviation_values(series, j)
    return comp.grad_f(dev), comp.grad_h0(dev)


def check_compatibility(series: EtaSeries, k: int) -> list[float]:
    """Absolute values of the four zero-average identities at order ``k``.

    Order: fast-angle force, slow-angle force, fast-action balance, slow-action
    balance. Fast components are reported through their largest entry.
    """
    n = series.dims
    k0 = series.k0
    m = k - k0
    gf, gh = _order_gradients(series, k)
    z = series.grid.zero_index()
    if m >= 0:
        F0 = series.grid.coeffs(gf[:, m])[(slice(None),) + z]
    else:
        F0 = np.zeros(2 * n, dtype=complex)
    H0 = series.grid.coeffs(gh[:, k])[(slice(None),) + z]
    # gh already contains the Hessian times the order-k action averages
    balance = H0 + series.sigma * F0[:n]
    fast_angle = float(np.abs(F0[n:2 * n - 1]).max()) if n > 1 else 0.0
    fast_action = float(np.abs(balance[: n - 1]).max()) if n > 1 else 0.0
    return [fast_angle, float(abs(F0[2 * n - 1])), fast_action, float(abs(balance[n - 1]))]


def solve_order(series: EtaSeries, j: int, tol: float = COMPAT_TOL) -> EtaSeries:
    """Compute ``X^(j)`` in place, fixing ``beta_{j-k0}`` first when due.

    Raises
    ------
    CompatibilityViolation
        A zero-average identity fails beyond ``tol`` times the coefficient scale.
    ZeroBranch
        ``beta1`` vanishes.
    """
    if j != series.solved + 1:
        raise ValidationError(f"orders must be solved in sequence (next is {series.solved + 1})")
    n = series.dims
    k0 = series.k0
    sigma = series.sigma
    c = series.resonance.c
    b1 = series.beta1
    if b1 == 0:
        raise ZeroBranch("beta1 = 0")
    g = series.grid
    z = g.zero_index()
    slow = 2 * n - 1
    m = j - k0
    if m >= 2:
        gf, _ = _order_gradients(series, j - 1)
        D = g.coeffs(gf[slow, j - 1])[z]
        series.set_beta(m, float(np.real(-D / (k0 * c * b1 ** (k0 - 1)))))
        series.determined[m] = True
    gf, gh = _order_gradients(series, j)
    if m >= 0:
        F = g.coeffs(gf[:, m])
    else:
        F = np.zeros((2 * n,) + g.shape, dtype=complex)
    Hn = g.coeffs(gh[:, j])
    hess = series.model.hessian()
    div = 1j * g.divisors(series.model.omega)
    nonzero = div != 0
    safe = np.where(nonzero, div, 1.0)
    X = np.zeros((2 * n,) + g.shape, dtype=complex)
    X[:n] = np.where(nonzero, -sigma * F[n:] / safe, 0.0)
    X[(slice(0, n),) + z] = -np.linalg.solve(hess, Hn[(slice(None),) + z] + sigma * F[(slice(0, n),) + z])
    total = np.tensordot(hess, X[:n], axes=(1, 0)) + Hn + sigma * F[:n]
    X[n:] = np.where(nonzero, total / safe, 0.0)
    X[(slice(n, 2 * n),) + z] = 0.0
    keep_beta = series.coeffs[j][(slow,) + z] if j <= series.K else 0.0
    series.coeffs[j] = X
    series.coeffs[j][(slow,) + z] = keep_beta
    series.solved = j
    res = check_compatibility(series, j)
    series.compatibility[j] = res
    scale = max(1.0, float(np.abs(series.coeffs[1:j + 1]).max()))
    if max(res) > tol * scale:
        raise CompatibilityViolation(f"order {j}: zero-average residuals {res}")
    return series


def select_branch(resonance: ResonanceData, branch: str | float) -> float:
    """``plus``, ``minus`` or ``auto`` (the first real branch) or an explicit value."""
    branches = beta1_branches(resonance.a, resonance.c, resonance.sigma, resonance.k0)
    if not branches:
        raise ValidationError("no real branch: k0 even and sigma a c > 0")
    if isinstance(branch, (int, float)):
        return float(branch)
    if branch == "auto":
        return branches[0]
    if branch == "plus":
        pos = [b for b in branches if b > 0]
    elif branch == "minus":
        pos = [b for b in branches if b < 0]
    else:
        raise ValidationError(f"unknown branch {branch!r}")
    if not pos:
        raise ValidationError(f"branch {branch!r} not available: {branches}")
    return pos[0]


def expand(model: Model, K: int, branch: str | float = "auto", beta0: float | None = None,
           sigma: int = 1, resonance: ResonanceData | None = None,
           residual_orders: int | None = None) -> EtaSeries:
    """Fractional series through order ``K``.

    Raises
    ------
    AssumptionAViolated
        The constant ``a`` vanishes (surfaced before any order is solved).
    """
    res = analyze(model, beta0, sigma) if resonance is None else resonance
    b1 = select_branch(res, branch)
    series = new_series(model, res, b1, K, residual_orders)
    for j in range(1, K + 1):
        solve_order(series, j)
    return series


# -- residual of the equations of motion ------------------------------------

def residual_series(series: EtaSeries, orders: int | None = None) -> np.ndarray:
    """Eta-Taylor coefficients of ``omega.d X - E dH(X)`` for the truncated series.

    Shape ``(M+1, 2N, *grid)`` of Fourier coefficients; orders up to ``K``
    vanish to rounding, the first nonzero one is ``K + 1``.
    """
    n = series.dims
    M = 2 * series.K + 4 if orders is None else orders
    if series.grid.G < 2 * (M + 1) * max(1, series.model.f.max_mode()) + 2:
        raise ValidationError("grid too coarse for the requested residual orders")
    comp = Composer(series.model, series.grid, series.resonance.beta0)
    dev = _deviation_values(series, M)
    gf = comp.grad_f(dev)
    gh = comp.grad_h0(dev)
    k0 = series.k0
    sigma = series.sigma
    g = series.grid
    div = 1j * g.divisors(series.model.omega)
    out = np.zeros((M + 1, 2 * n) + g.shape, dtype=complex)
    for j in range(M + 1):
        Xj = series.coeffs[j] if 1 <= j <= series.K else np.zeros((2 * n,) + g.shape)
        F = g.coeffs(gf[:, j - k0]) if j >= k0 else np.zeros((2 * n,) + g.shape)
        H = g.coeffs(gh[:, j])
        out[j, :n] = div * Xj[:n] + sigma * F[n:]
        out[j, n:] = div * Xj[n:] - H - sigma * F[:n]
    return out


def residual(series: EtaSeries, eta: float, orders: int | None = None) -> float:
    """l1 norm of the Fourier coefficients of the equations-of-motion defect at ``eta``."""
    R = residual_series(series, orders)
    powers = float(eta) ** np.arange(R.shape[0])
    total = np.tensordot(powers, R, axes=(0, 0))
    return float(np.abs(total).sum())


def _vector_gradient(fn, dims, actions, alpha, beta):
    """Gradient of ``fn`` at arrays of points (leading axis = component)."""
    out = np.zeros((2 * dims,) + beta.shape, dtype=complex)
    for (nu, m, p), c in fn.terms.items():
        phase = np.exp(1j * (np.tensordot(np.asarray(nu, float), alpha, axes=(0, 0)) + m * beta))
        mono = np.ones(beta.shape, dtype=complex)
        for i in range(dims):
            mono = mono * actions[i] ** p[i]
        base = c * phase
        for i in range(dims - 1):
            if nu[i]:
                out[dims + i] += 1j * nu[i] * base * mono
        if m:
            out[2 * dims - 1] += 1j * m * base * mono
        for i in range(dims):
            if p[i]:
                lower = np.ones(beta.shape, dtype=complex)
                for q in range(dims):
                    lower = lower * actions[q] ** (p[q] - (q == i))
                out[i] += p[i] * base * lower
    return out


def residual_direct(series: EtaSeries, eta: float) -> float:
    """Same defect evaluated pointwise at fixed ``eta`` in double precision.

    Independent of the eta-Taylor route; accurate while the defect is well
    above rounding of ``O(eps)`` quantities.
    """
    n = series.dims
    g = series.grid
    powers = float(eta) ** np.arange(series.K + 1)
    C = np.tensordot(powers, series.coeffs, axes=(0, 0))
    vals = np.real(g.values(C))
    actions = vals[:n]
    alpha = g.psi + vals[n:2 * n - 1]
    beta = series.resonance.beta0 + vals[2 * n - 1]
    eps = series.sigma * eta ** series.k0
    gf = _vector_gradient(series.model.f, n, actions, alpha, beta)
    gh = _vector_gradient(series.model.H0, n, actions, alpha, beta)
    div = 1j * g.divisors(series.model.omega)
    dX = np.real(g.values(div * C))
    R = np.empty_like(vals)
    R[:n] = dX[:n] + eps * np.real(gf[n:])
    R[n:] = dX[n:] - np.real(gh[:n]) - eps * np.real(gf[:n])
    return float(np.abs(g.coeffs(R)).sum())


@dataclass
class ResidualReport:
    eta_values: list
    residual_norms: list
    fitted_exponent: float

    def as_dict(self) -> dict:
        return {"etaValues": self.eta_values, "residualNorms": self.residual_norms,
                "fittedExponent": self.fitted_exponent}


def residual_scaling(series: EtaSeries, eta_grid, orders: int | None = None) -> ResidualReport:
    """Least-squares slope of ``log residual`` against ``log eta``.

    Raises
    ------
    DegenerateGrid
        Fewer than four points, points outside ``(0, 0.05]``, or a vanishing residual.
    """
    etas = [float(e) for e in eta_grid]
    if len(etas) < 4 or len(set(etas)) < 4:
        raise DegenerateGrid("need at least four distinct eta values")
    if any(e <= 0 or e > 0.05 for e in etas):
        raise DegenerateGrid("eta values must lie in (0, 0.05]")
    R = residual_series(series, orders)
    norms = []
    for e in etas:
        powers = e ** np.arange(R.shape[0])
        norms.append(float(np.abs(np.tensordot(powers, R, axes=(0, 0))).sum()))
    if any(not np.isfinite(v) or v <= 0 for v in norms):
        raise DegenerateGrid("residual vanishes; exponent undefined")
    slope = float(np.polyfit(np.log(etas), np.log(norms), 1)[0])
    return ResidualReport(etas, norms, slope)


def evaluate_torus(series: EtaSeries, eta: float, psi) -> np.ndarray:
    """Phase-space point ``X0(psi) + sum_k eta^k X^(k)(psi)`` (real)."""
    n = series.dims
    psi = np.atleast_1d(np.asarray(psi, dtype=float))
    g = series.grid
    phase = np.exp(1j * np.tensordot(psi, g.modes, axes=(0, 0)))
    powers = float(eta) ** np.arange(series.K + 1)
    C = np.tensordot(powers, series.coeffs, axes=(0, 0))
    vals = np.tensordot(C, phase, axes=(list(range(1, 1 + g.d)), list(range(g.d))))
    point = np.zeros(2 * n, dtype=complex)
    point[n:2 * n - 1] = psi
    point[2 * n - 1] = series.resonance.beta0
    point += vals
    return point
