"""Hamiltonians in resonance-adapted coordinates.

Phase space points are ordered ``(A_1..A_{N-1}, B, alpha_1..alpha_{N-1}, beta)``.
Functions of these variables are finite sums of monomials

    coeff * exp(i nu.alpha + i m beta) * A_1^p_1 ... A_{N-1}^p_{N-1} B^p_N

stored in a dictionary keyed by ``(nu, m, p)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DiophantineViolation,
    DimensionMismatch,
    NonPrimitive,
    NotResonant,
    ParseError,
    RealityViolation,
    SingularHessian,
    ValidationError,
)

TermKey = tuple[tuple[int, ...], int, tuple[int, ...]]

REALITY_TOL = 1e-12
GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0


@dataclass(frozen=True, order=True)
class Mode:
    """Harmonic ``(nu, m)``: fast-angle vector ``nu`` and slow-angle index ``m``."""

    nu: tuple[int, ...]
    m: int = 0

    def negated(self) -> "Mode":
        return Mode(tuple(-v for v in self.nu), -self.m)


@dataclass(frozen=True)
class ComponentLabel:
    """One of the ``2N`` phase-space components.

    ``index`` runs over ``0..2N-1`` in the order ``A_1..A_{N-1}, B,
    alpha_1..alpha_{N-1}, beta``.
    """

    index: int
    dims: int

    def __post_init__(self):
        if not 0 <= self.index < 2 * self.dims:
            raise DimensionMismatch(f"label index {self.index} outside 0..{2 * self.dims - 1}")

    @property
    def is_action(self) -> bool:
        return self.index < self.dims

    @property
    def is_angle(self) -> bool:
        return not self.is_action

    @property
    def is_slow(self) -> bool:
        return self.index in (self.dims - 1, 2 * self.dims - 1)

    def partner(self) -> "ComponentLabel":
        """Action label for an angle label and vice versa."""
        shift = self.dims if self.is_action else -self.dims
        return ComponentLabel(self.index + shift, self.dims)

    @property
    def name(self) -> str:
        n = self.dims
        i = self.index
        if i < n - 1:
            return f"A{i + 1}"
        if i == n - 1:
            return "B"
        if i < 2 * n - 1:
            return f"alpha{i - n + 1}"
        return "beta"

    @classmethod
    def parse(cls, text: str, dims: int) -> "ComponentLabel":
        t = text.strip()
        try:
            if t == "B":
                return cls(dims - 1, dims)
            if t == "beta":
                return cls(2 * dims - 1, dims)
            if t.startswith("alpha"):
                j = int(t[5:] or "1")
                if 1 <= j <= dims - 1:
                    return cls(dims - 1 + j, dims)
            elif t.startswith("A"):
                j = int(t[1:] or "1")
                if 1 <= j <= dims - 1:
                    return cls(j - 1, dims)
        except ValueError:
            pass
        raise ValidationError(f"unknown component label {text!r} for N={dims}")

    def __str__(self) -> str:
        return self.name


def all_labels(dims: int) -> list[ComponentLabel]:
    return [ComponentLabel(i, dims) for i in range(2 * dims)]


def _clean_key(key, dims: int) -> TermKey:
    nu, m, p = key
    nu = tuple(int(v) for v in nu)
    p = tuple(int(v) for v in p)
    if len(nu) != dims - 1 or len(p) != dims:
        raise DimensionMismatch(
            f"term {key}: expected nu of length {dims - 1} and exponents of length {dims}"
        )
    if any(v < 0 for v in p):
        raise ValidationError(f"term {key}: negative action exponent")
    return nu, int(m), p


def _conj_key(key: TermKey) -> TermKey:
    nu, m, p = key
    return tuple(-v for v in nu), -m, p


@dataclass(frozen=True)
class AngleActionFunction:
    """Finite Fourier-polynomial function of ``(A, B, alpha, beta)``.

    Parameters
    ----------
    dims : int
        Number of degrees of freedom ``N``.
    terms : mapping
        ``(nu, m, p) -> complex`` with ``nu`` of length ``N-1`` and action
        exponents ``p`` of length ``N``. Must be closed under
        ``(nu, m) -> (-nu, -m)`` with conjugate coefficients.
    """

    dims: int
    terms: Mapping[TermKey, complex] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "terms", dict(self.terms))

    # -- structure -----------------------------------------------------
    def modes(self) -> list[tuple[int, ...]]:
        """Sorted fast-angle harmonics present in the function."""
        return sorted({k[0] for k in self.terms})

    def max_mode(self) -> int:
        """Largest ``|nu|`` (sum of absolute values) in the support."""
        return max((sum(abs(v) for v in k[0]) for k in self.terms), default=0)

    def max_slow_harmonic(self) -> int:
        return max((abs(k[1]) for k in self.terms), default=0)

    def max_degree(self) -> int:
        return max((sum(k[2]) for k in self.terms), default=0)

    def scale(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.terms.values())

    def is_angle_only(self) -> bool:
        return all(sum(k[2]) == 0 for k, c in self.terms.items() if c != 0)

    def is_action_only(self) -> bool:
        return all(not any(k[0]) and k[1] == 0 for k, c in self.terms.items() if c != 0)

    def reality_defect(self) -> float:
        worst = 0.0
        for key, c in self.terms.items():
            other = self.terms.get(_conj_key(key), 0.0)
            worst = max(worst, abs(c - np.conj(other)))
        return worst

    # -- algebra -------------------------------------------------------
    def scaled(self, factor: float) -> "AngleActionFunction":
        return AngleActionFunction(self.dims, {k: factor * c for k, c in self.terms.items()})

    def __add__(self, other: "AngleActionFunction") -> "AngleActionFunction":
        if other.dims != self.dims:
            raise DimensionMismatch("cannot add functions of different dimension")
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0.0) + c
        return AngleActionFunction(self.dims, out)

    def derivative(self, labels: Sequence[int | ComponentLabel]) -> "AngleActionFunction":
        """Exact partial derivative along the given component labels."""
        n = self.dims
        out: dict[TermKey, complex] = {}
        for (nu, m, p), c in self.terms.items():
            coeff = complex(c)
            p = list(p)
            for lab in labels:
                i = lab.index if isinstance(lab, ComponentLabel) else int(lab)
                if i < n:
                    coeff *= p[i]
                    p[i] -= 1
                    if p[i] < 0:
                        coeff = 0.0
                        break
                elif i < 2 * n - 1:
                    coeff *= 1j * nu[i - n]
                else:
                    coeff *= 1j * m
                if coeff == 0:
                    break
            if coeff != 0:
                key = (nu, m, tuple(p))
                out[key] = out.get(key, 0.0) + coeff
        return AngleActionFunction(n, out)

    # -- evaluation ----------------------------------------------------
    def __call__(self, actions, alpha, beta) -> complex:
        actions = np.asarray(actions, dtype=float).reshape(self.dims)
        alpha = np.asarray(alpha, dtype=float).reshape(self.dims - 1)
        total = 0.0 + 0.0j
        for (nu, m, p), c in self.terms.items():
            phase = np.dot(nu, alpha) + m * beta if nu else m * beta
            total += c * np.exp(1j * phase) * np.prod(actions ** np.asarray(p))
        return total

    def fourier_coefficient(self, nu: Sequence[int], actions, beta: float) -> complex:
        """``f_nu(I, beta)``: the coefficient of ``exp(i nu.alpha)``."""
        nu = tuple(int(v) for v in nu)
        actions = np.asarray(actions, dtype=float).reshape(self.dims)
        total = 0.0 + 0.0j
        for (knu, m, p), c in self.terms.items():
            if knu == nu:
                total += c * np.exp(1j * m * beta) * np.prod(actions ** np.asarray(p))
        return total

    def slow_profile(self, nu: Sequence[int], actions=None) -> dict[int, complex]:
        """Harmonics in ``beta`` of ``f_nu`` at fixed actions (default zero)."""
        nu = tuple(int(v) for v in nu)
        actions = np.zeros(self.dims) if actions is None else np.asarray(actions, float)
        out: dict[int, complex] = {}
        for (knu, m, p), c in self.terms.items():
            if knu == nu:
                out[m] = out.get(m, 0.0) + c * np.prod(actions ** np.asarray(p))
        return out


def build_function(dims: int, terms: Iterable, complete: bool = False) -> AngleActionFunction:
    """Validate a term list and return an :class:`AngleActionFunction`.

    Parameters
    ----------
    dims : int
        Number of degrees of freedom, at least 2.
    terms : iterable
        Either a mapping ``(nu, m, p) -> coeff`` or an iterable of
        ``((nu, m, p), coeff)`` pairs.
    complete : bool
        Add missing conjugate partners instead of rejecting the input.

    Raises
    ------
    DimensionMismatch
        Wrong lengths of ``nu`` or of the exponent vector.
    RealityViolation
        Conjugate partner missing or inconsistent (and ``complete`` is false).
    """
    if dims < 2:
        raise DimensionMismatch("need at least two degrees of freedom")
    items = terms.items() if isinstance(terms, Mapping) else terms
    out: dict[TermKey, complex] = {}
    for key, c in items:
        k = _clean_key(key, dims)
        out[k] = out.get(k, 0.0) + complex(c)
    if complete:
        for k in list(out):
            ck = _conj_key(k)
            if ck not in out:
                out[ck] = np.conj(out[k])
    scale = max((abs(c) for c in out.values()), default=0.0)
    for k, c in out.items():
        ck = _conj_key(k)
        if ck not in out:
            raise RealityViolation(f"term {k} has no conjugate partner {ck}")
        if abs(c - np.conj(out[ck])) > REALITY_TOL * max(1.0, scale):
            raise RealityViolation(f"coefficients of {k} and {ck} are not conjugate")
    # symmetrize to remove rounding asymmetry
    sym = {k: 0.5 * (c + np.conj(out[_conj_key(k)])) for k, c in out.items()}
    return AngleActionFunction(dims, {k: c for k, c in sym.items() if c != 0})


def average_over_fast_angles(f: AngleActionFunction) -> AngleActionFunction:
    """Restriction of ``f`` to the ``nu = 0`` harmonics."""
    zero = (0,) * (f.dims - 1)
    return AngleActionFunction(f.dims, {k: c for k, c in f.terms.items() if k[0] == zero})


def tensor_derivative(
    f: AngleActionFunction,
    labels: Sequence[int | ComponentLabel],
    point: tuple[Sequence[float], float] | None = None,
) -> dict[tuple[int, ...], complex]:
    """Mode-resolved derivative ``d_{gamma_1..gamma_p} f_nu`` at ``(I, beta0)``.

    Angle derivatives along ``alpha_i`` act as multiplication by ``i nu_i``.
    ``point`` is ``(actions, beta0)``; default is ``(0, 0)``.
    """
    if point is None:
        actions, beta0 = np.zeros(f.dims), 0.0
    else:
        actions, beta0 = point
    g = f.derivative(labels)
    return {nu: g.fourier_coefficient(nu, actions, beta0) for nu in g.modes()}


@dataclass(frozen=True)
class Frequency:
    """Fast frequency vector with a Diophantine certificate up to a mode cutoff.

    The constructor checks ``|omega.nu| * |nu|^tau0 >= C0`` for every
    ``0 < |nu| <= cutoff`` (``|nu|`` is the sum of absolute values).
    """

    omega: tuple[float, ...]
    C0: float
    tau0: float = 1.0
    cutoff: int = 50

    def __post_init__(self):
        object.__setattr__(self, "omega", tuple(float(w) for w in np.atleast_1d(self.omega)))
        if self.C0 <= 0 or self.tau0 <= 0 or self.cutoff < 1:
            raise ValidationError("Diophantine constants must be positive")
        worst = best_diophantine_constant(self.omega, self.tau0, self.cutoff)
        if worst < self.C0 * (1 - 1e-12):
            raise DiophantineViolation(
                f"|omega.nu||nu|^tau0 drops to {worst:.3e} < C0={self.C0:.3e} within |nu|<={self.cutoff}"
            )

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.omega)

    @classmethod
    def certified(cls, omega, tau0: float = 1.0, cutoff: int = 50) -> "Frequency":
        return cls(tuple(np.atleast_1d(omega)), best_diophantine_constant(omega, tau0, cutoff), tau0, cutoff)


def integer_vectors(dim: int, max_norm: int, nonzero: bool = True):
    """All integer vectors of length ``dim`` with ``sum |v_i| <= max_norm``."""
    for v in product(range(-max_norm, max_norm + 1), repeat=dim):
        s = sum(abs(x) for x in v)
        if s <= max_norm and (s > 0 or not nonzero):
            yield v


def best_diophantine_constant(omega, tau0: float, cutoff: int) -> float:
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    best = math.inf
    for nu in integer_vectors(len(omega), cutoff):
        norm = sum(abs(v) for v in nu)
        best = min(best, abs(float(np.dot(omega, nu))) * norm**tau0)
    return best


def _ext_gcd(a: int, b: int) -> tuple[int, int, int]:
    if b == 0:
        return (a, 1, 0) if a >= 0 else (-a, -1, 0)
    g, x, y = _ext_gcd(b, a % b)
    return g, y, x - (a // b) * y


def adapt_coordinates(omega0, nu0, tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Unimodular change of angles aligning a simple resonance with the last angle.

    Returns ``(S, omega)`` with ``det S = 1`` and ``S^T (omega, 0) = omega0``.
    New angles are ``S^{-T} theta`` and new actions ``S I``; the last row of
    ``S^{-T}`` is ``nu0``.

    Raises
    ------
    NotResonant
        ``omega0 . nu0`` is not zero within ``tol``.
    NonPrimitive
        The entries of ``nu0`` have a common divisor larger than one.
    """
    omega0 = np.asarray(omega0, dtype=float)
    nu0 = [int(v) for v in nu0]
    n = len(nu0)
    if omega0.shape != (n,) or n < 2:
        raise DimensionMismatch("omega0 and nu0 must be vectors of equal length >= 2")
    if abs(float(np.dot(omega0, nu0))) > tol * max(1.0, float(np.abs(omega0).max())):
        raise NotResonant(f"omega0 . nu0 = {np.dot(omega0, nu0):.3e}")
    g = 0
    for v in nu0:
        g = math.gcd(g, v)
    if g != 1:
        raise NonPrimitive(f"gcd of nu0 entries is {g}")
    # column operations W with nu0^T W = e_N^T
    row = list(nu0)
    W = [[int(i == j) for j in range(n)] for i in range(n)]

    def colop(i, j, a, b, c, d):
        # (col_i, col_j) <- (a col_i + b col_j, c col_i + d col_j)
        for r in range(n):
            wi, wj = W[r][i], W[r][j]
            W[r][i], W[r][j] = a * wi + b * wj, c * wi + d * wj
        ri, rj = row[i], row[j]
        row[i], row[j] = a * ri + b * rj, c * ri + d * rj

    last = n - 1
    for i in range(n - 1):
        if row[i] == 0:
            continue
        gg, x, y = _ext_gcd(row[last], row[i])
        p, q = row[last] // gg, row[i] // gg
        # new last = x*last + y*i (value gg); new i = -q*last + p*i (value 0); det = 1
        colop(last, i, x, y, -q, p)
    if row[last] == -1:
        colop(last, 0, -1, 0, 0, -1)
    assert row == [0] * (n - 1) + [1], row
    T = np.rint(np.linalg.inv(np.array(W, dtype=float))).astype(int)
    if round(np.linalg.det(T)) == -1:
        T[0] = -T[0]
    S = np.rint(np.linalg.inv(T.T.astype(float))).astype(int)
    new = T @ omega0
    return S, new[: n - 1]


def angle_transform(S: np.ndarray) -> np.ndarray:
    """Integer matrix mapping old angles to adapted angles."""
    return np.rint(np.linalg.inv(np.asarray(S, dtype=float).T)).astype(int)


def to_adapted(S, actions, angles) -> tuple[np.ndarray, np.ndarray]:
    S = np.asarray(S, dtype=float)
    return S @ np.asarray(actions, float), angle_transform(S) @ np.asarray(angles, float)


def from_adapted(S, actions, angles) -> tuple[np.ndarray, np.ndarray]:
    S = np.asarray(S, dtype=float)
    return np.linalg.solve(S, actions), S.T @ np.asarray(angles, float)


@dataclass(frozen=True)
class Model:
    """``H = omega.A + H0(A, B) + eps f(A, B, alpha, beta)`` in adapted coordinates."""

    dims: int
    omega: tuple[float, ...]
    H0: AngleActionFunction
    f: AngleActionFunction
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "omega", tuple(float(w) for w in np.atleast_1d(self.omega)))
        if len(self.omega) != self.dims - 1:
            raise DimensionMismatch(f"omega has length {len(self.omega)}, expected {self.dims - 1}")
        if self.H0.dims != self.dims or self.f.dims != self.dims:
            raise DimensionMismatch("H0 and f must share the model dimension")
        if not self.H0.is_action_only():
            raise ValidationError("H0 must depend on the actions only")
        grad = [self.H0.derivative([i])(np.zeros(self.dims), np.zeros(self.dims - 1), 0.0)
                for i in range(self.dims)]
        if max(abs(g) for g in grad) > 1e-12:
            raise ValidationError("H0 must have zero gradient at I = 0")
        eig = np.linalg.eigvalsh(self.hessian())
        if eig.min() <= 1e-12:
            raise SingularHessian(f"action Hessian of H0 is not positive definite: {eig}")

    @property
    def omega_vec(self) -> np.ndarray:
        return np.array(self.omega)

    def hessian(self) -> np.ndarray:
        n = self.dims
        z = np.zeros(n)
        za = np.zeros(n - 1)
        h = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                h[i, j] = self.H0.derivative([i, j])(z, za, 0.0).real
        return h

    def small_divisor(self, nu) -> float:
        return float(np.dot(self.omega, nu))


# -- JSON input/output ---------------------------------------------------

def _terms_to_json(fn: AngleActionFunction) -> list[dict]:
    rows = []
    for (nu, m, p), c in sorted(fn.terms.items()):
        rows.append({"nu": list(nu), "m": m, "actionExp": list(p),
                     "re": float(np.real(c)), "im": float(np.imag(c))})
    return rows


def _terms_from_json(rows, dims: int, what: str) -> AngleActionFunction:
    if not isinstance(rows, list):
        raise ParseError(f"field {what!r} must be a list of terms")
    parsed = []
    for i, row in enumerate(rows):
        where = f"{what}[{i}]"
        if not isinstance(row, dict):
            raise ParseError(f"{where}: term must be an object")
        try:
            nu = row.get("nu", [0] * (dims - 1))
            m = row.get("m", 0)
            p = row.get("actionExp", [0] * dims)
            c = complex(float(row.get("re", 0.0)), float(row.get("im", 0.0)))
        except (TypeError, ValueError) as exc:
            raise ParseError(f"{where}: {exc}") from exc
        if not isinstance(nu, list) or not isinstance(p, list) or not isinstance(m, int):
            raise ParseError(f"{where}: nu/actionExp must be lists and m an integer")
        parsed.append(((tuple(nu), m, tuple(p)), c))
    try:
        return build_function(dims, parsed, complete=True)
    except DimensionMismatch as exc:
        raise ParseError(f"{what}: {exc}") from exc


def model_from_dict(data: dict) -> Model:
    for key in ("N", "omega", "H0", "f"):
        if key not in data:
            raise ParseError(f"missing field {key!r}")
    dims = data["N"]
    if not isinstance(dims, int) or dims < 2:
        raise ParseError("field 'N' must be an integer >= 2")
    omega = data["omega"]
    if isinstance(omega, (int, float)):
        omega = [omega]
    if not isinstance(omega, list) or not all(isinstance(w, (int, float)) for w in omega):
        raise ParseError("field 'omega' must be a number or a list of numbers")
    H0 = _terms_from_json(data["H0"], dims, "H0")
    f = _terms_from_json(data["f"], dims, "f")
    return Model(dims, tuple(omega), H0, f, str(data.get("name", "")))


def model_to_dict(model: Model) -> dict:
    return {
        "name": model.name,
        "N": model.dims,
        "omega": list(model.omega),
        "H0": _terms_to_json(model.H0),
        "f": _terms_to_json(model.f),
    }


def load_model(path) -> Model:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{path}: top level must be an object")
    return model_from_dict(data)


def dump_model(model: Model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- canonical models ------------------------------------------------------

def quadratic_h0(dims: int, diag=None) -> AngleActionFunction:
    """``1/2 sum_i d_i I_i^2`` (identity Hessian by default)."""
    diag = np.ones(dims) if diag is None else np.asarray(diag, float)
    zero = (0,) * (dims - 1)
    terms = {}
    for i in range(dims):
        p = [0] * dims
        p[i] = 2
        terms[(zero, 0, tuple(p))] = 0.5 * diag[i]
    return build_function(dims, terms)


def trig_terms_2d(entries: Iterable[tuple[int, int, complex]]) -> dict:
    """Helper for ``N = 2`` angle-only functions given as ``(nu, m, coeff)``."""
    out: dict = {}
    for nu, m, c in entries:
        key = ((nu,), m, (0, 0))
        out[key] = out.get(key, 0.0) + c
    return out


def counterexample_model() -> Model:
    """``A + A^2/2 + B^2/2 + eps (sin^3 beta / 3 + sin beta cos alpha)``."""
    # sin^3 b = (3 sin b - sin 3b)/4 ; sin b = (e^{ib} - e^{-ib})/(2i)
    entries = [
        (0, 1, -1j / 8), (0, -1, 1j / 8),
        (0, 3, 1j / 24), (0, -3, -1j / 24),
        # sin b cos a = [e^{i(a+b)} + e^{i(b-a)} - c.c.] / (4i)
        (1, 1, -1j / 4), (-1, 1, -1j / 4), (1, -1, 1j / 4), (-1, -1, 1j / 4),
    ]
    f = build_function(2, trig_terms_2d(entries))
    return Model(2, (1.0,), quadratic_h0(2), f, "counterexample")


def custom_model(omega: float = GOLDEN) -> Model:
    """``omega A + (A^2 + B^2)/2 + eps (sin^3 beta / 3 + (sin beta + cos 2 beta) cos alpha)``."""
    entries = [
        (0, 1, -1j / 8), (0, -1, 1j / 8),
        (0, 3, 1j / 24), (0, -3, -1j / 24),
        (1, 1, -1j / 4), (-1, 1, -1j / 4), (1, -1, 1j / 4), (-1, -1, 1j / 4),
        # cos 2b cos a = [e^{i(a+2b)} + e^{i(a-2b)} + e^{i(-a+2b)} + e^{-i(a+2b)}]/4
        (1, 2, 0.25), (1, -2, 0.25), (-1, 2, 0.25), (-1, -2, 0.25),
    ]
    f = build_function(2, trig_terms_2d(entries))
    return Model(2, (omega,), quadratic_h0(2), f, "custom")


def custom3_model() -> Model:
    """Three-DOF analogue of :func:`custom_model` with ``omega = (1, golden)``.

    ``f = sin^3 beta / 3 + (sin beta + cos 2 beta)(cos alpha_1 + cos alpha_2)``.
    """
    terms: dict = {}

    def add(nu, m, c):
        key = (nu, m, (0, 0, 0))
        terms[key] = terms.get(key, 0.0) + c

    for m, c in [(1, -1j / 8), (-1, 1j / 8), (3, 1j / 24), (-3, -1j / 24)]:
        add((0, 0), m, c)
    for nu in [(1, 0), (-1, 0), (0, 1), (0, -1)]:
        for m, c in [(1, -1j / 4), (-1, 1j / 4), (2, 0.25), (-2, 0.25)]:
            add(nu, m, c)
    return Model(3, (1.0, GOLDEN), quadratic_h0(3), build_function(3, terms), "custom3")
