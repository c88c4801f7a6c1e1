"""Trigonometric polynomials on a uniform angle grid and truncated eta-series.

A trigonometric polynomial in ``d`` fast angles is stored either by its
values on a ``G^d`` grid or by its FFT-ordered coefficient array. Products
are pointwise on the grid; they are exact as long as the grid resolves twice
the highest harmonic, which callers guarantee through :func:`grid_size`.

An eta-series is an array with a leading order axis: ``s[k]`` is the
coefficient of ``eta**k``.
"""

from __future__ import annotations

import numpy as np

from .model import AngleActionFunction, Model


def grid_size(max_harmonic: int, minimum: int = 8) -> int:
    """Smallest power of two resolving products up to ``max_harmonic`` exactly."""
    g = minimum
    while g < 2 * max_harmonic + 2:
        g *= 2
    return g


class AngleGrid:
    """Uniform grid on the ``d``-torus with FFT helpers."""

    def __init__(self, d: int, G: int):
        self.d = d
        self.G = G
        self.shape = (G,) * d
        axis = 2 * np.pi * np.arange(G) / G
        self.psi = np.stack(np.meshgrid(*([axis] * d), indexing="ij"))
        freq = np.rint(np.fft.fftfreq(G, 1.0 / G)).astype(int)
        self.modes = np.stack(np.meshgrid(*([freq] * d), indexing="ij"))
        self.norm1 = np.abs(self.modes).sum(axis=0)

    def coeffs(self, values: np.ndarray) -> np.ndarray:
        axes = tuple(range(values.ndim - self.d, values.ndim))
        return np.fft.fftn(values, axes=axes) / self.G**self.d

    def values(self, coeffs: np.ndarray) -> np.ndarray:
        axes = tuple(range(coeffs.ndim - self.d, coeffs.ndim))
        return np.fft.ifftn(coeffs, axes=axes) * self.G**self.d

    def index(self, nu) -> tuple[int, ...]:
        return tuple(int(v) % self.G for v in nu)

    def divisors(self, omega) -> np.ndarray:
        """``omega . nu`` for every grid mode."""
        return np.tensordot(np.asarray(omega, float), self.modes, axes=(0, 0))

    def zero_index(self) -> tuple[int, ...]:
        return (0,) * self.d

    def phase(self, nu) -> np.ndarray:
        return np.exp(1j * np.tensordot(np.asarray(nu, float), self.psi, axes=(0, 0)))

    def support(self, coeffs: np.ndarray, tol: float = 0.0):
        """Modes (as tuples) whose coefficient exceeds ``tol``."""
        mask = np.abs(coeffs) > tol
        return [tuple(int(v) for v in self.modes[(slice(None),) + idx]) for idx in zip(*np.nonzero(mask))]


def series_mul(a: np.ndarray, b: np.ndarray, order: int | None = None) -> np.ndarray:
    """Truncated Cauchy product of two eta-series (pointwise on the grid)."""
    M = a.shape[0] - 1 if order is None else order
    out = np.zeros((M + 1,) + a.shape[1:], dtype=np.result_type(a, b))
    for n in range(M + 1):
        for k in range(n + 1):
            if k < a.shape[0] and n - k < b.shape[0]:
                out[n] += a[k] * b[n - k]
    return out


def series_exp(s: np.ndarray) -> np.ndarray:
    """``exp`` of an eta-series with vanishing zeroth order."""
    M = s.shape[0] - 1
    out = np.zeros(s.shape, dtype=complex)
    out[0] = 1.0
    for n in range(1, M + 1):
        acc = np.zeros(s.shape[1:], dtype=complex)
        for k in range(1, n + 1):
            acc += k * s[k] * out[n - k]
        out[n] = acc / n
    return out


class Composer:
    """Eta-series of gradients of ``H0`` and ``f`` along a deviation series.

    ``dev`` has shape ``(2N, M+1, *grid)`` and holds grid values of
    ``X - X0`` where ``X0 = (0, 0, psi, beta0)``. Its zeroth order must vanish.
    """

    def __init__(self, model: Model, grid: AngleGrid, beta0: float):
        self.model = model
        self.grid = grid
        self.beta0 = beta0
        self.n = model.dims

    def _powers(self, dev: np.ndarray):
        n = self.n
        cache: dict[tuple[int, int], np.ndarray] = {}

        def power(j: int, e: int) -> np.ndarray:
            if (j, e) not in cache:
                if e == 0:
                    one = np.zeros(dev.shape[1:], dtype=complex)
                    one[0] = 1.0
                    cache[(j, e)] = one
                else:
                    cache[(j, e)] = series_mul(power(j, e - 1), dev[j])
            return cache[(j, e)]

        mono_cache: dict[tuple[int, ...], np.ndarray] = {}

        def monomial(p: tuple[int, ...]) -> np.ndarray:
            if p not in mono_cache:
                acc = power(0, p[0])
                for j in range(1, n):
                    if p[j]:
                        acc = series_mul(acc, power(j, p[j]))
                mono_cache[p] = acc
            return mono_cache[p]

        return monomial

    def grad_f(self, dev: np.ndarray, fn: AngleActionFunction | None = None) -> np.ndarray:
        """``d_gamma f(X0 + dev)`` for all ``2N`` components, shape ``(2N, M+1, *grid)``."""
        fn = self.model.f if fn is None else fn
        n = self.n
        g = self.grid
        monomial = self._powers(dev)
        exp_cache: dict = {}
        out = np.zeros(dev.shape, dtype=complex)
        for (nu, m, p), c in fn.terms.items():
            key = (nu, m)
            if key not in exp_cache:
                arg = 1j * (np.tensordot(np.asarray(nu, float), dev[n:2 * n - 1], axes=(0, 0))
                            + m * dev[2 * n - 1])
                base = g.phase(nu) * np.exp(1j * m * self.beta0)
                exp_cache[key] = series_exp(arg) * base
            E = exp_cache[key]
            full = series_mul(E, monomial(p)) if any(p) else E
            for i in range(n - 1):
                if nu[i]:
                    out[n + i] += (1j * nu[i] * c) * full
            if m:
                out[2 * n - 1] += (1j * m * c) * full
            for j in range(n):
                if p[j]:
                    q = list(p)
                    q[j] -= 1
                    out[j] += (p[j] * c) * series_mul(E, monomial(tuple(q)))
        return out

    def value_f(self, dev: np.ndarray, fn: AngleActionFunction | None = None) -> np.ndarray:
        fn = self.model.f if fn is None else fn
        n = self.n
        monomial = self._powers(dev)
        out = np.zeros(dev.shape[1:], dtype=complex)
        for (nu, m, p), c in fn.terms.items():
            arg = 1j * (np.tensordot(np.asarray(nu, float), dev[n:2 * n - 1], axes=(0, 0))
                        + m * dev[2 * n - 1])
            E = series_exp(arg) * self.grid.phase(nu) * np.exp(1j * m * self.beta0)
            out += c * (series_mul(E, monomial(p)) if any(p) else E)
        return out

    def grad_h0(self, dev: np.ndarray) -> np.ndarray:
        """``d_I H0(dev_I)``, shape ``(N, M+1, *grid)``."""
        n = self.n
        monomial = self._powers(dev)
        out = np.zeros((n,) + dev.shape[1:], dtype=complex)
        for (nu, m, p), c in self.model.H0.terms.items():
            for j in range(n):
                if p[j]:
                    q = list(p)
                    q[j] -= 1
                    out[j] += (p[j] * c) * monomial(tuple(q))
        return out
