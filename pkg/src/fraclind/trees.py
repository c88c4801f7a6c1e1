"""Labeled-tree expansion of the series coefficients.

A tree is either a leaf, standing for the constant ``beta_1`` in the slow
angle, or a node with an exiting line. A node carries a degree label
``delta`` (1 for a derivative of ``f``, 0 for one of ``H0``), a harmonic
``nu0`` of ``f`` (zero when ``delta = 0``) and the component label
``gamma_prime`` of the derivative ``(E d)`` applied at the node. The exiting
line carries the component ``gamma`` read by the parent and the momentum
``nu0 + sum(children momenta)``.

Line propagators (eta powers stripped):

* nonzero momentum: ``delta_{gamma gamma'} / (i omega.nu)``;
* zero momentum, action ``gamma``: ``-(Hess^{-1})_{gamma, gamma'-N}`` with ``gamma'`` an angle;
* zero momentum, ``gamma = beta``, ``gamma' = B``: ``1 / (sigma k0 c beta1^{k0-1})``
  together with ``eta^{-(2 k0 - 1)}`` (a "slow line");
* the line of a leaf: 1.

Tree values are eta-coefficients: the eta power of a tree is its degree
``#leaves + k0 #(delta=1 nodes) - (2 k0 - 1) #(slow lines)``.

Children are unordered; a node whose children contain repeated identical
subtrees gets the factor ``1 / prod(multiplicity!)``, which is the same as
summing over ordered children with ``1/p!``.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations_with_replacement, product

import numpy as np

from .errors import BoundViolated, CapExceeded, ValidationError
from .model import Model, integer_vectors
from .resonance import ResonanceData

LEAF = ("leaf",)


def is_leaf(t) -> bool:
    return t[0] == "leaf"


def make_node(gamma: int, gamma_prime: int, delta: int, nu0: tuple, children) -> tuple:
    mom = list(nu0)
    for ch in children:
        if ch[0] != "leaf":
            for i, v in enumerate(ch[6]):
                mom[i] += v
    return ("node", gamma, gamma_prime, delta, tuple(nu0), tuple(sorted(children)), tuple(mom))


@dataclass
class TreeContext:
    """Model data needed to evaluate trees around the unperturbed torus."""

    model: Model
    resonance: ResonanceData
    beta1: float
    hinv: np.ndarray = field(init=False)

    def __post_init__(self):
        self.hinv = np.linalg.inv(self.model.hessian())
        self._ftensor = lru_cache(maxsize=None)(self._ftensor_raw)
        self._htensor = lru_cache(maxsize=None)(self._htensor_raw)

    @property
    def dims(self) -> int:
        return self.model.dims

    @property
    def k0(self) -> int:
        return self.resonance.k0

    @property
    def slow(self) -> int:
        return 2 * self.dims - 1

    def fmodes(self) -> list[tuple[int, ...]]:
        return self.model.f.modes()

    def e_derivative(self, gamma_prime: int) -> tuple[int, float]:
        """``(E d)_{gamma'} = sign * d_{partner}``."""
        n = self.dims
        if gamma_prime < n:
            return gamma_prime + n, -1.0
        return gamma_prime - n, 1.0

    def _ftensor_raw(self, nu0: tuple, labels: tuple) -> complex:
        n = self.dims
        zero = (0,) * (n - 1)
        if nu0 == zero and all(l == self.slow for l in labels) and len(labels) <= self.k0:
            # vanishing slow derivatives at the degenerate equilibrium
            return 0.0j
        g = self.model.f.derivative(list(labels))
        return complex(g.fourier_coefficient(nu0, np.zeros(n), self.resonance.beta0))

    def _htensor_raw(self, labels: tuple) -> complex:
        n = self.dims
        if any(l >= n for l in labels):
            return 0.0j
        g = self.model.H0.derivative(list(labels))
        return complex(g(np.zeros(n), np.zeros(n - 1), 0.0))

    def node_factor(self, delta: int, nu0: tuple, gamma_prime: int, child_labels) -> complex:
        """``sigma^delta (E d)_{gamma'} d_{child labels}`` of ``f_nu0`` or ``H0`` at the torus."""
        d, sign = self.e_derivative(gamma_prime)
        labels = tuple(sorted((d,) + tuple(child_labels)))
        if delta == 1:
            return self.resonance.sigma * sign * self._ftensor(tuple(nu0), labels)
        return sign * self._htensor(labels)

    def propagator(self, gamma: int, gamma_prime: int, nu: tuple) -> complex:
        n = self.dims
        if any(nu):
            return 1.0 / (1j * self.model.small_divisor(nu)) if gamma == gamma_prime else 0.0
        if gamma < n and gamma_prime >= n:
            return -self.hinv[gamma, gamma_prime - n]
        if gamma == self.slow and gamma_prime == n - 1:
            return 1.0 / (self.resonance.sigma * self.k0 * self.resonance.c * self.beta1 ** (self.k0 - 1))
        return 0.0


def momentum(t) -> tuple | None:
    """Momentum of the exiting line (``None`` for a leaf, whose momentum is zero)."""
    return None if is_leaf(t) else t[6]


def _mom(t, dim):
    m = momentum(t)
    return (0,) * dim if m is None else m


def root_label(t, ctx_slow: int) -> int:
    return ctx_slow if is_leaf(t) else t[1]


def count_lines(t) -> int:
    return 1 if is_leaf(t) else 1 + sum(count_lines(c) for c in t[5])


def count_leaves(t) -> int:
    return 1 if is_leaf(t) else sum(count_leaves(c) for c in t[5])


def is_slow_line(t, dims: int) -> bool:
    return (not is_leaf(t)) and t[1] == 2 * dims - 1 and t[2] == dims - 1 and not any(momentum(t))


def degree(t, k0: int, dims: int) -> int:
    if is_leaf(t):
        return 1
    own = k0 * t[3] - (2 * k0 - 1) * int(is_slow_line(t, dims))
    return own + sum(degree(c, k0, dims) for c in t[5])


def is_forbidden(t, ctx: TreeContext) -> bool:
    """Trivial ``H0`` node on a zero-momentum line, or a b-trivial node."""
    if is_leaf(t):
        return False
    n = ctx.dims
    children = t[5]
    zero_mom = not any(_mom(t, n - 1))
    if t[3] == 0 and len(children) == 1 and zero_mom:
        return True
    if (t[3] == 1 and not any(t[4]) and t[2] == n - 1 and zero_mom and len(children) == ctx.k0
            and all(root_label(c, ctx.slow) == ctx.slow for c in children)
            and sum(1 for c in children if is_leaf(c)) >= ctx.k0 - 1):
        return True
    return False


def _symmetry(children) -> float:
    out = 1.0
    for mult in Counter(children).values():
        out /= math.factorial(mult)
    return out


def tree_value(theta, ctx: TreeContext) -> complex:
    """Eta-coefficient of the value of a labeled tree (zero if forbidden anywhere)."""
    if is_leaf(theta):
        return complex(ctx.beta1)
    if is_forbidden(theta, ctx):
        return 0.0j
    _, gamma, gp, delta, nu0, children, _mom_ = theta
    n = ctx.dims
    nu = _mom(theta, n - 1)
    val = ctx.propagator(gamma, gp, nu)
    if val == 0:
        return 0.0j
    labels = [root_label(c, ctx.slow) for c in children]
    val *= ctx.node_factor(delta, nu0, gp, labels) * _symmetry(children)
    for ch in children:
        val *= tree_value(ch, ctx)
    return complex(val)


def negate_tree(theta):
    """Tree with every mode label negated."""
    if is_leaf(theta):
        return theta
    _, gamma, gp, delta, nu0, children, _mom_ = theta
    return make_node(gamma, gp, delta, tuple(-v for v in nu0), [negate_tree(c) for c in children])


class TreeEnumerator:
    """Memoized enumeration of allowed trees by ``(degree, momentum, root label)``."""

    def __init__(self, ctx: TreeContext, cap: int | None = None, tol: float = 1e-15):
        self.ctx = ctx
        self.cap = 2 * ctx.k0 + 2 if cap is None else cap
        self.tol = tol
        self.memo: dict = {}
        self.active: set = set()
        self.maxnu = max(1, ctx.model.f.max_mode())

    def _check_cap(self, k: int) -> None:
        # slow lines reach degree up to cap + k0 - 1 internally
        if k > self.cap + self.ctx.k0 - 1:
            raise CapExceeded(f"degree {k} exceeds the enumeration cap {self.cap}")

    def trees(self, k: int, nu: tuple, gamma: int) -> list:
        """Allowed trees with their values: list of ``(tree, value)``."""
        nu = tuple(int(v) for v in nu)
        key = (k, nu, gamma)
        if key in self.memo:
            return self.memo[key]
        if key in self.active:
            raise ValidationError(f"cyclic tree recursion at {key}")
        if k < 1 or sum(abs(v) for v in nu) > k * self.maxnu:
            return []
        self._check_cap(k)
        self.active.add(key)
        try:
            out = self._build(k, nu, gamma)
        finally:
            self.active.discard(key)
        self.memo[key] = out
        return out

    def _build(self, k: int, nu: tuple, gamma: int) -> list:
        ctx = self.ctx
        n = ctx.dims
        k0 = ctx.k0
        out = []
        if any(nu):
            line_options = [(gamma, k)]
        elif gamma < n:
            line_options = [(gp, k) for gp in range(n, 2 * n)]
        elif gamma == ctx.slow:
            if k == 1:
                return [(LEAF, complex(ctx.beta1))]
            line_options = [(n - 1, k + 2 * k0 - 1)]
        else:
            return []
        for gp, kk in line_options:
            prop = ctx.propagator(gamma, gp, nu)
            if prop == 0:
                continue
            # delta = 1 nodes
            for nu0 in ctx.fmodes():
                budget = kk - k0
                if budget < 0:
                    continue
                target = tuple(a - b for a, b in zip(nu, nu0))
                for children, cvals in self._children(budget, target, gp, 1, nu0, min_p=0):
                    node = make_node(gamma, gp, 1, nu0, children)
                    labels = [root_label(c, ctx.slow) for c in children]
                    val = prop * ctx.node_factor(1, nu0, gp, labels) * _symmetry(children) * cvals
                    out.append((node, val))
            # delta = 0 nodes (H0 derivatives need an angle gamma')
            if gp >= n:
                min_p = 1 if any(nu) else 2
                for children, cvals in self._children(kk, nu, gp, 0, (0,) * (n - 1), min_p=min_p):
                    node = make_node(gamma, gp, 0, (0,) * (n - 1), children)
                    labels = [root_label(c, ctx.slow) for c in children]
                    val = prop * ctx.node_factor(0, (0,) * (n - 1), gp, labels) * _symmetry(children) * cvals
                    out.append((node, val))
        return out

    def _slots(self, budget: int, delta: int):
        """Child slot types ``(degree, momentum, label)`` with at least one tree."""
        ctx = self.ctx
        n = ctx.dims
        labels = range(n) if delta == 0 else range(2 * n)
        slots = []
        for d in range(1, budget + 1):
            for mom in integer_vectors(n - 1, d * self.maxnu, nonzero=False):
                for lab in labels:
                    slots.append((d, tuple(mom), lab))
        return slots

    def _children(self, budget: int, target: tuple, gp: int, delta: int, nu0: tuple, min_p: int):
        """Yield ``(children, product of child values)`` for all admissible multisets."""
        ctx = self.ctx
        if budget == 0:
            if min_p == 0 and not any(target) and abs(ctx.node_factor(delta, nu0, gp, [])) > self.tol:
                yield (), 1.0
            return
        slots = self._slots(budget, delta)
        dim = ctx.dims - 1
        # candidate b-trivial node: f-average node on a zero-momentum slow line
        b_trivial = delta == 1 and not any(nu0) and gp == ctx.dims - 1 and not any(target)

        def rec(start: int, remaining: int, mom: tuple, chosen: list):
            if remaining == 0:
                if any(mom) or len(chosen) < min_p:
                    return
                labels = [s[2] for s in chosen]
                if abs(ctx.node_factor(delta, nu0, gp, labels)) <= self.tol:
                    return
                if b_trivial and len(chosen) == ctx.k0 and all(l == ctx.slow for l in labels) \
                        and sum(1 for s in chosen if s[0] == 1) >= ctx.k0 - 1:
                    return
                yield from self._fill(chosen)
                return
            for i in range(start, len(slots)):
                d, m, lab = slots[i]
                if d > remaining:
                    continue
                rest = tuple(a - b for a, b in zip(mom, m))
                if sum(abs(v) for v in rest) > (remaining - d) * self.maxnu:
                    continue
                chosen.append(slots[i])
                yield from rec(i, remaining - d, rest, chosen)
                chosen.pop()

        yield from rec(0, budget, tuple(target) if dim else (), [])

    def _fill(self, chosen: list):
        """All subtree assignments for a multiset of slots."""
        groups = Counter(chosen)
        per_group = []
        for slot, mult in groups.items():
            d, m, lab = slot
            options = self.trees(d, m, lab)
            if not options:
                return
            per_group.append(list(combinations_with_replacement(range(len(options)), mult)))
            per_group[-1] = [(slot, combo) for combo in per_group[-1]]
        for choice in product(*per_group):
            children = []
            val = 1.0 + 0j
            for slot, combo in choice:
                options = self.trees(*slot)
                for idx in combo:
                    t, v = options[idx]
                    children.append(t)
                    val *= v
            yield tuple(children), val


def enumerate_trees(ctx: TreeContext, k: int, nu, gamma: int, cap: int | None = None,
                    enumerator: TreeEnumerator | None = None) -> list:
    """Allowed trees of degree ``k`` with root momentum ``nu`` and root label ``gamma``.

    Raises
    ------
    CapExceeded
        ``k`` above the enumeration cap (default ``2 k0 + 2``).
    """
    en = TreeEnumerator(ctx, cap) if enumerator is None else enumerator
    if k > en.cap:
        raise CapExceeded(f"degree {k} exceeds the enumeration cap {en.cap}")
    return [t for t, _ in en.trees(k, tuple(nu), gamma)]


def sum_tree_values(ctx: TreeContext, k: int, nu, gamma: int, cap: int | None = None,
                    enumerator: TreeEnumerator | None = None) -> complex:
    """Sum of the values of all allowed trees in the class ``(k, nu, gamma)``."""
    en = TreeEnumerator(ctx, cap) if enumerator is None else enumerator
    if k > en.cap:
        raise CapExceeded(f"degree {k} exceeds the enumeration cap {en.cap}")
    return complex(sum(v for _, v in en.trees(k, tuple(nu), gamma)))


def forbidden_root_correction(ctx: TreeContext, en: TreeEnumerator, k: int, nu, gamma: int) -> complex:
    """Value that the forbidden root configurations would add if they were allowed.

    Only the root node is relaxed (relaxing recursively would reproduce the
    class itself and diverge). Used as a negative control.
    """
    n = ctx.dims
    nu = tuple(nu)
    base = en.trees(k, nu, gamma)
    total = 0.0j
    if any(nu):
        return total
    if gamma < n:
        for gp in range(n, 2 * n):
            prop = ctx.propagator(gamma, gp, nu)
            for lab in range(n):
                fac = ctx.node_factor(0, (0,) * (n - 1), gp, [lab])
                for t, v in en.trees(k, nu, lab):
                    total += prop * fac * v
    elif gamma == ctx.slow and k >= 2:
        prop = ctx.propagator(gamma, n - 1, nu)
        fac = ctx.node_factor(1, (0,) * (n - 1), n - 1, [ctx.slow] * ctx.k0)
        sym = 1.0 / math.factorial(ctx.k0 - 1)
        total += prop * fac * sym * ctx.beta1 ** (ctx.k0 - 1) * sum(v for _, v in base)
    return total


@dataclass
class LineCountReport:
    k: int
    counts: list
    lower: float
    upper: int
    refined: int | None
    ok: bool

    def as_dict(self) -> dict:
        return {"k": self.k, "minLines": min(self.counts, default=0), "maxLines": max(self.counts, default=0),
                "lower": self.lower, "upper": self.upper, "refined": self.refined, "ok": self.ok}


def refined_line_bound(k: int, k0: int, kind: str) -> int | None:
    """Refined upper bounds on the number of lines, valid for ``k >= k0 + 1``.

    ``kind`` is ``action``, ``angle`` or ``slow`` (trees of ``beta_j``, with
    ``k = j + k0 - 1``).
    """
    if k < k0 + 1:
        return None
    base = 3 * k0 * (k - k0 + 1) - 4 * k0
    return {"action": base - 2, "angle": base - 1, "slow": base}[kind]


def line_count_check(trees, k: int, k0: int, kind: str = "action", raise_on_fail: bool = False) -> LineCountReport:
    """Check ``k/k0 <= lines <= 3 k0 k`` and the refined bound for the tree class."""
    counts = [count_lines(t) for t in trees]
    lower = k / k0
    upper = 3 * k0 * k
    kk = k + k0 - 1 if kind == "slow" else k
    refined = refined_line_bound(kk, k0, kind)
    ok = all(lower - 1e-12 <= c <= upper for c in counts)
    if refined is not None:
        ok = ok and all(c <= refined for c in counts)
    rep = LineCountReport(k, counts, lower, upper, refined, ok)
    if raise_on_fail and not ok:
        raise BoundViolated(f"line counts {sorted(set(counts))} violate bounds at k={k}")
    return rep


def recursion_coefficient(series, k: int, nu, gamma: int) -> complex:
    """Coefficient of the class ``(k, nu, gamma)`` in a solved series.

    The zero-momentum slow-angle class is the constant ``beta_k``.
    """
    nu = tuple(nu)
    if gamma == 2 * series.dims - 1 and not any(nu):
        return complex(series.betas()[k - 1]) if 1 <= k <= series.K else 0.0j
    return series.coefficient(k, nu, gamma)


@dataclass
class TreeComparison:
    k: int
    nu: tuple
    gamma: int
    count: int
    tree_sum: complex
    recursion: complex

    @property
    def difference(self) -> float:
        return abs(self.tree_sum - self.recursion)

    @property
    def relative_error(self) -> float:
        ref = abs(self.recursion)
        return self.difference / ref if ref > 1e-14 else self.difference

    def as_dict(self) -> dict:
        return {"k": self.k, "nu": list(self.nu), "gamma": self.gamma, "count": self.count,
                "treeSum": [self.tree_sum.real, self.tree_sum.imag],
                "recursion": [self.recursion.real, self.recursion.imag],
                "difference": self.difference, "relativeError": self.relative_error}


def compare_with_recursion(series, k: int, nu, gamma: int,
                           enumerator: TreeEnumerator | None = None) -> TreeComparison:
    """Tree sum against the recursion coefficient for one class.

    The series must be solved through order ``k + k0``: ``beta_k`` is fixed
    while solving that order.
    """
    if series.K < k + series.k0:
        raise ValidationError(f"series order {series.K} too low for tree degree {k}")
    if enumerator is None:
        enumerator = TreeEnumerator(TreeContext(series.model, series.resonance, series.beta1))
    if k > enumerator.cap:
        raise CapExceeded(f"degree {k} exceeds the enumeration cap {enumerator.cap}")
    found = enumerator.trees(k, tuple(nu), gamma)
    total = complex(sum(v for _, v in found))
    return TreeComparison(k, tuple(nu), gamma, len(found), total,
                          recursion_coefficient(series, k, nu, gamma))
