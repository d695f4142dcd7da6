"""Truncated multivariate Taylor jets for forward-mode differentiation.

A :class:`Jet` carries the Taylor coefficients of a scalar quantity with
respect to a fixed set of seed variables, truncated at some total degree.
Taking a partial derivative of a jet of order ``k`` yields a jet of order
``k - 1``, so a recursion that differentiates its own intermediate results
(as backstepping does) can be evaluated exactly by starting from jets of
high enough order.

Monomials are stored in graded order (all degree-0 terms, then degree 1,
then degree 2, ...), which makes truncation to a lower order a plain slice.
"""
from __future__ import annotations

import math
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Sequence

import numpy as np


class JetSpace:
    """Monomial basis and product tables for ``nvars`` variables up to ``order``."""

    def __init__(self, nvars: int, order: int):
        if nvars < 1 or order < 0:
            raise ValueError("need nvars >= 1 and order >= 0")
        self.nvars = nvars
        self.order = order

        exps: list[tuple[int, ...]] = []
        self.sizes: list[int] = []
        for deg in range(order + 1):
            for combo in combinations_with_replacement(range(nvars), deg):
                e = [0] * nvars
                for v in combo:
                    e[v] += 1
                exps.append(tuple(e))
            self.sizes.append(len(exps))
        self.exps = np.array(exps, dtype=np.int64).reshape(len(exps), nvars)
        self.index = {e: i for i, e in enumerate(exps)}
        self.order_of_size = {s: k for k, s in enumerate(self.sizes)}
        degs = self.exps.sum(axis=1)

        pi, pj, pk = [], [], []
        for i, ei in enumerate(exps):
            for j, ej in enumerate(exps):
                if degs[i] + degs[j] > order:
                    continue
                pi.append(i)
                pj.append(j)
                pk.append(self.index[tuple(a + b for a, b in zip(ei, ej))])
        perm = np.argsort(pk, kind="stable")
        self._mi = np.asarray(pi, dtype=np.int64)[perm]
        self._mj = np.asarray(pj, dtype=np.int64)[perm]
        self._mk = np.asarray(pk, dtype=np.int64)[perm]
        # number of product pairs whose output lands inside the order-k block
        self._mcount = [int(np.searchsorted(self._mk, s)) for s in self.sizes]

        # d/dv maps the order-k block onto the order-(k-1) block
        self._dsrc = []
        self._dfac = []
        top = self.sizes[order - 1] if order >= 1 else 0
        for v in range(nvars):
            src = np.empty(top, dtype=np.int64)
            fac = np.empty(top)
            for t in range(top):
                e = list(exps[t])
                fac[t] = e[v] + 1
                e[v] += 1
                src[t] = self.index[tuple(e)]
            self._dsrc.append(src)
            self._dfac.append(fac)

    def constant(self, value: float, order: int | None = None) -> "Jet":
        k = self.order if order is None else order
        c = np.zeros(self.sizes[k])
        c[0] = value
        return Jet(c, self)

    def variable(self, v: int, value: float, order: int | None = None) -> "Jet":
        k = self.order if order is None else order
        if k < 1:
            return self.constant(value, k)
        c = np.zeros(self.sizes[k])
        c[0] = value
        c[1 + v] = 1.0
        return Jet(c, self)

    def seeds(self, values: Sequence[float]) -> list["Jet"]:
        if len(values) != self.nvars:
            raise ValueError(f"expected {self.nvars} seed values, got {len(values)}")
        return [self.variable(v, float(x)) for v, x in enumerate(values)]


@lru_cache(maxsize=32)
def jet_space(nvars: int, order: int) -> JetSpace:
    return JetSpace(nvars, order)


class Jet:
    """Scalar value together with its truncated Taylor expansion."""

    __slots__ = ("c", "space")
    __array_ufunc__ = None

    def __init__(self, coeffs: np.ndarray, space: JetSpace):
        self.c = coeffs
        self.space = space

    @property
    def value(self) -> float:
        return float(self.c[0])

    @property
    def order(self) -> int:
        return self.space.order_of_size[len(self.c)]

    def gradient(self) -> np.ndarray:
        """First partials with respect to every seed (requires order >= 1)."""
        if len(self.c) == 1:
            raise ValueError("order-0 jet carries no derivative information")
        return self.c[1:1 + self.space.nvars].copy()

    def diff(self, v: int) -> "Jet":
        """Partial derivative with respect to seed ``v``, one order lower."""
        k = self.order
        if k == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        m = self.space.sizes[k - 1]
        sp = self.space
        return Jet(self.c[sp._dsrc[v][:m]] * sp._dfac[v][:m], sp)

    def truncate(self, order: int) -> "Jet":
        return Jet(self.c[:self.space.sizes[order]].copy(), self.space)

    # -- arithmetic ---------------------------------------------------------

    def _lift(self, other):
        if isinstance(other, Jet):
            return other
        c = np.zeros(len(self.c))
        c[0] = other
        return Jet(c, self.space)

    def __add__(self, other):
        if isinstance(other, Jet):
            m = min(len(self.c), len(other.c))
            return Jet(self.c[:m] + other.c[:m], self.space)
        c = self.c.copy()
        c[0] += other
        return Jet(c, self.space)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet):
            m = min(len(self.c), len(other.c))
            return Jet(self.c[:m] - other.c[:m], self.space)
        c = self.c.copy()
        c[0] -= other
        return Jet(c, self.space)

    def __rsub__(self, other):
        c = -self.c
        c[0] += other
        return Jet(c, self.space)

    def __neg__(self):
        return Jet(-self.c, self.space)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c * other, self.space)
        m = min(len(self.c), len(other.c))
        if m == 1:
            return Jet(self.c[:1] * other.c[:1], self.space)
        sp = self.space
        p = sp._mcount[sp.order_of_size[m]]
        w = self.c[sp._mi[:p]] * other.c[sp._mj[:p]]
        return Jet(np.bincount(sp._mk[:p], weights=w, minlength=m), sp)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c / other, self.space)
        return self * reciprocal(other)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, p):
        if isinstance(p, int) and p >= 0:
            out = self._lift(1.0)
            base = self
            while p:
                if p & 1:
                    out = out * base
                base = base * base
                p >>= 1
            return out
        return power(self, float(p))

    def __repr__(self):
        return f"Jet(value={self.value!r}, order={self.order})"


def _compose(a: Jet, derivs: Sequence[float]) -> Jet:
    """f(a) given f and its derivatives at a.value (Taylor composition)."""
    k = a.order
    h = Jet(a.c.copy(), a.space)
    h.c[0] = 0.0
    out = np.zeros(len(a.c))
    out[0] = derivs[0]
    hp = None
    fact = 1.0
    for r in range(1, k + 1):
        hp = h if hp is None else hp * h
        fact *= r
        out[:len(hp.c)] += (derivs[r] / fact) * hp.c
    return Jet(out, a.space)


def reciprocal(a):
    if not isinstance(a, Jet):
        return 1.0 / a
    x = a.value
    if x == 0.0:
        raise ZeroDivisionError("jet reciprocal of zero")
    k = a.order
    derivs = [((-1) ** r) * math.factorial(r) / x ** (r + 1) for r in range(k + 1)]
    return _compose(a, derivs)


def power(a, p: float):
    if not isinstance(a, Jet):
        return a ** p
    x = a.value
    k = a.order
    derivs = []
    coef = 1.0
    for r in range(k + 1):
        derivs.append(coef * x ** (p - r))
        coef *= p - r
    return _compose(a, derivs)


def sqrt(a):
    if not isinstance(a, Jet):
        return math.sqrt(a)
    return power(a, 0.5)


def exp(a):
    if not isinstance(a, Jet):
        return math.exp(a)
    e = math.exp(a.value)
    return _compose(a, [e] * (a.order + 1))


def sin(a):
    if not isinstance(a, Jet):
        return math.sin(a)
    s, c = math.sin(a.value), math.cos(a.value)
    cyc = [s, c, -s, -c]
    return _compose(a, [cyc[r % 4] for r in range(a.order + 1)])


def cos(a):
    if not isinstance(a, Jet):
        return math.cos(a)
    s, c = math.sin(a.value), math.cos(a.value)
    cyc = [c, -s, -c, s]
    return _compose(a, [cyc[r % 4] for r in range(a.order + 1)])


def value(a) -> float:
    """Plain float of a jet or number."""
    return a.value if isinstance(a, Jet) else float(a)


def dot(u: Sequence, v: Sequence):
    acc = 0.0
    for a, b in zip(u, v):
        acc = acc + a * b
    return acc
