"""Jet-evaluable scalar field expressions on chart coordinates.

Leaves are trigonometric polynomials (integer frequencies, so they live on the
torus) and ordinary polynomials; composites are built with the usual Python
operators plus :func:`sqrt`, :func:`exp`, :func:`sin`, :func:`cos`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .jets import Jet, constant_jet, coordinate_jets

__all__ = [
    "FieldExpr",
    "Const",
    "Coord",
    "TrigPoly",
    "Polynomial",
    "Composite",
    "Composed",
    "sqrt",
    "exp",
    "sin",
    "cos",
    "eval_jet",
    "eval_matrix",
    "trig_from_spec",
]


class FieldExpr:
    """Base class; subclasses implement :meth:`jet`."""

    kind = "composition"

    def jet(self, points, order: int) -> Jet:
        raise NotImplementedError

    def __call__(self, points):
        return self.jet(points, 0).val

    # expression building
    def __add__(self, other):
        return Composite("add", (self, _lift(other)))

    __radd__ = __add__

    def __sub__(self, other):
        return Composite("add", (self, Composite("neg", (_lift(other),))))

    def __rsub__(self, other):
        return Composite("add", (_lift(other), Composite("neg", (self,))))

    def __neg__(self):
        return Composite("neg", (self,))

    def __mul__(self, other):
        return Composite("mul", (self, _lift(other)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return Composite("mul", (self, Composite("recip", (_lift(other),))))

    def __rtruediv__(self, other):
        return Composite("mul", (_lift(other), Composite("recip", (self,))))

    def __pow__(self, p):
        return Composite("pow", (self,), float(p))


def _lift(x) -> FieldExpr:
    if isinstance(x, FieldExpr):
        return x
    return Const(float(x))


@dataclass(frozen=True, eq=False)
class Const(FieldExpr):
    value: float

    kind = "rational_of_coordinates"

    def jet(self, points, order):
        points = np.atleast_2d(points)
        return constant_jet(np.full(points.shape[0], self.value), points.shape[1], order)


@dataclass(frozen=True, eq=False)
class Coord(FieldExpr):
    index: int

    kind = "rational_of_coordinates"

    def jet(self, points, order):
        return coordinate_jets(points, order)[self.index]


class TrigPoly(FieldExpr):
    """sum_t  a_t cos(k_t . x) + b_t sin(k_t . x)  with integer frequency vectors k_t."""

    kind = "trig_polynomial"

    def __init__(self, freqs, cos_coef, sin_coef=None):
        freqs = np.atleast_2d(np.asarray(freqs))
        if not np.all(np.equal(np.mod(freqs, 1), 0)):
            raise ValueError("trigonometric frequencies must be integers")
        self.freqs = freqs.astype(float)
        self.a = np.asarray(cos_coef, dtype=float).reshape(-1)
        self.b = (
            np.zeros_like(self.a) if sin_coef is None else np.asarray(sin_coef, dtype=float).reshape(-1)
        )
        if not (len(self.a) == len(self.b) == len(self.freqs)):
            raise ValueError("coefficient and frequency counts differ")

    @classmethod
    def constant(cls, c, n):
        return cls(np.zeros((1, n)), [c], [0.0])

    def jet(self, points, order):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        N, n = points.shape
        K = self.freqs
        theta = points @ K.T  # (N, T)
        C, S = np.cos(theta), np.sin(theta)
        F0 = C * self.a + S * self.b
        F1 = -S * self.a + C * self.b
        comps = [F0.sum(axis=1)]
        if order >= 1:
            comps.append(F1 @ K)
        if order >= 2:
            KK = np.einsum("ti,tj->tij", K, K).reshape(len(K), n * n)
            comps.append((-F0 @ KK).reshape(N, n, n))
        if order >= 3:
            KKK = np.einsum("ti,tj,tk->tijk", K, K, K).reshape(len(K), n ** 3)
            comps.append((-F1 @ KKK).reshape(N, n, n, n))
        return Jet(*(comps + [None] * (4 - len(comps))))

    def max_frequency(self) -> int:
        return int(np.max(np.abs(self.freqs))) if len(self.freqs) else 0

    def to_spec(self):
        return [
            {"freq": [int(k) for k in f], "cos": float(a), "sin": float(b)}
            for f, a, b in zip(self.freqs, self.a, self.b)
        ]

    def __add__(self, other):
        if isinstance(other, TrigPoly):
            return TrigPoly(
                np.vstack([self.freqs, other.freqs]),
                np.concatenate([self.a, other.a]),
                np.concatenate([self.b, other.b]),
            )
        if isinstance(other, (int, float)):
            n = self.freqs.shape[1]
            return self + TrigPoly.constant(float(other), n)
        return super().__add__(other)

    __radd__ = __add__

    def scaled(self, c: float) -> "TrigPoly":
        return TrigPoly(self.freqs, c * self.a, c * self.b)


def trig_from_spec(spec: Sequence[dict], n: int) -> TrigPoly:
    """Build a :class:`TrigPoly` from ``[{"freq": [...], "cos": a, "sin": b}, ...]``."""
    if len(spec) == 0:
        return TrigPoly(np.zeros((1, n)), [0.0], [0.0])
    freqs, a, b = [], [], []
    for term in spec:
        f = list(term["freq"])
        if len(f) != n:
            raise ValueError(f"frequency vector {f} does not have length {n}")
        freqs.append(f)
        a.append(float(term.get("cos", 0.0)))
        b.append(float(term.get("sin", 0.0)))
    return TrigPoly(freqs, a, b)


class Polynomial(FieldExpr):
    """sum_t c_t x^{e_t} with nonnegative integer multi-indices e_t."""

    kind = "rational_of_coordinates"

    def __init__(self, exponents, coefs):
        self.exponents = np.atleast_2d(np.asarray(exponents, dtype=int))
        self.coefs = np.asarray(coefs, dtype=float).reshape(-1)
        if np.any(self.exponents < 0):
            raise ValueError("negative exponent in polynomial")

    def jet(self, points, order):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        N, n = points.shape
        X = coordinate_jets(points, order)
        total = constant_jet(np.zeros(N), n, order)
        for e, c in zip(self.exponents, self.coefs):
            term = constant_jet(np.full(N, c), n, order)
            for i, k in enumerate(e):
                if k:
                    term = term * (X[i] ** k)
            total = total + term
        return total


class Composite(FieldExpr):
    """Arithmetic node over sub-expressions."""

    def __init__(self, op, args, param=None):
        self.op = op
        self.args = tuple(args)
        self.param = param

    def jet(self, points, order):
        vals = [a.jet(points, order) for a in self.args]
        op = self.op
        if op == "add":
            return vals[0] + vals[1]
        if op == "neg":
            return -vals[0]
        if op == "mul":
            return vals[0] * vals[1]
        if op == "recip":
            return vals[0].reciprocal()
        if op == "pow":
            return vals[0] ** self.param
        if op == "sqrt":
            return vals[0].sqrt()
        if op == "exp":
            return vals[0].exp()
        if op == "sin":
            return vals[0].sin()
        if op == "cos":
            return vals[0].cos()
        raise ValueError(f"unknown op {op!r}")


class Composed(FieldExpr):
    """``outer`` evaluated at y = phi(x), phi given componentwise."""

    def __init__(self, outer: FieldExpr, phi: Sequence[FieldExpr]):
        self.outer = outer
        self.phi = tuple(phi)

    def jet(self, points, order):
        inner = Jet.stack([p.jet(points, order) for p in self.phi])
        return self.outer.jet(inner.val, order).compose(inner)


def sqrt(e):
    return Composite("sqrt", (_lift(e),))


def exp(e):
    return Composite("exp", (_lift(e),))


def sin(e):
    return Composite("sin", (_lift(e),))


def cos(e):
    return Composite("cos", (_lift(e),))


def eval_jet(expr: FieldExpr, point, order: int = 2) -> Jet:
    """Jet of ``expr`` at one point or a batch of points."""
    if order not in (0, 1, 2, 3):
        raise ValueError("order must be 0..3")
    return expr.jet(np.atleast_2d(np.asarray(point, dtype=float)), order)


def eval_matrix(exprs, points, order: int) -> Jet:
    """Jet of a matrix of field expressions; value shape (rows, cols)."""
    rows = len(exprs)
    cols = len(exprs[0])
    flat = [exprs[i][j].jet(points, order) for i in range(rows) for j in range(cols)]
    return Jet.stack(flat, shape=(rows, cols))
