"""Batched truncated Taylor (jet) arithmetic.

A :class:`Jet` holds the value and the first three coordinate derivatives of a
tensor-valued field at a batch of points.  Array layout, for a field whose
values have shape ``S`` at ``N`` points in ``n`` coordinates::

    val  (N, *S)
    d1   (N, n, *S)          d1[p, i]       = d/dx_i
    d2   (N, n, n, *S)       d2[p, i, j]    = d^2/dx_i dx_j
    d3   (N, n, n, n, *S)

Derivatives above the jet's order are ``None``.  All arithmetic follows the
truncated Leibniz and chain rules, so results are exact up to the stored order.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["Jet", "coordinate_jets", "constant_jet"]


def _pad(arr, nlead, ndim_val):
    """Insert singleton axes so the value part of ``arr`` has ``ndim_val`` dims."""
    if arr is None:
        return None
    cur = arr.ndim - nlead
    if cur == ndim_val:
        return arr
    shape = arr.shape[:nlead] + (1,) * (ndim_val - cur) + arr.shape[nlead:]
    return arr.reshape(shape)


def _sym3(t):
    """Given t[i,j,k] = a_ij b_k return a_ij b_k + a_ik b_j + a_jk b_i."""
    return t + np.swapaxes(t, 2, 3) + np.moveaxis(t, 3, 1)


class Jet:
    """Truncated Taylor data of a field on a batch of points."""

    __slots__ = ("val", "d1", "d2", "d3")
    __array_ufunc__ = None

    def __init__(self, val, d1=None, d2=None, d3=None):
        self.val = np.asarray(val, dtype=float)
        self.d1 = d1
        self.d2 = d2
        self.d3 = d3
        if d2 is not None and d1 is None:
            raise ValueError("d2 given without d1")
        if d3 is not None and d2 is None:
            raise ValueError("d3 given without d2")

    # -- shape bookkeeping -------------------------------------------------
    @property
    def order(self) -> int:
        if self.d1 is None:
            return 0
        if self.d2 is None:
            return 1
        if self.d3 is None:
            return 2
        return 3

    @property
    def npoints(self) -> int:
        return self.val.shape[0]

    @property
    def shape(self):
        """Value shape at a single point."""
        return self.val.shape[1:]

    @property
    def ndim_coords(self):
        return None if self.d1 is None else self.d1.shape[1]

    def parts(self):
        return [p for p in (self.val, self.d1, self.d2, self.d3) if p is not None]

    def truncate(self, order: int) -> "Jet":
        keep = [self.val, self.d1, self.d2, self.d3][: order + 1]
        keep += [None] * (4 - len(keep))
        return Jet(*keep)

    def __getitem__(self, idx):
        """Index into the value shape (not the batch axis)."""
        if not isinstance(idx, tuple):
            idx = (idx,)
        out = [self.val[(slice(None),) + idx]]
        for k, arr in enumerate((self.d1, self.d2, self.d3), start=1):
            out.append(None if arr is None else arr[(slice(None),) * (k + 1) + idx])
        return Jet(*out)

    def map_values(self, fn) -> "Jet":
        """Apply a linear map acting on the value axes to every component."""
        out = [fn(self.val, 1)]
        for k, arr in enumerate((self.d1, self.d2, self.d3), start=1):
            out.append(None if arr is None else fn(arr, k + 1))
        return Jet(*out)

    @property
    def T(self) -> "Jet":
        return self.map_values(lambda a, lead: np.swapaxes(a, -1, -2))

    def reshape_values(self, shape) -> "Jet":
        return self.map_values(lambda a, lead: a.reshape(a.shape[:lead] + tuple(shape)))

    @staticmethod
    def stack(jets, shape=None) -> "Jet":
        """Stack jets of identical shape into a new trailing value axis block."""
        order = min(j.order for j in jets)
        comps = []
        for k in range(order + 1):
            arrs = [j.parts()[k] for j in jets]
            comps.append(np.stack(arrs, axis=-1))
        comps += [None] * (4 - len(comps))
        out = Jet(*comps)
        if shape is not None:
            out = out.map_values(
                lambda a, lead: a.reshape(a.shape[: a.ndim - 1] + tuple(shape))
            )
        return out

    # -- elementwise arithmetic --------------------------------------------
    def _aligned(self, other):
        nd = max(len(self.shape), len(other.shape))
        a = [_pad(p, k + 1, nd) for k, p in enumerate((self.val, self.d1, self.d2, self.d3))]
        b = [_pad(p, k + 1, nd) for k, p in enumerate((other.val, other.d1, other.d2, other.d3))]
        order = min(self.order, other.order)
        return a, b, order

    def __add__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.val + other, self.d1, self.d2, self.d3)
        a, b, order = self._aligned(other)
        out = [a[k] + b[k] for k in range(order + 1)]
        return Jet(*(out + [None] * (4 - len(out))))

    __radd__ = __add__

    def __neg__(self):
        return Jet(*[None if p is None else -p for p in (self.val, self.d1, self.d2, self.d3)])

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "Jet":
        """Multiply by a constant (scalar or array broadcastable to the value shape)."""
        c = np.asarray(c, dtype=float)
        return Jet(*[None if p is None else p * c for p in (self.val, self.d1, self.d2, self.d3)])

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return self.scale(other)
        a, b, order = self._aligned(other)
        return Jet(*_leibniz(a, b, order, np.multiply))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return self.scale(1.0 / np.asarray(other, dtype=float))
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        p = float(p)
        if p == 0.0:
            return constant_jet(np.ones_like(self.val), self.ndim_coords, self.order)
        if p.is_integer() and p > 0:
            k = int(p)
            v = self.val
            return self.apply(
                v ** k,
                k * v ** (k - 1),
                k * (k - 1) * v ** (k - 2) if k >= 2 else np.zeros_like(v),
                k * (k - 1) * (k - 2) * v ** (k - 3) if k >= 3 else np.zeros_like(v),
            )
        v = self.val
        return self.apply(
            v ** p, p * v ** (p - 1), p * (p - 1) * v ** (p - 2), p * (p - 1) * (p - 2) * v ** (p - 3)
        )

    # -- univariate functions ----------------------------------------------
    def apply(self, f0, f1, f2=None, f3=None) -> "Jet":
        """Compose with a scalar function given its derivatives at ``val``."""
        order = self.order
        nd = self.val.ndim - 1
        out = [np.asarray(f0, dtype=float)]
        if order >= 1:
            g1 = _pad(f1, 1, nd)
            out.append(self.d1 * g1[:, None])
        if order >= 2:
            u1 = self.d1
            g2 = _pad(f2, 1, nd)
            out.append(
                g2[:, None, None] * u1[:, :, None] * u1[:, None, :] + g1[:, None, None] * self.d2
            )
        if order >= 3:
            u1, u2 = self.d1, self.d2
            g3 = _pad(f3, 1, nd)
            t = u2[:, :, :, None] * u1[:, None, None, :]
            out.append(
                g3[:, None, None, None] * u1[:, :, None, None] * u1[:, None, :, None] * u1[:, None, None, :]
                + g2[:, None, None, None] * _sym3(t)
                + g1[:, None, None, None] * self.d3
            )
        return Jet(*(out + [None] * (4 - len(out))))

    def reciprocal(self):
        v = self.val
        inv = 1.0 / v
        return self.apply(inv, -inv ** 2, 2 * inv ** 3, -6 * inv ** 4)

    def exp(self):
        e = np.exp(self.val)
        return self.apply(e, e, e, e)

    def log(self):
        v = self.val
        return self.apply(np.log(v), 1 / v, -1 / v ** 2, 2 / v ** 3)

    def sin(self):
        s, c = np.sin(self.val), np.cos(self.val)
        return self.apply(s, c, -s, -c)

    def cos(self):
        s, c = np.sin(self.val), np.cos(self.val)
        return self.apply(c, -s, -c, s)

    def sqrt(self):
        v = self.val
        r = np.sqrt(v)
        return self.apply(r, 0.5 / r, -0.25 / (r * v), 0.375 / (r * v * v))

    # -- matrix arithmetic ---------------------------------------------------
    def __matmul__(self, other):
        if not isinstance(other, Jet):
            c = np.asarray(other, dtype=float)
            return self.map_values(lambda a, lead: a @ c)
        order = min(self.order, other.order)
        return Jet(*_leibniz(self.parts(), other.parts(), order, np.matmul))

    def __rmatmul__(self, other):
        c = np.asarray(other, dtype=float)
        return self.map_values(lambda a, lead: c @ a)

    def inv(self) -> "Jet":
        """Matrix inverse, via differentiating A X = I."""
        X = np.linalg.inv(self.val)
        order = self.order
        out = [X]
        if order >= 1:
            A1 = self.d1
            X1 = -X[:, None] @ A1 @ X[:, None]
            out.append(X1)
        if order >= 2:
            A2 = self.d2
            Xb = X[:, None, None]
            X2 = -Xb @ (A2 @ Xb + A1[:, :, None] @ X1[:, None, :] + A1[:, None, :] @ X1[:, :, None])
            out.append(X2)
        if order >= 3:
            A3 = self.d3
            Xc = X[:, None, None, None]
            s = A3 @ Xc
            s = s + A2[:, :, :, None] @ X1[:, None, None, :]
            s = s + A2[:, :, None, :] @ X1[:, None, :, None]
            s = s + A2[:, None, :, :] @ X1[:, :, None, None]
            s = s + A1[:, :, None, None] @ X2[:, None, :, :]
            s = s + A1[:, None, :, None] @ X2[:, :, None, :]
            s = s + A1[:, None, None, :] @ X2[:, :, :, None]
            out.append(-Xc @ s)
        return Jet(*(out + [None] * (4 - len(out))))

    def expm(self, degree: int = 12) -> "Jet":
        """Matrix exponential: scaling and squaring around a fixed-degree Taylor sum.

        The scaling exponent is chosen from the largest value norm in the batch
        so that every point runs the same arithmetic.
        """
        n = self.shape[-1]
        norm = float(np.max(np.abs(self.val).sum(axis=-2))) if self.val.size else 0.0
        s = max(0, int(math.ceil(math.log2(norm / 0.25)))) if norm > 0.25 else 0
        A = self.scale(2.0 ** -s)
        eye = np.broadcast_to(np.eye(n), self.val.shape).copy()
        # Horner: I + A/1 (I + A/2 (I + ... (I + A/deg)))
        E = constant_jet(eye, self.ndim_coords, self.order)
        for k in range(degree, 0, -1):
            E = (A @ E).scale(1.0 / k) + eye
        for _ in range(s):
            E = E @ E
        return E

    def trace(self) -> "Jet":
        return self.map_values(lambda a, lead: np.trace(a, axis1=-2, axis2=-1))

    # -- composition ---------------------------------------------------------
    def compose(self, inner: "Jet") -> "Jet":
        """Chain rule: ``self`` is a jet in y evaluated at y = phi(x); ``inner`` is phi's jet in x.

        ``inner`` has value shape ``(m,)`` where m is the number of y-coordinates.
        """
        order = min(self.order, inner.order)
        out = [self.val]
        if order >= 1:
            P1 = inner.d1  # (N, n, m): P1[:, i, a] = d phi^a / dx_i
            f1 = self.d1  # (N, m, *S)
            out.append(np.einsum("pia,pa...->pi...", P1, f1))
        if order >= 2:
            P2 = inner.d2
            f2 = self.d2
            out.append(
                np.einsum("pia,pjb,pab...->pij...", P1, P1, f2)
                + np.einsum("pija,pa...->pij...", P2, f1)
            )
        if order >= 3:
            P3 = inner.d3
            f3 = self.d3
            t = np.einsum("pija,pkb,pab...->pijk...", P2, P1, f2)
            out.append(
                np.einsum("pia,pjb,pkc,pabc...->pijk...", P1, P1, P1, f3)
                + _sym3(t)
                + np.einsum("pijka,pa...->pijk...", P3, f1)
            )
        return Jet(*(out + [None] * (4 - len(out))))


def _leibniz(a, b, order, op):
    """Truncated Leibniz rule for a bilinear ``op`` acting on value axes."""
    a0, b0 = a[0], b[0]
    out = [op(a0, b0)]
    if order >= 1:
        a1, b1 = a[1], b[1]
        out.append(op(a1, b0[:, None]) + op(a0[:, None], b1))
    if order >= 2:
        a2, b2 = a[2], b[2]
        cross = op(a1[:, :, None], b1[:, None, :])
        out.append(
            op(a2, b0[:, None, None])
            + cross
            + np.swapaxes(cross, 1, 2)
            + op(a0[:, None, None], b2)
        )
    if order >= 3:
        a3, b3 = a[3], b[3]
        t1 = op(a2[:, :, :, None], b1[:, None, None, :])
        t2 = op(a1[:, :, None, None], b2[:, None, :, :])
        out.append(
            op(a3, b0[:, None, None, None])
            + _sym3(t1)
            + t2
            + np.swapaxes(t2, 1, 2)
            + np.moveaxis(t2, 1, 3)
            + op(a0[:, None, None, None], b3)
        )
    return out + [None] * (4 - len(out))


def coordinate_jets(points, order: int) -> Jet:
    """Jet of the coordinate map x -> x, value shape (n,)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    N, n = points.shape
    comps = [points.copy()]
    if order >= 1:
        comps.append(np.broadcast_to(np.eye(n), (N, n, n)).copy())
    if order >= 2:
        comps.append(np.zeros((N, n, n, n)))
    if order >= 3:
        comps.append(np.zeros((N, n, n, n, n)))
    return Jet(*(comps + [None] * (4 - len(comps))))


def constant_jet(values, ncoords, order: int) -> Jet:
    """Jet of a field with the given per-point values and zero derivatives."""
    values = np.asarray(values, dtype=float)
    N = values.shape[0]
    S = values.shape[1:]
    comps = [values]
    for k in range(1, order + 1):
        comps.append(np.zeros((N,) + (ncoords,) * k + S))
    return Jet(*(comps + [None] * (4 - len(comps))))
