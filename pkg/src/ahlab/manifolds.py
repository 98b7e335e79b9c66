"""Charted almost-Hermitian manifolds with jet-evaluable metric and J.

A :class:`ChartedManifold` wraps two batched field evaluators returning
:class:`~ahlab.jets.Jet` objects with value shape ``(n, n)``:

* ``g[p, i, j]``  the metric components ``g_ij``
* ``J[p, i, j]``  the almost complex structure ``J^i_j`` (so ``J @ v`` maps vectors)

Generators in this module build the manifolds used throughout the package and
record the JSON manifest that reproduces them.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.stats import qmc

from . import octonions
from .fields import Composed, Coord, FieldExpr, TrigPoly, eval_matrix, trig_from_spec
from .jets import Jet, constant_jet, coordinate_jets

TWO_PI = 2.0 * math.pi


class ChartDomainError(ValueError):
    """Point outside the chart domain."""


class GeneratorError(ValueError):
    """A random generator produced an invalid structure."""


class PositivityError(ValueError):
    """A conformal factor or metric failed to be positive."""


class DimensionError(ValueError):
    """Unsupported dimension."""


class PullbackError(ValueError):
    """Degenerate or non-invertible map in a pullback."""


class ManifestError(ValueError):
    """Malformed manifold manifest."""


def standard_j(n: int) -> np.ndarray:
    """Block-diagonal complex structure with blocks [[0, -1], [1, 0]]."""
    if n % 2 or n < 2:
        raise DimensionError(f"dimension must be even and >= 2, got {n}")
    J = np.zeros((n, n))
    for k in range(0, n, 2):
        J[k + 1, k] = 1.0
        J[k, k + 1] = -1.0
    return J


def conformal_exponent(n: int) -> float:
    """p - 2 with p = 2n/(n-2)."""
    if n <= 2:
        raise DimensionError("conformal changes need n > 2")
    return 2.0 * n / (n - 2) - 2.0


# -- domains -------------------------------------------------------------------


@dataclass(frozen=True)
class TorusDomain:
    """Fundamental cell [0, 2pi)^n of the flat torus; every real point is admissible."""

    dim: int
    kind: str = "torus"

    def check(self, points):
        if not np.all(np.isfinite(points)):
            raise ChartDomainError("non-finite chart point")

    def sample(self, count: int, seed: int = 0) -> np.ndarray:
        h = qmc.Halton(d=self.dim, scramble=True, seed=seed)
        return TWO_PI * h.random(count)

    def describe(self):
        return {"kind": self.kind, "cell": [0.0, TWO_PI]}


@dataclass(frozen=True)
class BallDomain:
    """Closed coordinate ball |x| <= radius."""

    dim: int
    radius: float = 0.9
    kind: str = "ball"

    def check(self, points):
        r = np.linalg.norm(points, axis=-1)
        if not np.all(np.isfinite(r)) or np.any(r > self.radius + 1e-14):
            raise ChartDomainError(
                f"chart point outside the coordinate ball of radius {self.radius}"
            )

    def sample(self, count: int, seed: int = 0) -> np.ndarray:
        h = qmc.Halton(d=self.dim, scramble=True, seed=seed)
        out = []
        have = 0
        while have < count:
            cube = self.radius * (2.0 * h.random(max(64, 4 * count)) - 1.0)
            keep = cube[np.linalg.norm(cube, axis=1) <= self.radius]
            out.append(keep)
            have += len(keep)
        return np.concatenate(out)[:count]

    def describe(self):
        return {"kind": self.kind, "radius": self.radius}


# -- manifold ------------------------------------------------------------------

FieldFn = Callable[[np.ndarray, int], Jet]


@dataclass
class ChartedManifold:
    """Metric and almost complex structure on one chart.

    ``metric_fn(points, order)`` and ``acs_fn(points, order)`` return batched
    jets with value shape (n, n).  Use :meth:`from_exprs` to build one from
    matrices of :class:`~ahlab.fields.FieldExpr`.
    """

    dim: int
    metric_fn: FieldFn
    acs_fn: FieldFn
    domain: object
    label: str
    manifest: dict = field(default_factory=dict)
    metric_exprs: Optional[list] = None
    acs_exprs: Optional[list] = None
    fields_fn: Optional[Callable] = None

    @classmethod
    def from_exprs(cls, metric, acs, domain, label, manifest=None):
        n = len(metric)
        return cls(
            n,
            lambda pts, order: eval_matrix(metric, pts, order),
            lambda pts, order: eval_matrix(acs, pts, order),
            domain,
            label,
            manifest or {},
            metric_exprs=metric,
            acs_exprs=acs,
        )

    @property
    def is_torus(self) -> bool:
        return getattr(self.domain, "kind", None) == "torus"

    def _points(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.dim:
            raise DimensionError(f"expected points of dimension {self.dim}, got {pts.shape[1]}")
        self.domain.check(pts)
        return pts

    def metric_jet(self, points, order: int = 2) -> Jet:
        return self.metric_fn(self._points(points), order)

    def acs_jet(self, points, order: int = 1) -> Jet:
        return self.acs_fn(self._points(points), order)

    def fields(self, points, metric_order: int = 2, acs_order: int = 1):
        pts = self._points(points)
        if self.fields_fn is not None:
            return self.fields_fn(pts, metric_order, acs_order)
        return self.metric_fn(pts, metric_order), self.acs_fn(pts, acs_order)

    def sample(self, count: int, seed: int = 0) -> np.ndarray:
        return self.domain.sample(count, seed)


def structure_residuals(m: ChartedManifold, points) -> dict:
    """Max residuals of symmetry, J^2 = -1 and compatibility; min Cholesky pivot."""
    g, J = m.fields(points, 0, 0)
    g, J = g.val, J.val
    n = m.dim
    sym = float(np.max(np.abs(g - np.swapaxes(g, 1, 2))))
    square = float(np.max(np.abs(J @ J + np.eye(n))))
    compat = float(np.max(np.abs(np.swapaxes(J, 1, 2) @ g @ J - g)))
    try:
        L = np.linalg.cholesky(g)
        pivot = float(np.min(np.abs(np.diagonal(L, axis1=1, axis2=2))))
    except np.linalg.LinAlgError:
        pivot = 0.0
    return {"symmetry": sym, "j_squared": square, "compatibility": compat, "min_cholesky_pivot": pivot}


# -- matrix-valued trigonometric polynomials -------------------------------------


class MatrixTrigPoly:
    """sum_t A_t cos(k_t.x) + B_t sin(k_t.x) with matrix coefficients, as one batched jet."""

    def __init__(self, freqs, A, B):
        self.freqs = np.atleast_2d(np.asarray(freqs, dtype=float))
        self.A = np.asarray(A, dtype=float)
        self.B = np.asarray(B, dtype=float)
        self.vshape = self.A.shape[1:]

    def map_coefficients(self, fn) -> "MatrixTrigPoly":
        return MatrixTrigPoly(
            self.freqs, np.array([fn(a) for a in self.A]), np.array([fn(b) for b in self.B])
        )

    def jet(self, points, order: int) -> Jet:
        points = np.atleast_2d(points)
        N, n = points.shape
        K = self.freqs
        T = len(K)
        M = int(np.prod(self.vshape))
        A = self.A.reshape(T, M)
        B = self.B.reshape(T, M)
        theta = points @ K.T
        C, S = np.cos(theta), np.sin(theta)
        comps = [(C @ A + S @ B).reshape((N,) + self.vshape)]
        kpow = np.ones((T, 1))
        for k in range(1, order + 1):
            kpow = np.einsum("ta,ti->tai", kpow, K).reshape(T, -1)
            # k-th derivative of cos is Re(i^k e^{i theta}), of sin is Im(...)
            ca, sa = [(C, S), (-S, C), (-C, -S), (S, -C)][k % 4]
            coefA = (kpow[:, :, None] * A[:, None, :]).reshape(T, -1)
            coefB = (kpow[:, :, None] * B[:, None, :]).reshape(T, -1)
            d = ca @ coefA + sa @ coefB
            comps.append(d.reshape((N,) + (n,) * k + self.vshape))
        return Jet(*(comps + [None] * (4 - len(comps))))

    def entry_exprs(self):
        """The same field as a matrix of scalar :class:`TrigPoly`."""
        rows, cols = self.vshape
        return [
            [TrigPoly(self.freqs, self.A[:, i, j], self.B[:, i, j]) for j in range(cols)]
            for i in range(rows)
        ]


def _random_frequencies(rng, n, count, max_freq=2):
    freqs = np.zeros((count, n))
    for t in range(count):
        support = rng.choice(n, size=rng.integers(1, 3), replace=False)
        for i in support:
            freqs[t, i] = rng.choice([-1, 1]) * rng.integers(1, max_freq + 1)
    return freqs


def random_symmetric_trig(n, seed, terms=4):
    """Random symmetric-matrix trig polynomial.

    Stream order from ``numpy.random.default_rng(seed)``: frequency vectors
    (support size, support indices, sign, magnitude per term), then cosine
    coefficient matrices, then sine coefficient matrices, each uniform on
    [-1, 1] and symmetrized.
    """
    rng = np.random.default_rng(seed)
    freqs = _random_frequencies(rng, n, terms)
    A = rng.uniform(-1, 1, (terms, n, n))
    B = rng.uniform(-1, 1, (terms, n, n))
    A = 0.5 * (A + np.swapaxes(A, 1, 2))
    B = 0.5 * (B + np.swapaxes(B, 1, 2))
    return MatrixTrigPoly(freqs, A, B)


def _const_field(mat):
    mat = np.asarray(mat, dtype=float)

    def fn(points, order):
        N, n = points.shape
        return constant_jet(np.broadcast_to(mat, (N,) + mat.shape).copy(), n, order)

    return fn


def _check_positive(g, label):
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        raise GeneratorError(
            f"{label}: metric is not positive definite at a sampled point; use a smaller amplitude"
        ) from None


# -- generators ----------------------------------------------------------------


def make_flat_torus(n: int = 6) -> ChartedManifold:
    J0 = standard_j(n)
    return ChartedManifold(
        n,
        _const_field(np.eye(n)),
        _const_field(J0),
        TorusDomain(n),
        f"flat_torus{n}",
        {"type": "flat_torus", "dim": n},
    )


def make_compatible_torus(n: int = 6, seed: int = 0, amplitude: float = 0.1,
                          check_points: int = 256) -> ChartedManifold:
    """Hermitian torus: constant J0 and g = (h + J0^T h J0)/2, h = I + amplitude * P(x)."""
    J0 = standard_j(n)
    P = random_symmetric_trig(n, seed)
    h = MatrixTrigPoly(
        np.vstack([np.zeros((1, n)), P.freqs]),
        np.concatenate([np.eye(n)[None], amplitude * P.A]),
        np.concatenate([np.zeros((1, n, n)), amplitude * P.B]),
    )
    gpoly = h.map_coefficients(lambda a: 0.5 * (a + J0.T @ a @ J0))
    domain = TorusDomain(n)
    label = f"compatible_torus{n}(seed={seed}, amplitude={amplitude})"
    _check_positive(gpoly.jet(domain.sample(check_points, seed), 0).val, label)
    return ChartedManifold(
        n,
        gpoly.jet,
        _const_field(J0),
        domain,
        label,
        {"type": "compatible_torus", "dim": n, "seed": seed, "amplitude": amplitude},
        metric_exprs=gpoly.entry_exprs(),
    )


def make_almost_kahler_torus(n: int = 6, seed: int = 0, amplitude: float = 0.1,
                             check_points: int = 256) -> ChartedManifold:
    """Almost Kaehler torus with fundamental form the constant standard symplectic form.

    S(x) = omega0^{-1} H(x) with H a random symmetric trig polynomial lies in the
    symplectic Lie algebra, A = exp(amplitude S) is symplectic, J = A J0 A^{-1}
    and g(X, Y) = omega0(X, JY), which works out to g = B^T B with B = A^{-1}.
    """
    J0 = standard_j(n)
    omega0 = J0.T  # omega_ab = (J^T g)_ab at g = I
    Hpoly = random_symmetric_trig(n, seed)
    Omega_inv = np.linalg.inv(omega0)
    Spoly = Hpoly.map_coefficients(lambda a: amplitude * (Omega_inv @ a))

    def frames(points, order):
        A = Spoly.jet(points, order).expm()
        return A, A.inv()

    def metric_fn(points, order):
        _, B = frames(points, order)
        return B.T @ B

    def acs_fn(points, order):
        A, B = frames(points, order)
        return (A @ J0) @ B

    def fields_fn(points, metric_order, acs_order):
        A, B = frames(points, max(metric_order, acs_order))
        Bm = B.truncate(metric_order)
        return Bm.T @ Bm, (A.truncate(acs_order) @ J0) @ B.truncate(acs_order)

    domain = TorusDomain(n)
    label = f"almost_kahler_torus{n}(seed={seed}, amplitude={amplitude})"
    _check_positive(metric_fn(domain.sample(check_points, seed), 0).val, label)
    return ChartedManifold(
        n,
        metric_fn,
        acs_fn,
        domain,
        label,
        {"type": "almost_kahler_torus", "dim": n, "seed": seed, "amplitude": amplitude},
        fields_fn=fields_fn,
    )


def round_sphere(n: int = 6, hemisphere: int = 1, radius: float = 0.9) -> ChartedManifold:
    """Unit sphere S^n (n = 2 or 6) in the orthographic chart x -> (x, +-sqrt(1 - |x|^2)).

    J_p(v) = p x v with the cross product of Im H (n = 2) or Im O (n = 6).
    """
    if n == 6:
        c = octonions.OCTONION_C
    elif n == 2:
        c = octonions.QUATERNION_C
    else:
        raise DimensionError("round_sphere supports n = 2 and n = 6")
    sign = 1.0 if hemisphere >= 0 else -1.0

    def embedding(points, order):
        X = coordinate_jets(points, order)
        r2 = (X * X).map_values(lambda a, lead: a.sum(axis=-1))
        s = (1.0 - r2).sqrt().scale(sign)
        # tangent frame D[:, b, j] = d p_b / d x_j = delta_bj - (x_j / s) delta_b,n
        N = points.shape[0]
        top = constant_jet(np.broadcast_to(np.eye(n), (N, n, n)).copy(), n, order)
        ratio = (X / s).map_values(lambda a, lead: a[..., None, :])  # (1, n)
        D = _vstack(top, -ratio)
        P = _vstack(X.map_values(lambda a, lead: a[..., :, None]), s.map_values(lambda a, lead: a[..., None, None]))
        return P, D

    def metric_fn(points, order):
        _, D = embedding(points, order)
        return D.T @ D

    def acs_fn(points, order):
        P, D = embedding(points, order)
        # L[i, b] = sum_a p_a c[a, b, i]
        L = P.map_values(lambda a, lead: np.einsum("...az,abi->...ib", a, c))
        return L.map_values(lambda a, lead: a[..., :n, :]) @ D

    kind = "cayley_s6" if n == 6 else "round_sphere"
    manifest = {"type": kind, "dim": n}
    if hemisphere < 0:
        manifest["hemisphere"] = -1
    return ChartedManifold(
        n,
        metric_fn,
        acs_fn,
        BallDomain(n, radius),
        "cayley_s6" if n == 6 else f"round_sphere{n}",
        manifest,
    )


def _vstack(top: Jet, bottom: Jet) -> Jet:
    """Concatenate two matrix jets along the row axis."""
    order = min(top.order, bottom.order)
    a, b = top.parts(), bottom.parts()
    comps = [np.concatenate([a[k], b[k]], axis=-2) for k in range(order + 1)]
    return Jet(*(comps + [None] * (4 - len(comps))))


def make_cayley_s6(hemisphere: int = 1) -> ChartedManifold:
    return round_sphere(6, hemisphere)


def _as_field(u):
    if isinstance(u, FieldExpr) or hasattr(u, "jet"):
        return u
    raise TypeError("conformal factor must be a jet-evaluable field")


def make_conformal(m: ChartedManifold, u) -> ChartedManifold:
    """Metric u^{p-2} g with p = 2n/(n-2); J unchanged."""
    u = _as_field(u)
    expo = conformal_exponent(m.dim)

    def metric_fn(points, order):
        uj = u.jet(points, order)
        if np.any(uj.val <= 0):
            raise PositivityError("conformal factor is not positive at an evaluated point")
        w = uj if expo == 1.0 else uj ** expo
        g = m.metric_fn(points, order)
        return g * w.map_values(lambda a, lead: a[..., None, None])

    manifest = {"type": "conformal", "dim": m.dim, "base": copy.deepcopy(m.manifest)}
    if isinstance(u, TrigPoly):
        manifest["factor"] = u.to_spec()
    return ChartedManifold(
        m.dim, metric_fn, m.acs_fn, m.domain, f"conformal({m.label})", manifest
    )


def _map_jet(phi, points, order):
    return Jet.stack([p.jet(points, order) for p in phi])


def make_pullback(m: ChartedManifold, phi, inverse=None, check_points: int = 64,
                  manifest_extra: Optional[dict] = None) -> ChartedManifold:
    """(phi^* g, J_phi) with J_phi = dphi^{-1} (J o phi) dphi.

    ``phi`` and ``inverse`` are sequences of n field expressions.  The inverse
    is verified by a round trip at quasi-random points.
    """
    phi = tuple(phi)
    n = m.dim
    if len(phi) != n:
        raise DimensionError("map must have one component per coordinate")

    def parts(points, order):
        Phi = _map_jet(phi, points, order + 1)
        # D[a, i] = d phi^a / dx_i, one order lower than Phi
        dparts = [np.swapaxes(arr, -1, -2) for arr in Phi.parts()[1:]]
        D = Jet(*(dparts + [None] * (4 - len(dparts))))
        det = np.linalg.det(D.val)
        if np.any(np.abs(det) < 1e-12):
            raise PullbackError("differential of the map is singular at an evaluated point")
        return Phi.truncate(order), D

    def metric_fn(points, order):
        Phi, D = parts(points, order)
        m.domain.check(Phi.val)
        G = m.metric_fn(Phi.val, order).compose(Phi)
        return D.T @ G @ D

    def acs_fn(points, order):
        Phi, D = parts(points, order)
        m.domain.check(Phi.val)
        Jb = m.acs_fn(Phi.val, order).compose(Phi)
        return D.inv() @ Jb @ D

    if inverse is not None:
        inverse = tuple(inverse)
        pts = m.domain.sample(check_points, 7)
        y = _map_jet(phi, pts, 0).val
        back = _map_jet(inverse, y, 0).val
        err = back - pts
        if m.is_torus:
            err = (err + math.pi) % TWO_PI - math.pi
        if np.max(np.abs(err)) > 1e-9:
            raise PullbackError("supplied inverse does not invert the map")

    manifest = {"type": "pullback", "dim": n, "base": copy.deepcopy(m.manifest)}
    manifest.update(manifest_extra or {})
    return ChartedManifold(
        n, metric_fn, acs_fn, m.domain, f"pullback({m.label})", manifest
    )


def shear_maps(n: int, shears):
    """Compose coordinate shears x_t += f(x) (f independent of x_t); return (phi, inverse).

    ``shears`` is a list of ``(target, TrigPoly)``.
    """
    fwd = [Coord(i) for i in range(n)]
    for target, f in shears:
        if np.any(f.freqs[:, target] != 0):
            raise ManifestError("a shear displacement may not depend on its target coordinate")
        new = list(fwd)
        new[target] = Composed(Coord(target) + f, fwd)
        fwd = new
    inv = [Coord(i) for i in range(n)]
    for target, f in reversed(shears):
        new = list(inv)
        new[target] = Composed(Coord(target) - f, inv)
        inv = new
    return fwd, inv


def random_shears(n: int, seed: int, amplitude: float = 0.1, count: int = 3):
    """Seeded shear list: target axis, then a two-term trig displacement in the other axes."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        t = int(rng.integers(n))
        freqs = _random_frequencies(rng, n, 2)
        freqs[:, t] = 0.0
        freqs[np.all(freqs == 0, axis=1), (t + 1) % n] = 1.0
        a = amplitude * rng.uniform(-1, 1, 2)
        b = amplitude * rng.uniform(-1, 1, 2)
        out.append((t, TrigPoly(freqs, a, b)))
    return out


# -- manifests -----------------------------------------------------------------


def _require(spec, key, kind=None):
    if key not in spec:
        raise ManifestError(f"manifest is missing required key {key!r}")
    val = spec[key]
    if kind is not None and not isinstance(val, kind):
        raise ManifestError(f"manifest key {key!r} has the wrong type")
    return val


def from_manifest(spec: dict) -> ChartedManifold:
    """Build a manifold from its JSON manifest."""
    if not isinstance(spec, dict):
        raise ManifestError("manifest must be a JSON object")
    kind = _require(spec, "type", str)
    n = int(spec.get("dim", 6))
    try:
        if kind == "flat_torus":
            return make_flat_torus(n)
        if kind == "compatible_torus":
            return make_compatible_torus(n, int(spec.get("seed", 0)), float(spec.get("amplitude", 0.1)))
        if kind == "almost_kahler_torus":
            return make_almost_kahler_torus(
                n, int(spec.get("seed", 0)), float(spec.get("amplitude", 0.1))
            )
        if kind == "cayley_s6":
            if n != 6:
                raise ManifestError("cayley_s6 has dim 6")
            return make_cayley_s6(int(spec.get("hemisphere", 1)))
        if kind == "round_sphere":
            return round_sphere(n, int(spec.get("hemisphere", 1)))
        if kind == "conformal":
            base = from_manifest(_require(spec, "base", dict))
            factor = trig_from_spec(_require(spec, "factor", list), base.dim)
            return make_conformal(base, factor)
        if kind == "pullback":
            base = from_manifest(_require(spec, "base", dict))
            return _pullback_from_manifest(base, spec)
        if kind == "j_path":
            from .jvariation import jpath_from_manifest

            return jpath_from_manifest(spec)
    except (KeyError, TypeError) as exc:
        raise ManifestError(f"malformed manifest: {exc}") from exc
    raise ManifestError(f"unknown manifold type {kind!r}")


def _pullback_from_manifest(base, spec):
    n = base.dim
    if "shears" in spec:
        shears = [(int(s["target"]), trig_from_spec(s["displacement"], n)) for s in spec["shears"]]
        phi, inv = shear_maps(n, shears)
    elif "shear_seed" in spec:
        shears = random_shears(n, int(spec["shear_seed"]), float(spec.get("amplitude", 0.1)))
        phi, inv = shear_maps(n, shears)
    elif "map" in spec:
        disp = _require(spec, "map", list)
        phi = [Coord(i) + trig_from_spec(disp[i], n) for i in range(n)]
        inv = None
        if "inverse" in spec:
            idisp = spec["inverse"]
            inv = [Coord(i) + trig_from_spec(idisp[i], n) for i in range(n)]
    else:
        raise ManifestError("pullback manifest needs 'shears', 'shear_seed' or 'map'")
    extra = {k: spec[k] for k in ("shears", "shear_seed", "amplitude", "map", "inverse") if k in spec}
    return make_pullback(base, phi, inv, manifest_extra=extra)


def load_manifest(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: invalid JSON ({exc})") from exc
