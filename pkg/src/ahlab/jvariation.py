"""Deformations of the almost complex structure at a fixed metric.

A compatible deformation is a (1,1)-tensor K with KJ = -JK and
g(KX, Y) = -g(X, KY).  The path J(t) = J exp(-tJK) stays among the
g-compatible almost complex structures with J(0) = J and J'(0) = K.  Since the
metric does not move, S_J(t) changes only through the J-dependence of R*, and
the derivative of the conformal invariant is -2 int <K_flat, rho^J> u^2 dV for a
normalized minimizer u, where rho^J(X, Y) = -Ric*(X, JY) and
K_flat(X, Y) = g(KX, Y).
"""

from __future__ import annotations

import copy
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import kernels
from .curvature import _ricci_parts, curvature_pack, map_chunks
from .jets import Jet, constant_jet
from .manifolds import ChartedManifold, MatrixTrigPoly, _random_frequencies, from_manifest
from .yamabe import YamabeRun, grid_geometry, minimize_qj


class DependencyError(RuntimeError):
    """The derivative formula needs a converged minimizer."""


def _field_fn(A) -> Callable:
    if hasattr(A, "jet"):
        return A.jet
    if callable(A):
        return A
    mat = np.asarray(A, dtype=float)

    def fn(points, order):
        N, n = points.shape
        return constant_jet(np.broadcast_to(mat, (N,) + mat.shape).copy(), n, order)

    return fn


def project_jets(A: Jet, g: Jet, J: Jet) -> Jet:
    """g-skew part of A, then (B + JBJ)/2."""
    order = min(A.order, g.order, J.order)
    A, g, J = A.truncate(order), g.truncate(order), J.truncate(order)
    B = (A - g.inv() @ A.T @ g).scale(0.5)
    return (B + J @ B @ J).scale(0.5)


@dataclass
class CompatibleDeformation:
    """K as a jet-evaluable field on ``base``; ``spec`` rebuilds it in manifests."""

    base: ChartedManifold
    fn: Callable
    spec: Optional[dict] = None

    def jet(self, points, order: int = 0) -> Jet:
        return self.fn(np.atleast_2d(np.asarray(points, dtype=float)), order)

    def values(self, points) -> np.ndarray:
        return self.jet(points, 0).val

    def residuals(self, points) -> dict:
        """Max |KJ + JK| and max |g(K., .) + g(., K.)| over ``points``."""
        K = self.values(points)
        g, J = self.base.fields(points, 0, 0)
        g, J = g.val, J.val
        Kf = np.swapaxes(K, 1, 2) @ g
        return {
            "anticommutation": float(np.max(np.abs(K @ J + J @ K))),
            "g_skew": float(np.max(np.abs(Kf + np.swapaxes(Kf, 1, 2)))),
        }

    def flat(self, points) -> np.ndarray:
        """K_flat[a, b] = g(K e_a, e_b)."""
        K = self.values(points)
        g, _ = self.base.fields(points, 0, 0)
        return np.swapaxes(K, 1, 2) @ g.val


def project_deformation(A, m: ChartedManifold, spec: Optional[dict] = None) -> CompatibleDeformation:
    """Project an arbitrary (1,1) field (jet-evaluable, callable or constant) onto compatible deformations."""
    Afn = _field_fn(A)

    def fn(points, order):
        g, J = m.fields(points, order, order)
        return project_jets(Afn(points, order), g, J)

    return CompatibleDeformation(m, fn, spec)


def random_matrix_trig(n, seed, terms=3):
    """Random (non-symmetric) matrix trig polynomial; stream order as for the symmetric one."""
    rng = np.random.default_rng(seed)
    freqs = _random_frequencies(rng, n, terms)
    A = rng.uniform(-1, 1, (terms, n, n))
    B = rng.uniform(-1, 1, (terms, n, n))
    return MatrixTrigPoly(freqs, A, B)


def random_deformation(m: ChartedManifold, seed: int, amplitude: float = 1.0,
                       terms: int = 3) -> CompatibleDeformation:
    """Projection of a seeded random matrix trig polynomial (a constant term included)."""
    P = random_matrix_trig(m.dim, seed, terms)
    rng = np.random.default_rng([seed, 1])
    C = rng.uniform(-1, 1, (1, m.dim, m.dim))
    A = MatrixTrigPoly(
        np.vstack([np.zeros((1, m.dim)), P.freqs]),
        amplitude * np.concatenate([C, P.A]),
        amplitude * np.concatenate([np.zeros_like(C), P.B]),
    )
    spec = {"seed": int(seed), "amplitude": float(amplitude), "terms": int(terms)}
    return project_deformation(A, m, spec)


def deformation_from_spec(m: ChartedManifold, spec: dict) -> CompatibleDeformation:
    return random_deformation(m, int(spec["seed"]), float(spec.get("amplitude", 1.0)),
                              int(spec.get("terms", 3)))


def jpath(m: ChartedManifold, K: CompatibleDeformation, t: float) -> ChartedManifold:
    """(g, J exp(-tJK)) on the chart of ``m``."""
    t = float(t)

    def acs_fn(points, order):
        _, J = m.fields(points, 0, order)
        Kj = K.fn(points, order)
        return J @ (J @ Kj).scale(-t).expm()

    manifest = {"type": "j_path", "dim": m.dim, "base": copy.deepcopy(m.manifest), "t": t}
    if K.spec is not None:
        manifest["deformation"] = copy.deepcopy(K.spec)
    return ChartedManifold(
        m.dim, m.metric_fn, acs_fn, m.domain, f"jpath({m.label}, t={t:g})", manifest
    )


def jpath_from_manifest(spec: dict) -> ChartedManifold:
    base = from_manifest(spec["base"])
    if "deformation" not in spec:
        raise ValueError("j_path manifest needs a 'deformation' entry")
    K = deformation_from_spec(base, spec["deformation"])
    return jpath(base, K, float(spec.get("t", 0.0)))


def jpath_residuals(m: ChartedManifold, K: CompatibleDeformation, ts, points,
                    fd_step: float = 1e-5) -> dict:
    """J(t)^2 + 1 and compatibility residuals over ``ts``, J(0) - J, and |central FD of J(t) at 0 - K|."""
    g, J = m.fields(points, 0, 0)
    g, J = g.val, J.val
    n = m.dim
    sq, comp = 0.0, 0.0
    for t in ts:
        Jt = jpath(m, K, t).acs_jet(points, 0).val
        sq = max(sq, float(np.max(np.abs(Jt @ Jt + np.eye(n)))))
        comp = max(comp, float(np.max(np.abs(np.swapaxes(Jt, 1, 2) @ g @ Jt - g))))
    J0 = jpath(m, K, 0.0).acs_jet(points, 0).val
    plus = jpath(m, K, fd_step).acs_jet(points, 0).val
    minus = jpath(m, K, -fd_step).acs_jet(points, 0).val
    deriv = (plus - minus) / (2.0 * fd_step)
    return {
        "j_squared": sq,
        "compatibility": comp,
        "initial": float(np.max(np.abs(J0 - J))),
        "derivative": float(np.max(np.abs(deriv - K.values(points)))),
    }


# -- the J-Ricci form --------------------------------------------------------------


def form_type_parts(A, J):
    """(A^{2,0+0,2}, A^{1,1}) = ((A - J^T A J)/2, (A + J^T A J)/2), batched."""
    twisted = np.swapaxes(J, -1, -2) @ A @ J
    return 0.5 * (A - twisted), 0.5 * (A + twisted)


def rho_decomposition_residual(m: ChartedManifold, point) -> float:
    """Max over basis pairs of |rho^{2,0+0,2}(e_a, e_b) - Ric*^skew(J e_b, e_a)|.

    Folded into the same maximum: the two parts sum to rho, the first is
    J-anti-invariant and the second J-invariant.
    """
    pack = curvature_pack(m, np.atleast_2d(np.asarray(point, dtype=float)))
    J, rho, skew = pack.acs, pack.rho_j, pack.star_ric_skew
    a20, a11 = form_type_parts(rho, J)
    Jt = np.swapaxes(J, 1, 2)
    rhs = np.swapaxes(Jt @ skew, 1, 2)  # rhs[a, b] = skew(J e_b, e_a)
    return float(max(
        np.max(np.abs(a20 - rhs)),
        np.max(np.abs(a20 + a11 - rho)),
        np.max(np.abs(Jt @ a20 @ J + a20)),
        np.max(np.abs(Jt @ a11 @ J - a11)),
    ))


def _inner(ginv, A, B):
    """Full inner product g^{ac} g^{bd} A_ab B_cd, batched."""
    return np.einsum("pac,pbd,pab,pcd->p", ginv, ginv, A, B, optimize=True)


def critical_point_test(m: ChartedManifold, num_points: int = 32, seed: int = 0, tol: float = 1e-8):
    """(max |Ric*^skew|_g over sampled points, whether it is below ``tol``)."""
    pts = m.sample(num_points, seed)
    pack = curvature_pack(m, pts)
    norms = np.sqrt(np.maximum(_inner(pack.metric_inv, pack.star_ric_skew, pack.star_ric_skew), 0.0))
    worst = float(np.max(norms))
    return worst, worst < tol


def pairing_density(m: ChartedManifold, K: CompatibleDeformation, points, chunk: int = 4096,
                    threads: int = 1) -> np.ndarray:
    """<K_flat, rho^J>_g at each point."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))

    def one(p):
        gj, Jj = m.fields(p, 2, 0)
        g, J = gj.val, Jj.val
        ginv = np.linalg.inv(g)
        _, riem = kernels.christoffel_riemann(ginv, gj.d1, gj.d2)
        _, star_ric, _, _ = _ricci_parts(ginv, riem, J)
        rho = -star_ric @ J
        Kflat = np.swapaxes(K.fn(p, 0).val, 1, 2) @ g
        return _inner(ginv, Kflat, rho)

    return np.concatenate(map_chunks(one, pts, chunk, threads))


# -- derivative of the conformal invariant -------------------------------------------


def dY_formula(manifest, K: CompatibleDeformation, resolution: int = 6, run: Optional[YamabeRun] = None,
               backend: str = "fd4", threads: int = 1, **minimize_kwargs) -> float:
    """-2 int <K_flat, rho^J>_g u^2 dV with u the normalized discrete minimizer.

    Without ``run`` the minimizer is computed at the same resolution.  An
    unconverged run raises :class:`DependencyError`.
    """
    m = from_manifest(manifest) if isinstance(manifest, dict) else manifest
    if run is None:
        run = minimize_qj(m.manifest or m, resolution, backend=backend, threads=threads,
                          **minimize_kwargs)
    if run.minimizer is None or run.status != "converged":
        raise DependencyError(f"minimizer not available (status {run.status})")
    if run.resolution != resolution:
        raise DependencyError("minimizer resolution does not match")
    geo = grid_geometry(m, resolution, backend, threads)
    u = run.minimizer.values
    dens = pairing_density(m, K, geo.points, threads=threads)
    return -2.0 * geo.integrate(dens * u * u) + 0.0


def finite_diff_dY(manifest, K: CompatibleDeformation, resolution: int = 6, h: float = 0.02,
                   backend: str = "fd4", threads: int = 1, max_iter: int = 2000, tol: float = 1e-8,
                   initial=None, details: bool = False):
    """(Y(h) - Y(-h)) / 2h from two minimizer runs along J(t) = J exp(-tJK).

    This is the difference quotient of f(t) = Y(M, g, J(t)) that the envelope
    argument differentiates.
    """
    m = from_manifest(manifest) if isinstance(manifest, dict) else manifest
    runs = []
    for t in (h, -h):
        mt = jpath(m, K, t)
        run = minimize_qj(mt, resolution, max_iter=max_iter, tol=tol, backend=backend,
                          initial=initial, threads=threads)
        if run.status != "converged":
            raise DependencyError(f"minimizer at t={t:+g} ended with status {run.status}")
        runs.append(run)
    value = (runs[0].final_value - runs[1].final_value) / (2.0 * h)
    if details:
        return value, runs
    return value


def dy_crosscheck(manifest, K: CompatibleDeformation, resolution: int = 6, h: float = 0.02,
                  backend: str = "fd4", threads: int = 1, max_iter: int = 2000,
                  tol: float = 1e-8) -> dict:
    """Formula and finite-difference values with the diagnostics needed to judge them."""
    t0 = time.perf_counter()
    m = from_manifest(manifest) if isinstance(manifest, dict) else manifest
    base = minimize_qj(m, resolution, max_iter=max_iter, tol=tol, backend=backend, threads=threads)
    formula = dY_formula(m, K, resolution, run=base, backend=backend, threads=threads)
    fd, runs = finite_diff_dY(m, K, resolution, h, backend, threads, max_iter, tol,
                              initial=base.minimizer, details=True)
    scale = max(abs(formula), abs(fd))
    return {
        "formula": formula,
        "finite_difference": fd,
        "relative_difference": abs(formula - fd) / scale if scale > 0 else 0.0,
        "h": h,
        "resolution": resolution,
        "backend": backend,
        "max_iter": max_iter,
        "tol": tol,
        "y0": base.final_value,
        "y_plus": runs[0].final_value,
        "y_minus": runs[1].final_value,
        "el_residual": base.el_residual,
        "el_residual_endpoints": [r.el_residual for r in runs],
        "iterations": [base.iterations] + [r.iterations for r in runs],
        "wall_time": time.perf_counter() - t0,
    }
