"""Conformal transformation laws, the functionals Q_g and Q_{g,J}, their discrete
minimization on torus lattices, and the first eigenvalue of 4 Delta_g + S_J.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg
from scipy.special import gamma as gamma_fn

from .curvature import curvature_pack
from .grid import DiscreteField, GridGeometry
from .manifolds import (
    ChartedManifold,
    PositivityError,
    conformal_exponent,
    from_manifest,
    make_conformal,
)

POSITIVITY_FLOOR = 1e-10
ARMIJO_C = 1e-4


class OptimizationError(RuntimeError):
    """The minimizer diverged; ``history`` holds the values seen so far."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])


class EigensolverError(RuntimeError):
    """Inverse iteration did not converge within its iteration cap."""


def sphere_area(n: int) -> float:
    """Volume omega_n of the unit n-sphere, 2 pi^{(n+1)/2} / Gamma((n+1)/2)."""
    return 2.0 * math.pi ** ((n + 1) / 2.0) / gamma_fn((n + 1) / 2.0)


def yamabe_bound(n: int) -> float:
    """n(n-2) omega_n^{2/n}, the upper bound for Y(M, g, J)."""
    return n * (n - 2) * sphere_area(n) ** (2.0 / n)


# -- pointwise -----------------------------------------------------------------


def laplacian(m: ChartedManifold, u, point):
    """Delta_g u = -g^{ij}(d_i d_j u - Gamma^k_ij d_k u) from jets, at one point or a batch."""
    pts = np.atleast_2d(np.asarray(point, dtype=float))
    pack = curvature_pack(m, pts)
    uj = u.jet(pts, 2)
    hess = uj.d2 - np.einsum("pkij,pk->pij", pack.gamma, uj.d1)
    out = -np.einsum("pij,pij->p", pack.metric_inv, hess)
    return out[0] if np.ndim(point) == 1 else out


def residual_conformal_laws(m: ChartedManifold, u, point):
    """Absolute residuals of the three conformal laws for g~ = u^{p-2} g.

    Returns (scalar law, *-scalar law, S_J law) residuals with
    4(n-1)/(n-2) Delta u + R u = R~ u^{p-1},
    4/(n-2) Delta u + R* u = R~* u^{p-1},
    4 Delta u + S_J u = S~_J u^{p-1}.
    """
    pts = np.atleast_2d(np.asarray(point, dtype=float))
    n = m.dim
    p = 2.0 + conformal_exponent(n)
    uval = u.jet(pts, 0).val
    if np.any(uval <= 0):
        raise PositivityError("conformal factor must be positive")
    base = curvature_pack(m, pts)
    tilde = curvature_pack(make_conformal(m, u), pts)
    lap = laplacian(m, u, pts)
    up = uval ** (p - 1)
    r1 = np.abs(4 * (n - 1) / (n - 2) * lap + base.scalar * uval - tilde.scalar * up)
    r2 = np.abs(4 / (n - 2) * lap + base.star_scalar * uval - tilde.star_scalar * up)
    r3 = np.abs(4 * lap + base.s_j * uval - tilde.s_j * up)
    if np.ndim(point) == 1:
        return float(r1[0]), float(r2[0]), float(r3[0])
    return r1, r2, r3


# -- discrete functionals --------------------------------------------------------

_GEOMETRY_CACHE: dict = {}
_CACHE_SIZE = 3


def grid_geometry(m, resolution: int, backend: str = "fd4", threads: int = 1) -> GridGeometry:
    """Lattice geometry of a manifold or manifest, cached by (manifest, resolution, backend)."""
    if isinstance(m, dict):
        m = from_manifest(m)
    if not m.manifest:
        return GridGeometry(m, resolution, backend, threads)
    key = (json.dumps(m.manifest, sort_keys=True), resolution, backend)
    geo = _GEOMETRY_CACHE.get(key)
    if geo is None:
        geo = GridGeometry(m, resolution, backend, threads)
        if len(_GEOMETRY_CACHE) >= _CACHE_SIZE:
            _GEOMETRY_CACHE.pop(next(iter(_GEOMETRY_CACHE)))
        _GEOMETRY_CACHE[key] = geo
    return geo


def _values(u):
    return u.values if isinstance(u, DiscreteField) else np.asarray(u, dtype=float).reshape(-1)


def _quotient(geo: GridGeometry, u, a: float, potential) -> float:
    u = _values(u)
    norm = geo.p_norm(u)
    if norm == 0.0:
        raise ZeroDivisionError("functional is undefined for the zero field")
    energy = geo.integrate(a * geo.dirichlet_density(u) + potential * u * u)
    return energy / norm ** 2


def q_functional(geo: GridGeometry, u) -> float:
    """Q_g(u) = int 4(n-1)/(n-2)|du|^2 + R_g u^2 dV / ||u||_p^2 on the lattice."""
    n = geo.n
    return _quotient(geo, u, 4.0 * (n - 1) / (n - 2), geo.scalar)


def qj_functional(geo: GridGeometry, u) -> float:
    """Q_{g,J}(u) = int 4|du|^2 + S_J u^2 dV / ||u||_p^2 on the lattice."""
    return _quotient(geo, u, 4.0, geo.s_j)


def l_operator(geo: GridGeometry, u):
    """L_{g,J} u = 4 Delta_g u + S_J u."""
    u = _values(u)
    return 4.0 * geo.laplacian(u) + geo.s_j * u


# -- minimizer -------------------------------------------------------------------


@dataclass
class YamabeRun:
    manifest: dict
    resolution: int
    backend: str
    value_history: list
    final_value: float
    minimizer: DiscreteField
    el_residual: float
    el_constant: float
    bound: float
    iterations: int
    clamp_count: int
    status: str
    lambda1: Optional[float] = None
    el_residual_pointwise: Optional[float] = None
    wall_time: float = 0.0
    diagnostics: list = field(default_factory=list)

    def to_json(self, include_minimizer: bool = False) -> dict:
        out = {
            "manifest": self.manifest,
            "resolution": self.resolution,
            "backend": self.backend,
            "value_history": [float(v) for v in self.value_history],
            "final_value": float(self.final_value),
            "el_residual": float(self.el_residual),
            "el_residual_pointwise": None if self.el_residual_pointwise is None
            else float(self.el_residual_pointwise),
            "el_constant": float(self.el_constant),
            "bound": float(self.bound),
            "within_bound": bool(self.final_value <= self.bound + 1e-6),
            "iterations": self.iterations,
            "clamp_count": self.clamp_count,
            "status": self.status,
            "lambda1": None if self.lambda1 is None else float(self.lambda1),
            "minimizer_p_norm": 1.0,
            "minimizer_min": float(self.minimizer.values.min()),
            "minimizer_max": float(self.minimizer.values.max()),
            "wall_time": self.wall_time,
        }
        if include_minimizer:
            out["minimizer"] = self.minimizer.values.tolist()
        return out


def euler_lagrange_residual(geo: GridGeometry, u, Lu=None, projected: bool = True):
    """(||r||, c) for r = 4 Delta u + S_J u - c u^{p-1}, c = Q_{g,J}(u) ||u||_p^{2-p}.

    ``projected`` measures the Galerkin residual F(w r)/mean(w) on the
    Nyquist-free subspace (the discrete Euler-Lagrange equation of the lattice
    problem); otherwise the pointwise residual.  Norms are L^2(dV).
    """
    u = _values(u)
    Lu = l_operator(geo, u) if Lu is None else Lu
    p = geo.p
    norm = geo.p_norm(u)
    Q = geo.integrate(u * Lu) / norm ** 2
    c = Q * norm ** (2 - p)
    r = Lu - c * u ** (p - 1)
    if projected:
        w = geo.weights
        r = geo.nyquist_filter(w * r) / np.mean(w)
    return geo.l2_norm(r), c


def minimize_qj(manifest, resolution: int = 6, max_iter: int = 500, tol: float = 1e-6,
                backend: str = "fd4", initial=None, threads: int = 1,
                refresh_every: int = 25) -> YamabeRun:
    """Projected gradient descent for min Q_{g,J} over positive lattice functions.

    The search space is the Nyquist-free lattice functions: central
    differences cannot see modes at the Nyquist frequency, and letting them in
    makes the discrete quotient unbounded below on coarse grids.  Each step
    moves along the projection d = F(w G)/mean(w) of the L^2(dV) gradient
    G = 2(4 Delta u + S_J u - Q u^{p-1}) (with ||u||_p = 1), clamps values
    below 1e-10 (counted), renormalizes to ||u||_p = 1 and accepts the first
    step 1, 1/2, 1/4, ... passing the Armijo test with constant 1e-4.  Stops
    once the projected Euler-Lagrange residual drops below ``tol``.
    """
    t0 = time.perf_counter()
    m = from_manifest(manifest) if isinstance(manifest, dict) else manifest
    geo = grid_geometry(m, resolution, backend, threads)
    p = geo.p
    w = geo.weights
    wbar = float(np.mean(w))
    F = geo.nyquist_filter

    u = np.ones(geo.points.shape[0]) if initial is None else F(_values(initial))
    if np.any(u <= 0):
        raise PositivityError("initial field must be positive")
    u /= geo.p_norm(u)
    Lu = l_operator(geo, u)
    Q = float(np.sum(w * u * Lu))
    history = [Q]
    clamps = 0
    status = "max_iter"
    it = 0
    res, c = euler_lagrange_residual(geo, u, Lu)
    for it in range(1, max_iter + 1):
        if res < tol:
            status = "converged"
            it -= 1
            break
        G = 2.0 * (Lu - Q * u ** (p - 1))
        d = F(w * G) / wbar
        slope = float(np.sum(w * G * d))
        Ld = l_operator(geo, d)
        b = float(np.sum(w * u * Ld))
        eD = float(np.sum(w * d * Ld))
        step = 1.0
        accepted = False
        while step > 1e-16:
            trial = u - step * d
            low = trial < POSITIVITY_FLOOR
            if np.any(low):
                trial = np.where(low, POSITIVITY_FLOOR, trial)
                Lt = l_operator(geo, trial)
                energy = float(np.sum(w * trial * Lt))
            else:
                Lt = None
                energy = Q - 2.0 * step * b + step * step * eD
            norm = geo.p_norm(trial)
            Qt = energy / norm ** 2
            if not math.isfinite(Qt):
                raise OptimizationError("non-finite functional value", history)
            if Qt <= Q - ARMIJO_C * step * slope:
                accepted = True
                if Lt is None:
                    Lt = Lu - step * Ld
                else:
                    clamps += int(np.count_nonzero(low))
                break
            step *= 0.5
        if not accepted:
            status = "line_search_stalled"
            it -= 1
            break
        u = trial / norm
        Lu = Lt / norm
        if it % refresh_every == 0:
            Lu = l_operator(geo, u)
        Q = float(np.sum(w * u * Lu))
        history.append(Q)
        res, c = euler_lagrange_residual(geo, u, Lu)
    else:
        it = max_iter

    Lu = l_operator(geo, u)
    res, c = euler_lagrange_residual(geo, u, Lu)
    full, _ = euler_lagrange_residual(geo, u, Lu, projected=False)
    if res < tol:
        status = "converged"
    final = qj_functional(geo, u)
    history[-1] = final
    run = YamabeRun(
        manifest=m.manifest,
        resolution=resolution,
        backend=backend,
        value_history=history,
        final_value=final,
        minimizer=geo.field(u),
        el_residual=res,
        el_constant=c,
        bound=yamabe_bound(geo.n),
        iterations=it,
        clamp_count=clamps,
        status=status,
        wall_time=time.perf_counter() - t0,
    )
    run.el_residual_pointwise = full
    return run


def first_eigenvalue(manifest, resolution: int = 6, backend: str = "fd4", threads: int = 1,
                     max_iter: int = 200, tol: float = 1e-12) -> float:
    """Smallest eigenvalue of the lattice L_{g,J} by shifted inverse power iteration.

    The shift sigma = min S_J - 1 lies below the spectrum, so W (L - sigma)
    (W the quadrature weights) is symmetric positive definite and each inverse
    step is a conjugate-gradient solve.  Starts from the constant vector.  The
    iteration runs on the complement of the lattice Nyquist modes, which the
    central-difference gradient cannot see (see ``GridGeometry.nyquist_filter``).
    """
    m = from_manifest(manifest) if isinstance(manifest, dict) else manifest
    geo = grid_geometry(m, resolution, backend, threads)
    w = geo.weights
    N = w.size
    F = geo.nyquist_filter
    sigma = float(np.min(geo.s_j)) - 1.0

    def matvec(x):
        x = F(x)
        return F(w * (l_operator(geo, x) - sigma * x))

    op = LinearOperator((N, N), matvec=matvec, dtype=float)

    def wnorm(x):
        return math.sqrt(np.sum(w * x * x))

    x = np.ones(N)
    x /= wnorm(x)
    lam = float(np.sum(w * x * l_operator(geo, x)))
    for _ in range(max_iter):
        y, info = cg(op, F(w * x), x0=x / max(lam - sigma, 1e-300), rtol=1e-13, atol=0.0,
                     maxiter=5000)
        if info != 0:
            raise EigensolverError(f"conjugate gradients failed (info={info})")
        x = F(y)
        x /= wnorm(x)
        Lx = l_operator(geo, x)
        new = float(np.sum(w * x * Lx))
        resid = wnorm(F(w * (Lx - new * x)) / w)
        done = abs(new - lam) <= tol * max(1.0, abs(new)) and resid <= 1e-7 * max(1.0, abs(new - sigma))
        lam = new
        if done:
            return lam
    raise EigensolverError("inverse iteration did not converge")


def kw_operator(geo: GridGeometry, u, a: float, alpha: float, k) -> DiscreteField:
    """T(u) = u^{-a} (alpha Delta_g u + k u) on the lattice."""
    uv = _values(u)
    if np.any(uv <= 0):
        raise PositivityError("T(u) needs a positive field")
    kv = _values(k) if not np.isscalar(k) else np.full_like(uv, float(k))
    return geo.field(uv ** (-a) * (alpha * geo.laplacian(uv) + kv * uv))


def prescribable(K, y_sign: int) -> bool:
    """Whether K is a prescribable S_J in a conformal class with sign(Y) = y_sign."""
    k = _values(K)
    if y_sign < 0:
        return bool(np.min(k) < 0)
    if y_sign == 0:
        if np.all(np.abs(k) <= 1e-12):
            return True
        return bool(np.min(k) < 0 < np.max(k))
    return bool(np.max(k) > 0)


def value_sign(x: float, zero_tol: float = 1e-3) -> int:
    """Sign with |x| < zero_tol counted as zero."""
    if abs(x) < zero_tol:
        return 0
    return 1 if x > 0 else -1
