"""Pointwise curvature of almost-Hermitian charts.

Conventions (all index positions are chart components):

* ``R(X, Y)Z = nabla_[X,Y] Z - [nabla_X, nabla_Y] Z`` and
  ``riem[i, j, k, l] = g(R(d_i, d_j) d_k, d_l)``; on the unit sphere this gives
  ``R(X, Y, Z, W) = g(X, Z) g(Y, W) - g(Y, Z) g(X, W)``.
* ``Ric(X, Y) = tr{Z -> R(X, Z)Y}``, ``Ric*(X, Y) = tr{Z -> -J R(X, Z) JY}``.
* ``omega(X, Y) = g(JX, Y)``, ``delta omega_c = -g^{ab} nabla_a omega_bc``.
* Weyl: ``R = -R_g/(2(n-1)(n-2)) g.g + 1/(n-2) Ric.g + W`` with the
  Kulkarni-Nomizu product ``.`` of :func:`kulkarni_nomizu`, and
  ``w_hat_omega = 1/2 omega^{ia} omega^{jb} W_ijab = 1/4 omega^{ij} omega^{kl} W_ijkl``
  (W acting on the bivector omega# = 1/2 omega^{ij} e_i ^ e_j).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from . import kernels
from .manifolds import ChartedManifold

DEFAULT_CHUNK = 4096


def kulkarni_nomizu(h, k):
    """(h.k)(X,Y,Z,U) = h(X,Z)k(Y,U) + h(Y,U)k(X,Z) - h(X,U)k(Y,Z) - h(Y,Z)k(X,U), batched."""
    t = np.einsum("pik,pjl->pijkl", h, k)
    s = np.einsum("pjl,pik->pijkl", h, k)
    u = np.einsum("pil,pjk->pijkl", h, k)
    v = np.einsum("pjk,pil->pijkl", h, k)
    return t + s - u - v


@dataclass
class CurvaturePack:
    """All pointwise quantities; arrays carry a leading batch axis unless built from one point."""

    gamma: np.ndarray
    riem: np.ndarray
    ric: np.ndarray
    star_ric: np.ndarray
    scalar: np.ndarray
    star_scalar: np.ndarray
    s_j: np.ndarray
    weyl: np.ndarray
    w_hat_omega: np.ndarray
    rho_j: np.ndarray
    star_ric_skew: np.ndarray
    omega: np.ndarray
    nabla_omega: np.ndarray
    nijenhuis: np.ndarray
    delta_omega: np.ndarray
    d_omega: np.ndarray
    metric: np.ndarray
    metric_inv: np.ndarray
    acs: np.ndarray

    def squeeze(self) -> "CurvaturePack":
        return CurvaturePack(**{f.name: getattr(self, f.name)[0] for f in fields(self)})

    def scalars(self, index=None) -> dict:
        """JSON-friendly scalar summary (one point)."""
        pick = (lambda a: a) if index is None else (lambda a: a[index])
        return {
            "scalar": float(pick(self.scalar)),
            "star_scalar": float(pick(self.star_scalar)),
            "s_j": float(pick(self.s_j)),
            "w_hat_omega": float(pick(self.w_hat_omega)),
        }


def _points(points):
    pts = np.asarray(points, dtype=float)
    return np.atleast_2d(pts), pts.ndim == 1


def _ricci_parts(ginv, riem, J):
    ric = np.einsum("pcd,pacbd->pab", ginv, riem)
    # Ric*(X, Y) = sum_i R(X, e_i, JY, Je_i)
    star_ric = np.einsum("pcd,pacef,peb,pfd->pab", ginv, riem, J, J, optimize=True)
    scalar = np.einsum("pab,pab->p", ginv, ric)
    star_scalar = np.einsum("pab,pab->p", ginv, star_ric)
    return ric, star_ric, scalar, star_scalar


def _nijenhuis(J, dJ):
    # N^e_ab = J^c_a d_c J^e_b - J^c_b d_c J^e_a + J^e_c d_b J^c_a - J^e_c d_a J^c_b
    t1 = np.einsum("pca,pceb->pabe", J, dJ)
    t2 = np.einsum("pec,pbca->pabe", J, dJ)
    return t1 - np.swapaxes(t1, 1, 2) + t2 - np.swapaxes(t2, 1, 2)


def _pack_batch(m: ChartedManifold, pts) -> CurvaturePack:
    n = m.dim
    gj, Jj = m.fields(pts, 2, 1)
    g, dg, d2g = gj.val, gj.d1, gj.d2
    J, dJ = Jj.val, Jj.d1
    ginv = np.linalg.inv(g)
    gamma, riem = kernels.christoffel_riemann(ginv, dg, d2g)
    ric, star_ric, scalar, star_scalar = _ricci_parts(ginv, riem, J)

    if n > 2:
        gg = kulkarni_nomizu(g, g)
        rg = kulkarni_nomizu(ric, g)
        weyl = riem + (scalar / (2.0 * (n - 1) * (n - 2)))[:, None, None, None, None] * gg - rg / (n - 2)
    else:
        weyl = np.zeros_like(riem)

    omega = np.swapaxes(J, 1, 2) @ g
    # d_i omega_ab = d_i J^c_a g_cb + J^c_a d_i g_cb
    domega = np.swapaxes(dJ, 2, 3) @ g[:, None] + np.swapaxes(J, 1, 2)[:, None] @ dg
    nabla_omega = (
        domega
        - np.einsum("pdab,pdc->pabc", gamma, omega)
        - np.einsum("pdac,pbd->pabc", gamma, omega)
    )
    d_omega = (
        nabla_omega
        + np.transpose(nabla_omega, (0, 2, 3, 1))
        + np.transpose(nabla_omega, (0, 3, 1, 2))
    )
    delta_omega = -np.einsum("pab,pabc->pc", ginv, nabla_omega)
    omega_up = ginv @ omega @ ginv
    w_hat = 0.5 * np.einsum("pia,pjb,pijab->p", omega_up, omega_up, weyl, optimize=True)

    nij = _nijenhuis(J, dJ)
    rho = -star_ric @ J
    skew = 0.5 * (star_ric - np.swapaxes(star_ric, 1, 2))
    return CurvaturePack(
        gamma, riem, ric, star_ric, scalar, star_scalar, scalar - star_scalar, weyl, w_hat,
        rho, skew, omega, nabla_omega, nij, delta_omega, d_omega, g, ginv, J,
    )


def map_chunks(fn, pts, chunk=DEFAULT_CHUNK, threads=1):
    """Apply ``fn`` to consecutive chunks of points; results keep input order."""
    pieces = [pts[i:i + chunk] for i in range(0, len(pts), chunk)]
    if threads > 1 and len(pieces) > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(fn, pieces))
    return [fn(p) for p in pieces]


def curvature_pack(m: ChartedManifold, point, chunk=DEFAULT_CHUNK, threads=1) -> CurvaturePack:
    """Every pointwise curvature quantity at one point (arrays unbatched) or a batch."""
    pts, single = _points(point)
    parts = map_chunks(lambda p: _pack_batch(m, p), pts, chunk, threads)
    if len(parts) == 1:
        pack = parts[0]
    else:
        pack = CurvaturePack(
            **{f.name: np.concatenate([getattr(q, f.name) for q in parts]) for f in fields(CurvaturePack)}
        )
    return pack.squeeze() if single else pack


def scalar_fields(m: ChartedManifold, points, chunk=DEFAULT_CHUNK, threads=1,
                  with_inverse=False) -> dict:
    """Scalar curvature, *-scalar curvature, S_J and volume density at many points."""
    pts, _ = _points(points)

    def one(p):
        gj, Jj = m.fields(p, 2, 0)
        g = gj.val
        ginv = np.linalg.inv(g)
        _, riem = kernels.christoffel_riemann(ginv, gj.d1, gj.d2)
        _, _, R, Rs = _ricci_parts(ginv, riem, Jj.val)
        return R, Rs, np.sqrt(np.linalg.det(g)), (ginv if with_inverse else None)

    parts = map_chunks(one, pts, chunk, threads)
    R = np.concatenate([q[0] for q in parts])
    Rs = np.concatenate([q[1] for q in parts])
    out = {
        "scalar": R,
        "star_scalar": Rs,
        "s_j": R - Rs,
        "volume_density": np.concatenate([q[2] for q in parts]),
    }
    if with_inverse:
        out["metric_inv"] = np.concatenate([q[3] for q in parts])
    return out


def weyl_identity_residual(m: ChartedManifold, point):
    """|(n-1) R* - R - 2(n-1) W_hat(omega, omega)| at one point or a batch."""
    pack = curvature_pack(m, point)
    n = m.dim
    return np.abs((n - 1) * pack.star_scalar - pack.scalar - 2 * (n - 1) * pack.w_hat_omega)


def nijenhuis(m: ChartedManifold, point):
    """N[a, b, e] = N_J(d_a, d_b)^e."""
    pts, single = _points(point)
    _, Jj = m.fields(pts, 0, 1)
    nij = _nijenhuis(Jj.val, Jj.d1)
    return nij[0] if single else nij


def adapted_frame(g, J, order=None, tol=1e-10):
    """g-orthonormal frame (columns) with e_{2k+1} = J e_{2k}, by Gram-Schmidt on coordinate vectors.

    Coordinate vectors are tried in ``order`` (default 0..n-1); a vector whose
    orthogonal remainder is below ``tol`` is skipped.
    """
    n = g.shape[0]
    order = range(n) if order is None else order
    cols = []

    def project(v):
        for e in cols:
            v = v - (e @ g @ v) * e
        return v

    for k in order:
        if len(cols) == n:
            break
        v = project(np.eye(n)[k])
        nv = np.sqrt(v @ g @ v)
        if nv < tol:
            continue
        e = v / nv
        f = project(J @ e)
        f = f / np.sqrt(f @ g @ f)
        cols.extend([e, f])
    if len(cols) != n:
        raise np.linalg.LinAlgError("could not build a J-adapted frame")
    return np.array(cols).T


def s_j_holomorphic_frame(m: ChartedManifold, point, order=None):
    """S_J as 4 sum_{i,j} R(Z_i, Z_j, conj Z_i, conj Z_j), Z_i = (e_i - sqrt(-1) J e_i)/sqrt 2."""
    pts, single = _points(point)
    gj, Jj = m.fields(pts, 2, 0)
    ginv = np.linalg.inv(gj.val)
    _, riem = kernels.christoffel_riemann(ginv, gj.d1, gj.d2)
    out = np.empty(len(pts))
    for p in range(len(pts)):
        E = adapted_frame(gj.val[p], Jj.val[p], order)
        Z = (E[:, 0::2] - 1j * E[:, 1::2]) / np.sqrt(2.0)
        val = 4.0 * np.einsum("ijkl,ia,jb,ka,lb->", riem[p], Z, Z, Z.conj(), Z.conj(), optimize=True)
        out[p] = val.real
    return out[0] if single else out
