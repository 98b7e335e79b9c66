"""Pure numpy implementations of the hot kernels (fallback for ``_ckernels``)."""

import numpy as np


def christoffel_riemann(ginv, dg, d2g):
    """Christoffel symbols and the curvature tensor from metric jets.

    ``dg[p, i, a, b] = d_i g_ab``, ``d2g[p, i, j, a, b] = d_i d_j g_ab``.
    Returns ``gamma[p, m, j, k] = Gamma^m_jk`` and ``riem[p, i, j, k, l] =
    R(d_i, d_j, d_k, d_l)`` with R(X,Y)Z = nabla_[X,Y] Z - [nabla_X, nabla_Y] Z.
    """
    # first-kind symbols G1[l, j, k] = 1/2 (d_j g_lk + d_k g_lj - d_l g_jk)
    G1 = 0.5 * (dg.transpose(0, 2, 1, 3) + dg.transpose(0, 2, 3, 1) - dg)
    gamma = np.einsum("pml,pljk->pmjk", ginv, G1)
    riem = -0.5 * (
        np.einsum("pikzj->pijkz", d2g)
        - np.einsum("pizjk->pijkz", d2g)
        - np.einsum("pjkzi->pijkz", d2g)
        + np.einsum("pjzik->pijkz", d2g)
    )
    quad = np.einsum("pmil,pmjk->pijkl", G1, gamma)
    riem += quad - quad.transpose(0, 2, 1, 3, 4)
    return gamma, riem


def fd4_axis(u, axis, h):
    """Periodic fourth-order central first derivative along ``axis``."""
    return (
        8.0 * (np.roll(u, -1, axis) - np.roll(u, 1, axis))
        - (np.roll(u, -2, axis) - np.roll(u, 2, axis))
    ) / (12.0 * h)


def metric_flux(a, du):
    """flux[i, p] = sum_j a[p, i, j] du[j, p]."""
    return np.einsum("pij,jp->ip", a, du)
