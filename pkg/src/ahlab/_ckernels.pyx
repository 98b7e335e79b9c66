# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; same contracts as ``ahlab._pykernels``."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def christoffel_riemann(double[:, :, ::1] ginv, double[:, :, :, ::1] dg,
                        double[:, :, :, :, ::1] d2g):
    cdef Py_ssize_t N = dg.shape[0]
    cdef Py_ssize_t n = dg.shape[1]
    cdef Py_ssize_t p, i, j, k, l, m
    cdef double s
    g1_arr = np.empty((n, n, n))
    gamma_arr = np.empty((N, n, n, n))
    riem_arr = np.empty((N, n, n, n, n))
    cdef double[:, :, ::1] G1 = g1_arr
    cdef double[:, :, :, ::1] gam = gamma_arr
    cdef double[:, :, :, :, ::1] R = riem_arr
    for p in range(N):
        for l in range(n):
            for j in range(n):
                for k in range(n):
                    G1[l, j, k] = 0.5 * (dg[p, j, l, k] + dg[p, k, l, j] - dg[p, l, j, k])
        for m in range(n):
            for j in range(n):
                for k in range(n):
                    s = 0.0
                    for l in range(n):
                        s += ginv[p, m, l] * G1[l, j, k]
                    gam[p, m, j, k] = s
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    for l in range(n):
                        s = -0.5 * (d2g[p, i, k, l, j] - d2g[p, i, l, j, k]
                                    - d2g[p, j, k, l, i] + d2g[p, j, l, i, k])
                        for m in range(n):
                            s += G1[m, i, l] * gam[p, m, j, k] - G1[m, j, l] * gam[p, m, i, k]
                        R[p, i, j, k, l] = s
    return gamma_arr, riem_arr


def _fd4_3d(double[:, :, ::1] u, double h):
    cdef Py_ssize_t pre = u.shape[0]
    cdef Py_ssize_t m = u.shape[1]
    cdef Py_ssize_t post = u.shape[2]
    cdef Py_ssize_t a, k, b, kp1, kp2, km1, km2
    cdef double c = 1.0 / (12.0 * h)
    out_arr = np.empty((pre, m, post))
    cdef double[:, :, ::1] out = out_arr
    for a in range(pre):
        for k in range(m):
            kp1 = (k + 1) % m
            kp2 = (k + 2) % m
            km1 = (k - 1 + m) % m
            km2 = (k - 2 + m) % m
            for b in range(post):
                out[a, k, b] = c * (8.0 * (u[a, kp1, b] - u[a, km1, b])
                                    - (u[a, kp2, b] - u[a, km2, b]))
    return out_arr


def fd4_axis(u, int axis, double h):
    arr = np.ascontiguousarray(u, dtype=np.float64)
    shape = arr.shape
    if axis < 0:
        axis += arr.ndim
    pre = 1
    for s in shape[:axis]:
        pre *= s
    post = 1
    for s in shape[axis + 1:]:
        post *= s
    out = _fd4_3d(arr.reshape(pre, shape[axis], post), h)
    return out.reshape(shape)


def metric_flux(double[:, :, ::1] a, double[:, ::1] du):
    cdef Py_ssize_t N = a.shape[0]
    cdef Py_ssize_t n = a.shape[1]
    cdef Py_ssize_t p, i, j
    cdef double s
    out_arr = np.empty((n, N))
    cdef double[:, ::1] out = out_arr
    for p in range(N):
        for i in range(n):
            s = 0.0
            for j in range(n):
                s += a[p, i, j] * du[j, p]
            out[i, p] = s
    return out_arr
