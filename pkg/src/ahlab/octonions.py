"""Imaginary-octonion structure constants (Fano-plane convention)."""

import numpy as np

# Oriented lines: e_a e_b = e_c for each (a, b, c) and its cyclic shifts.
# Generated by e1 e2 = e3, e1 e4 = e5, e2 e4 = e6, e3 e4 = e7 (Cayley-Dickson over H).
FANO_TRIPLES = ((1, 2, 3), (1, 4, 5), (1, 7, 6), (2, 4, 6), (2, 5, 7), (3, 4, 7), (3, 6, 5))


def structure_constants(triples=FANO_TRIPLES, dim=7):
    """c[i, j, k] with e_i e_j = -delta_ij + sum_k c[i, j, k] e_k (0-based indices)."""
    c = np.zeros((dim, dim, dim))
    for a, b, k in triples:
        for i, j, l in ((a, b, k), (b, k, a), (k, a, b)):
            c[i - 1, j - 1, l - 1] = 1.0
            c[j - 1, i - 1, l - 1] = -1.0
    return c


OCTONION_C = structure_constants()
QUATERNION_C = structure_constants(((1, 2, 3),), dim=3)


def multiply(x, y, c=OCTONION_C):
    """Product of (batches of) octonions stored as (real, imag_1..imag_7)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xr, xi = x[..., 0], x[..., 1:]
    yr, yi = y[..., 0], y[..., 1:]
    real = xr * yr - np.sum(xi * yi, axis=-1)
    imag = (
        xr[..., None] * yi
        + yr[..., None] * xi
        + np.einsum("...i,...j,ijk->...k", xi, yi, c)
    )
    return np.concatenate([real[..., None], imag], axis=-1)


def cross(p, v, c=OCTONION_C):
    """Imaginary part of p v for imaginary p, v."""
    return np.einsum("...i,...j,ijk->...k", p, v, c)
