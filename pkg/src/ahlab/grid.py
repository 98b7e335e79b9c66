"""Periodic lattices on the torus and the discrete operators used by the minimizer."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .curvature import DEFAULT_CHUNK, scalar_fields
from .manifolds import ChartedManifold, conformal_exponent

BACKENDS = ("fd4", "spectral")


def lattice_points(n: int, m: int) -> np.ndarray:
    """All points 2 pi k / m, k in {0..m-1}^n, in C order (last coordinate fastest)."""
    axes = [np.arange(m) * (2.0 * math.pi / m)] * n
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([a.ravel() for a in mesh], axis=1)


@dataclass
class DiscreteField:
    """Values of a function on the periodic lattice with m points per axis."""

    dim: int
    resolution: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(-1)
        if self.values.size != self.resolution ** self.dim:
            raise ValueError("value count does not match the lattice size")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("discrete field has non-finite values")

    @property
    def cell_volume(self) -> float:
        return (2.0 * math.pi / self.resolution) ** self.dim

    @property
    def shape(self):
        return (self.resolution,) * self.dim

    @classmethod
    def from_function(cls, fn, n, m):
        """Sample a callable (or anything with ``.jet``) on the lattice."""
        pts = lattice_points(n, m)
        vals = fn.jet(pts, 0).val if hasattr(fn, "jet") else fn(pts)
        return cls(n, m, vals)

    def scaled(self, c) -> "DiscreteField":
        return DiscreteField(self.dim, self.resolution, c * self.values)


def _spectral_axis(u, axis, h):
    m = u.shape[axis]
    k = np.fft.rfftfreq(m, d=h / (2.0 * math.pi))
    if m % 2 == 0:
        k[-1] = 0.0  # Nyquist mode has no real derivative
    shape = [1] * u.ndim
    shape[axis] = len(k)
    U = np.fft.rfft(u, axis=axis) * (1j * k.reshape(shape))
    return np.fft.irfft(U, n=m, axis=axis)


class GridGeometry:
    """Metric data of a torus manifold sampled on a lattice.

    Holds g^{-1}, sqrt(det g), quadrature weights sqrt(det g) h^n and the
    curvature scalars R, R*, S_J at every node.  Derivatives use periodic
    fourth-order differences (``fd4``) or FFT differentiation (``spectral``).
    """

    def __init__(self, m: ChartedManifold, resolution: int, backend: str = "fd4",
                 threads: int = 1, chunk: int = DEFAULT_CHUNK):
        if not m.is_torus:
            raise ValueError("grid geometry needs a torus manifold")
        if backend not in BACKENDS:
            raise ValueError(f"unknown derivative backend {backend!r}")
        if resolution < 4:
            raise ValueError("resolution must be at least 4")
        self.manifold = m
        self.n = n = m.dim
        self.resolution = resolution
        self.backend = backend
        self.h = 2.0 * math.pi / resolution
        self.shape = (resolution,) * n
        pts = lattice_points(n, resolution)
        self.points = pts

        data = scalar_fields(m, pts, chunk, threads, with_inverse=True)
        self.ginv = data["metric_inv"]
        self.sqrt_det = data["volume_density"]
        self.scalar = data["scalar"]
        self.star_scalar = data["star_scalar"]
        self.s_j = self.scalar - self.star_scalar
        self.weights = self.sqrt_det * self.h ** n
        self.flux_matrix = np.ascontiguousarray(self.sqrt_det[:, None, None] * self.ginv)
        self.p = 2.0 + conformal_exponent(n)

    @property
    def volume(self) -> float:
        return float(np.sum(self.weights))

    def field(self, values) -> DiscreteField:
        return DiscreteField(self.n, self.resolution, values)

    def nyquist_filter(self, u) -> np.ndarray:
        """Remove every Fourier mode that sits at the Nyquist frequency of some axis.

        Central differences (fd4 and spectral) annihilate these checkerboard
        modes, so they carry no gradient information; the filter is the
        orthogonal projector onto their complement.
        """
        u = np.asarray(u, dtype=float).reshape(self.shape)
        if self.resolution % 2:
            return u.reshape(-1)
        for axis in range(self.n):
            U = np.fft.rfft(u, axis=axis)
            idx = [slice(None)] * self.n
            idx[axis] = -1
            U[tuple(idx)] = 0.0
            u = np.fft.irfft(U, n=self.resolution, axis=axis)
        return u.reshape(-1)

    # -- derivatives ---------------------------------------------------------
    def derivative(self, u, axis):
        u = np.asarray(u, dtype=float).reshape(self.shape)
        if self.backend == "fd4":
            return kernels.fd4_axis(u, axis, self.h).reshape(-1)
        return _spectral_axis(u, axis, self.h).reshape(-1)

    def gradient(self, u) -> np.ndarray:
        """Coordinate gradient, shape (n, N)."""
        return np.stack([self.derivative(u, i) for i in range(self.n)])

    def laplacian(self, u, du=None) -> np.ndarray:
        """Delta_g u = -(1/sqrt g) sum_i D_i (sqrt g g^{ij} D_j u), geometer's sign."""
        du = self.gradient(u) if du is None else du
        flux = kernels.metric_flux(self.flux_matrix, du)
        div = sum(self.derivative(flux[i], i) for i in range(self.n))
        return -div / self.sqrt_det

    def dirichlet_density(self, u, du=None) -> np.ndarray:
        """|du|_g^2 at each node."""
        du = self.gradient(u) if du is None else du
        return np.einsum("ip,pij,jp->p", du, self.ginv, du)

    # -- integrals -------------------------------------------------------------
    def integrate(self, f) -> float:
        return float(np.sum(self.weights * f))

    def p_norm(self, u, p: Optional[float] = None) -> float:
        p = self.p if p is None else p
        return float(np.sum(self.weights * np.abs(u) ** p) ** (1.0 / p))

    def l2_norm(self, f) -> float:
        return math.sqrt(self.integrate(f * f))
