"""Kernel dispatch: the compiled extension when importable, numpy otherwise.

Set ``AHLAB_KERNELS=python`` to force the fallback.
"""

import os

import numpy as np

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("AHLAB_KERNELS", "").lower() != "python":
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:  # extension not built
        _impl = _pykernels


def christoffel_riemann(ginv, dg, d2g):
    return _impl.christoffel_riemann(
        np.ascontiguousarray(ginv), np.ascontiguousarray(dg), np.ascontiguousarray(d2g)
    )


def fd4_axis(u, axis, h):
    return _impl.fd4_axis(u, axis, h)


def metric_flux(a, du):
    return _impl.metric_flux(np.ascontiguousarray(a), np.ascontiguousarray(du))
