import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ahlab import _pykernels, kernels
from ahlab.manifolds import make_compatible_torus

compiled = pytest.importorskip("ahlab._ckernels")


def metric_data(seed, count=7):
    m = make_compatible_torus(6, seed, 0.1)
    g, _ = m.fields(m.sample(count, seed), 2, 0)
    return np.linalg.inv(g.val), g.d1, g.d2


@given(st.integers(0, 50))
def test_compiled_christoffel_riemann_matches_fallback(seed):
    ginv, dg, d2g = metric_data(seed)
    ga, ra = compiled.christoffel_riemann(ginv, dg, d2g)
    gb, rb = _pykernels.christoffel_riemann(ginv, dg, d2g)
    np.testing.assert_allclose(ga, gb, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(ra, rb, rtol=1e-11, atol=1e-13)


@given(st.integers(0, 1000), st.sampled_from([0, 1, 2]))
def test_compiled_fd4_matches_fallback(seed, axis):
    u = np.random.default_rng(seed).standard_normal((6, 7, 8))
    np.testing.assert_allclose(compiled.fd4_axis(u, axis, 0.3), _pykernels.fd4_axis(u, axis, 0.3),
                               rtol=1e-13, atol=1e-13)


@given(st.integers(0, 1000))
def test_compiled_flux_matches_fallback(seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((40, 4, 4))
    du = rng.standard_normal((4, 40))
    np.testing.assert_allclose(compiled.metric_flux(a, du), _pykernels.metric_flux(a, du), rtol=1e-13)


def test_fd4_is_fourth_order():
    errs = []
    for m in (16, 32):
        h = 2 * np.pi / m
        x = np.arange(m) * h
        errs.append(np.max(np.abs(kernels.fd4_axis(np.sin(x)[None, :], 1, h)[0] - np.cos(x))))
    assert errs[0] / errs[1] > 14.0


def test_backend_reported():
    assert kernels.BACKEND in ("compiled", "python")
