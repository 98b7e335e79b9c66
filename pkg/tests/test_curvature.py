import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ahlab.curvature import (
    adapted_frame,
    curvature_pack,
    kulkarni_nomizu,
    nijenhuis,
    s_j_holomorphic_frame,
    scalar_fields,
    weyl_identity_residual,
)
from ahlab.manifolds import (
    make_almost_kahler_torus,
    make_cayley_s6,
    make_compatible_torus,
    make_flat_torus,
    round_sphere,
)

seeds = st.integers(0, 10_000)


def fd_riemann(m, x, h1=1e-4, h2=1e-3):
    """Riemann tensor from metric values only: nested central differences, no jets."""
    n = m.dim

    def g(p):
        return m.metric_jet(p[None], 0).val[0]

    def gamma(p):
        dg = np.array([(g(p + h1 * e) - g(p - h1 * e)) / (2 * h1) for e in np.eye(n)])
        first = 0.5 * (dg.transpose(1, 0, 2) + dg.transpose(1, 2, 0) - dg)  # [k, i, j] -> Gamma_kij lowered
        return np.einsum("lk,kij->lij", np.linalg.inv(g(p)), first)

    G = gamma(x)
    dG = np.array([(gamma(x + h2 * e) - gamma(x - h2 * e)) / (2 * h2) for e in np.eye(n)])
    # R^l_{kij} for R(d_i, d_j) d_k with R(X,Y)Z = nabla_[X,Y] Z - [nabla_X, nabla_Y] Z
    R = -(np.einsum("iljk->lkij", dG) - np.einsum("jlik->lkij", dG)
          + np.einsum("lim,mjk->lkij", G, G) - np.einsum("ljm,mik->lkij", G, G))
    # riem[i, j, k, l] = g(R(d_i, d_j) d_k, d_l)
    return np.einsum("mkij,ml->ijkl", R, g(x))


@pytest.mark.parametrize("make", [lambda: make_compatible_torus(6, 4, 0.15),
                                  lambda: make_almost_kahler_torus(6, 2, 0.15)])
def test_riemann_matches_difference_oracle(make):
    m = make()
    x = m.sample(1, 3)[0]
    got = curvature_pack(m, x).riem
    want = fd_riemann(m, x)
    assert np.max(np.abs(got - want)) < 1e-5 * max(1.0, np.max(np.abs(want)))


def test_round_sphere_is_unit_constant_curvature():
    m = round_sphere(6)
    x = m.sample(3, 0)
    pack = curvature_pack(m, x)
    g = pack.metric
    want = np.einsum("pik,pjl->pijkl", g, g) - np.einsum("pjk,pil->pijkl", g, g)
    np.testing.assert_allclose(pack.riem, want, atol=1e-12)


@given(seeds)
def test_algebraic_symmetries(seed):
    m = make_almost_kahler_torus(6, seed, 0.2) if seed % 2 else make_compatible_torus(6, seed, 0.2)
    pack = curvature_pack(m, m.sample(4, seed))
    R = pack.riem
    scale = max(1.0, np.max(np.abs(R)))
    assert np.max(np.abs(R + R.transpose(0, 2, 1, 3, 4))) < 1e-12 * scale
    assert np.max(np.abs(R + R.transpose(0, 1, 2, 4, 3))) < 1e-12 * scale
    assert np.max(np.abs(R - R.transpose(0, 3, 4, 1, 2))) < 1e-12 * scale
    bianchi = R + R.transpose(0, 2, 3, 1, 4) + R.transpose(0, 3, 1, 2, 4)
    assert np.max(np.abs(bianchi)) < 1e-12 * scale
    assert np.max(np.abs(pack.ric - pack.ric.transpose(0, 2, 1))) < 1e-12 * scale
    np.testing.assert_allclose(pack.s_j, pack.scalar - pack.star_scalar)


@given(seeds)
def test_weyl_is_trace_free_and_identity_holds(seed):
    m = make_compatible_torus(6, seed, 0.15)
    pts = m.sample(5, seed)
    pack = curvature_pack(m, pts)
    trace = np.einsum("pac,pabcd->pbd", pack.metric_inv, pack.weyl)
    assert np.max(np.abs(trace)) < 1e-11
    assert np.max(weyl_identity_residual(m, pts)) < 1e-10


def test_kulkarni_nomizu_of_metric_is_twice_constant_curvature():
    g = np.eye(4)[None]
    gg = kulkarni_nomizu(g, g)
    want = 2 * (np.einsum("pik,pjl->pijkl", g, g) - np.einsum("pjk,pil->pijkl", g, g))
    np.testing.assert_array_equal(gg, want)


def test_cayley_sphere_star_ricci_is_metric():
    m = make_cayley_s6()
    pack = curvature_pack(m, m.sample(5, 2))
    np.testing.assert_allclose(pack.star_ric, pack.metric, atol=1e-12)
    np.testing.assert_allclose(pack.ric, 5 * pack.metric, atol=1e-12)


def test_flat_torus_vanishes():
    m = make_flat_torus(6)
    pack = curvature_pack(m, m.sample(10, 0))
    for name in ("riem", "nabla_omega", "nijenhuis", "rho_j", "weyl"):
        assert np.max(np.abs(getattr(pack, name))) == 0.0


@given(seeds, st.sampled_from([None, (5, 4, 3, 2, 1, 0), (2, 0, 4, 1, 3, 5)]))
def test_frame_formula_independent_of_frame(seed, order):
    m = make_almost_kahler_torus(6, seed, 0.2)
    pts = m.sample(3, seed)
    frame = s_j_holomorphic_frame(m, pts, order)
    np.testing.assert_allclose(frame, scalar_fields(m, pts)["s_j"], atol=1e-10)


def test_adapted_frame_is_orthonormal_and_paired():
    m = make_almost_kahler_torus(6, 1, 0.2)
    g, J = m.fields(m.sample(1, 0), 0, 0)
    E = adapted_frame(g.val[0], J.val[0])
    np.testing.assert_allclose(E.T @ g.val[0] @ E, np.eye(6), atol=1e-12)
    np.testing.assert_allclose(J.val[0] @ E[:, 0::2], E[:, 1::2], atol=1e-12)


def test_nijenhuis_vanishes_for_constant_j_and_not_on_the_sphere():
    m = make_compatible_torus(6, 1, 0.1)
    assert np.max(np.abs(nijenhuis(m, m.sample(5, 0)))) == 0.0
    s6 = make_cayley_s6()
    assert np.max(np.abs(nijenhuis(s6, s6.sample(5, 0)))) > 0.1


def test_single_point_returns_unbatched_pack():
    m = make_cayley_s6()
    pack = curvature_pack(m, m.sample(1, 0)[0])
    assert pack.riem.shape == (6, 6, 6, 6)
    assert pack.scalars()["s_j"] == pytest.approx(24.0, abs=1e-10)


def test_chunked_and_threaded_evaluation_agree():
    m = make_compatible_torus(6, 2, 0.1)
    pts = m.sample(50, 0)
    a = scalar_fields(m, pts)
    b = scalar_fields(m, pts, chunk=7, threads=3)
    np.testing.assert_array_equal(a["s_j"], b["s_j"])
