import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ahlab.fields import TrigPoly
from ahlab.manifolds import PositivityError, make_compatible_torus, make_flat_torus
from ahlab.yamabe import (
    euler_lagrange_residual,
    first_eigenvalue,
    grid_geometry,
    kw_operator,
    l_operator,
    laplacian,
    minimize_qj,
    prescribable,
    q_functional,
    qj_functional,
    residual_conformal_laws,
    sphere_area,
    value_sign,
    yamabe_bound,
)

FLAT = {"type": "flat_torus", "dim": 6}
COMPAT = {"type": "compatible_torus", "dim": 6, "seed": 3, "amplitude": 0.1}


def random_factor(seed, n=6):
    rng = np.random.default_rng(seed)
    freqs = [[0] * n] + [list(rng.integers(-1, 2, n)) for _ in range(3)]
    return TrigPoly(freqs, [1.0] + list(0.1 * rng.uniform(-1, 1, 3)), [0.0] + list(0.1 * rng.uniform(-1, 1, 3)))


@settings(max_examples=10)
@given(st.integers(0, 1000))
def test_conformal_laws(seed):
    m = make_compatible_torus(6, seed, 0.1)
    u = random_factor(seed)
    pts = m.sample(4, seed)
    for r in residual_conformal_laws(m, u, pts):
        assert np.max(r) < 1e-10


def test_conformal_laws_reject_nonpositive_factor():
    with pytest.raises(PositivityError):
        residual_conformal_laws(make_flat_torus(6), TrigPoly([[0] * 6], [-1.0]), np.zeros(6))


def test_flat_laplacian_of_a_mode():
    u = TrigPoly([[1, 2, 0, 0, 0, 0]], [1.0])
    x = np.array([0.3, 0.1, 0.0, 0.0, 0.0, 0.0])
    assert laplacian(make_flat_torus(6), u, x) == pytest.approx(5 * np.cos(0.5), rel=1e-13)


def test_sphere_area_and_bound():
    assert sphere_area(1) == pytest.approx(2 * np.pi)
    assert sphere_area(3) == pytest.approx(2 * np.pi ** 2)
    assert yamabe_bound(6) == pytest.approx(24 * sphere_area(6) ** (1 / 3))


@given(st.floats(0.1, 10.0))
def test_functionals_scale_invariant(c):
    geo = grid_geometry(COMPAT, 4)
    u = 1.0 + 0.2 * np.cos(geo.points[:, 0])
    assert qj_functional(geo, c * u) == pytest.approx(qj_functional(geo, u), rel=1e-12)
    assert q_functional(geo, c * u) == pytest.approx(q_functional(geo, u), rel=1e-12)


def test_functionals_on_flat_torus():
    geo = grid_geometry(FLAT, 4)
    assert qj_functional(geo, np.ones(geo.weights.size)) == 0.0
    with pytest.raises(ZeroDivisionError):
        qj_functional(geo, np.zeros(geo.weights.size))


def test_constant_on_flat_torus_is_critical():
    geo = grid_geometry(FLAT, 4)
    res, c = euler_lagrange_residual(geo, np.ones(geo.weights.size))
    assert res == 0.0 and c == 0.0


def test_derivative_backends_agree_on_smooth_fields():
    m = {"type": "compatible_torus", "dim": 6, "seed": 1, "amplitude": 0.05}
    a = grid_geometry(m, 8, "fd4")
    b = grid_geometry(m, 8, "spectral")
    u = 1.0 + 0.1 * np.sin(a.points[:, 1] + a.points[:, 2])
    scale = np.max(np.abs(l_operator(b, u)))
    assert np.max(np.abs(l_operator(a, u) - l_operator(b, u))) < 0.05 * scale


def test_minimizer_descends_and_respects_bound():
    run = minimize_qj(COMPAT, resolution=4, max_iter=30, tol=1e-10)
    h = np.array(run.value_history)
    assert np.all(np.diff(h) <= 1e-12 * np.maximum(1.0, np.abs(h[:-1])))
    assert run.final_value <= run.bound
    assert run.minimizer.values.min() > 0
    assert run.status in ("converged", "max_iter")
    data = run.to_json(include_minimizer=True)
    assert len(data["minimizer"]) == 4 ** 6
    assert data["el_residual_pointwise"] >= 0


def test_minimizer_on_flat_torus_converges_at_once():
    run = minimize_qj(FLAT, resolution=4)
    assert run.status == "converged" and run.iterations == 0 and run.final_value == 0.0


def test_minimizer_rejects_nonpositive_start():
    with pytest.raises(PositivityError):
        minimize_qj(FLAT, resolution=4, initial=-np.ones(4 ** 6))


def test_first_eigenvalue():
    assert first_eigenvalue(FLAT, 4) == pytest.approx(0.0, abs=1e-10)
    geo = grid_geometry(COMPAT, 4)
    lam = first_eigenvalue(COMPAT, 4)
    # Rayleigh quotient of the constant bounds the ground state from above
    assert lam <= np.sum(geo.weights * geo.s_j) / np.sum(geo.weights) + 1e-12


def test_kw_operator():
    geo = grid_geometry(FLAT, 4)
    u = 1.0 + 0.5 * np.cos(geo.points[:, 0])
    np.testing.assert_allclose(kw_operator(geo, u, 0.0, 0.0, 2.0).values, 2.0 * u)
    np.testing.assert_allclose(kw_operator(geo, u, 1.0, 0.0, 3.0).values, 3.0)
    with pytest.raises(PositivityError):
        kw_operator(geo, -u, 1.0, 1.0, 0.0)


def test_prescribable_and_sign():
    assert prescribable(np.array([-1.0, 2.0]), -1)
    assert not prescribable(np.array([1.0, 2.0]), -1)
    assert prescribable(np.zeros(3), 0)
    assert prescribable(np.array([-1.0, 1.0]), 0)
    assert not prescribable(np.array([0.0, 1.0]), 0)
    assert prescribable(np.array([-1.0, 0.5]), 1)
    assert not prescribable(np.array([-1.0, 0.0]), 1)
    assert [value_sign(x) for x in (-1.0, 1e-4, 2.0)] == [-1, 0, 1]
