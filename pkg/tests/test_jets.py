import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from ahlab.fields import Composed, Coord, Polynomial, TrigPoly, cos, eval_jet, exp, sin, sqrt
from ahlab.jets import Jet, coordinate_jets, constant_jet

coords = st.lists(st.floats(-1.5, 1.5), min_size=3, max_size=3)


def central_derivatives(f, x, h=1e-3):
    """Gradient and Hessian of a scalar callable by central differences."""
    n = len(x)
    grad = np.zeros(n)
    hess = np.zeros((n, n))
    E = np.eye(n) * h
    for i in range(n):
        grad[i] = (f(x + E[i]) - f(x - E[i])) / (2 * h)
        for j in range(n):
            hess[i, j] = (
                f(x + E[i] + E[j]) - f(x + E[i] - E[j]) - f(x - E[i] + E[j]) + f(x - E[i] - E[j])
            ) / (4 * h * h)
    return grad, hess


def composite():
    x, y, z = Coord(0), Coord(1), Coord(2)
    return exp(sin(x) * y) / (2.0 + cos(z)) + sqrt(1.5 + x * x) * (y - z) ** 3 + 1.0 / (3.0 + y * y)


@given(coords)
def test_composite_matches_finite_differences(p):
    x = np.array(p)
    e = composite()
    jet = eval_jet(e, x, 2)
    grad, hess = central_derivatives(lambda q: float(e(q[None])[0]), x)
    np.testing.assert_allclose(jet.d1[0], grad, rtol=1e-5, atol=2e-5)
    np.testing.assert_allclose(jet.d2[0], hess, rtol=1e-4, atol=2e-4)


@given(coords)
def test_third_order_matches_differences_of_hessian(p):
    x = np.array(p)
    e = composite()
    h = 1e-4
    d3 = eval_jet(e, x, 3).d3[0]
    for k in range(3):
        dk = np.zeros(3)
        dk[k] = h
        fd = (eval_jet(e, x + dk, 2).d2[0] - eval_jet(e, x - dk, 2).d2[0]) / (2 * h)
        np.testing.assert_allclose(d3[k], fd, rtol=1e-5, atol=1e-5)


@given(coords)
def test_hessian_and_third_order_are_symmetric(p):
    jet = eval_jet(composite(), np.array(p), 3)
    H = jet.d2[0]
    T = jet.d3[0]
    assert np.array_equal(H, H.T) or np.max(np.abs(H - H.T)) < 1e-13
    for perm in [(1, 0, 2), (0, 2, 1), (2, 1, 0)]:
        assert np.max(np.abs(T - T.transpose(perm))) < 1e-12


def test_trig_poly_requires_integer_frequencies():
    with pytest.raises(ValueError):
        TrigPoly([[0.5, 0, 0]], [1.0])


def test_trig_poly_is_periodic():
    f = TrigPoly([[1, -2, 0], [0, 1, 3]], [0.3, -0.2], [0.1, 0.4])
    x = np.array([[0.3, 1.1, -0.4]])
    shift = 2 * np.pi * np.array([[1, -1, 2]])
    assert abs(f(x)[0] - f(x + shift)[0]) < 1e-12


def test_polynomial_jet_exact():
    p = Polynomial([[2, 0, 0], [1, 1, 0], [0, 0, 3]], [1.0, -2.0, 0.5])
    jet = eval_jet(p, [1.0, 2.0, -1.0], 2)
    assert jet.val[0] == pytest.approx(1 - 4 - 0.5)
    np.testing.assert_allclose(jet.d1[0], [2 * 1 - 2 * 2, -2 * 1, 1.5])
    np.testing.assert_allclose(jet.d2[0], [[2, -2, 0], [-2, 0, 0], [0, 0, -3]])


def test_composition_chain_rule():
    inner = [Coord(0) + 0.2 * sin(Coord(1)), Coord(1) * Coord(2), exp(Coord(2) * 0.3)]
    outer = TrigPoly([[1, 1, 0], [0, 2, -1]], [0.7, 0.2], [0.1, -0.5])
    e = Composed(outer, inner)
    x = np.array([0.2, -0.7, 0.9])
    jet = eval_jet(e, x, 2)
    grad, hess = central_derivatives(lambda q: float(e(q[None])[0]), x)
    np.testing.assert_allclose(jet.d1[0], grad, atol=1e-6)
    np.testing.assert_allclose(jet.d2[0], hess, atol=1e-4)


@given(st.integers(0, 2 ** 31 - 1), st.floats(0.1, 4.0))
def test_matrix_exponential_matches_scipy(seed, scale):
    rng = np.random.default_rng(seed)
    A = scale * rng.standard_normal((2, 4, 4))
    jet = constant_jet(A, 3, 1)
    E = jet.expm().val
    for k in range(2):
        np.testing.assert_allclose(E[k], expm(A[k]), rtol=1e-11, atol=1e-11 * np.abs(expm(A[k])).max())


def test_matrix_exponential_derivative():
    x = np.array([[0.3, -0.4]])
    X = coordinate_jets(x, 1)
    B = np.array([[0.0, 1.0, 0.5], [-1.0, 0.2, 0.0], [0.3, 0.0, -0.1]])
    C = np.array([[0.1, 0.0, 0.0], [0.4, 0.0, 1.0], [0.0, -0.6, 0.2]])
    M = X[0].map_values(lambda a, lead: a[..., None, None] * B) + X[1].map_values(
        lambda a, lead: a[..., None, None] * C
    )
    d1 = M.expm().d1[0]
    h = 1e-6
    for i, D in enumerate((B, C)):
        base = x[0, 0] * B + x[0, 1] * C
        fd = (expm(base + h * D) - expm(base - h * D)) / (2 * h)
        np.testing.assert_allclose(d1[i], fd, atol=1e-8)


def test_matrix_inverse_jet():
    x = np.array([[0.2, 0.5]])
    X = coordinate_jets(x, 2)
    a = X[0] * X[1] + 2.0
    b = X[0].sin()
    M = Jet.stack([a, b, b, X[1] * X[1] + 3.0], shape=(2, 2))
    inv = M.inv()
    prod = M @ inv
    np.testing.assert_allclose(prod.val[0], np.eye(2), atol=1e-14)
    assert np.max(np.abs(prod.d1)) < 1e-13
    assert np.max(np.abs(prod.d2)) < 1e-12
