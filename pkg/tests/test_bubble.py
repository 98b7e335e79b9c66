from fractions import Fraction
from math import factorial

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ahlab.bubble import (
    BubbleProfile,
    bubble_pde_residual,
    bubble_rayleigh,
    cn_check,
    cn_closed_form,
    lemma_u_rate,
    local_slopes,
    predicted_rate,
    run_check,
    sobolev_target,
    weighted_mass,
)
from ahlab.yamabe import sphere_area, yamabe_bound


def exact_cn(n):
    """Exact rational form of the closed expression, independent of float code."""
    m = n // 2
    return Fraction((m * m - 2 * m - 1) * factorial(m - 1) ** 2, (m - 1) * (m - 2) * factorial(2 * m - 3))


def test_cn_exact_values():
    # frozen from the rational oracle above
    assert [exact_cn(n) for n in (6, 8, 10, 12)] == [
        Fraction(2, 3), Fraction(7, 20), Fraction(2, 15), Fraction(23, 504)]
    for n in (6, 8, 10, 12):
        assert cn_closed_form(n) == pytest.approx(float(exact_cn(n)), rel=1e-15)


@pytest.mark.parametrize("n", [6, 8, 10, 12, 14])
def test_cn_quadrature_matches_closed_form(n):
    q, c = cn_check(n)
    assert abs(q - c) <= 1e-10 * abs(c)


def test_cn_rejects_odd_dimension():
    with pytest.raises(ValueError):
        cn_check(7)


def test_radial_derivatives_match_differences():
    prof = BubbleProfile(6, 0.7)
    r = np.linspace(0.1, 3.0, 7)
    h = 1e-5
    fd1 = (prof.radial(r + h) - prof.radial(r - h)) / (2 * h)
    fd2 = (prof.radial(r + h) - 2 * prof.radial(r) + prof.radial(r - h)) / h ** 2
    np.testing.assert_allclose(prof.radial(r, 1), fd1, rtol=1e-8)
    np.testing.assert_allclose(prof.radial(r, 2), fd2, rtol=1e-4)


@given(st.integers(3, 12), st.floats(1e-3, 1e3))
def test_jet_agrees_with_radial_form(n, alpha):
    prof = BubbleProfile(n, alpha)
    x = np.zeros((1, n))
    x[0, 0] = alpha * 0.7
    np.testing.assert_allclose(prof.jet(x, 0).val, prof.radial(alpha * 0.7), rtol=1e-12)


@pytest.mark.parametrize("n", [3, 6, 10])
@pytest.mark.parametrize("alpha", [1e-3, 1.0, 50.0])
def test_profile_solves_the_minus_equation(n, alpha):
    r_plus, r_minus = bubble_pde_residual(n, alpha)
    assert r_minus < 1e-9
    assert r_plus > 1.0


def test_pde_residual_accepts_points():
    pts = np.random.default_rng(0).normal(size=(10, 6))
    assert bubble_pde_residual(6, 1.0, pts)[1] < 1e-10
    with pytest.raises(ValueError):
        bubble_pde_residual(6, 1.0, np.zeros((3, 5)))


@pytest.mark.parametrize("n", [5, 6, 8])
@pytest.mark.parametrize("alpha", [0.1, 1.0, 10.0])
def test_rayleigh_quotient_is_sobolev_constant(n, alpha):
    assert bubble_rayleigh(n, alpha=alpha) == pytest.approx(sobolev_target(n), rel=1e-8)


def test_sobolev_target_and_bound():
    n = 6
    assert sobolev_target(n) / yamabe_bound(n) == pytest.approx((n - 1) / (n - 2), rel=1e-14)
    assert sphere_area(2) == pytest.approx(4 * np.pi, rel=1e-15)


def test_rayleigh_tail_guard():
    from ahlab.quadrature import QuadratureError
    with pytest.raises(QuadratureError):
        bubble_rayleigh(5, quadrature_radius=10.0)


def test_predicted_regimes():
    assert predicted_rate(10, 0) == (2.0, "power")
    assert predicted_rate(10, 6) == (8.0, "log")
    assert predicted_rate(10, 7) == (8.0, "saturated")


@pytest.mark.parametrize("n,k", [(10, 0), (10, 7), (8, 2)])
def test_rates_match_prediction(n, k):
    expo, regime = predicted_rate(n, k)
    tol = 0.1 if regime == "log" else 1e-3
    assert lemma_u_rate(n, k) == pytest.approx(expo, abs=tol)


def test_log_regime_slopes_drift_toward_the_exponent():
    s = local_slopes(10, 6, np.geomspace(1e-4, 1e-9, 6))
    assert np.all(np.diff(s) > 0)
    assert np.all(s < 8.0)


def test_weighted_mass_small_alpha_scaling():
    # exact: int_0^inf r^{k+n-1} u^2 dr = alpha^{k+2} int_0^inf t^{k+n-1} (1+t^2)^{2-n} dt
    a = 1e-6
    ratio = weighted_mass(10, 0, a) / weighted_mass(10, 0, a / 2)
    assert ratio == pytest.approx(4.0, rel=1e-6)
    with pytest.raises(ValueError):
        weighted_mass(6, -7, 0.1)


@pytest.mark.parametrize("check", ["pde", "rayleigh", "rates", "cn"])
def test_run_check_reports(check):
    rep = run_check(check, 6).to_json()
    assert rep["check"] == check and rep["n"] == 6
    with pytest.raises(ValueError):
        run_check("nope", 6)
