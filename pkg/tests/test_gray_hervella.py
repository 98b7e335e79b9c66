import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ahlab.fields import TrigPoly
from ahlab.gray_hervella import (
    CLASSES,
    UnsupportedQuadratureError,
    classify,
    containment_constants,
    sign_crosscheck,
)
from ahlab.manifolds import (
    make_almost_kahler_torus,
    make_cayley_s6,
    make_compatible_torus,
    make_conformal,
    make_flat_torus,
)


def verdicts(m):
    return classify(m, num_points=16, quadrature_resolution=4).verdicts


def test_cayley_sphere_is_nearly_kahler_only():
    v = verdicts(make_cayley_s6())
    assert {c for c in CLASSES if v[c]} == {"w1", "g1"}


def test_almost_kahler_torus():
    v = verdicts(make_almost_kahler_torus(6, 1, 0.1))
    assert {c for c in CLASSES if v[c]} == {"w2", "w2w3"}


def test_constant_j_torus_is_hermitian_not_kahler():
    v = verdicts(make_compatible_torus(6, 1, 0.1))
    assert {c for c in CLASSES if v[c]} == {"hermitian", "g1"}


def test_conformally_flat_kahler_is_locally_conformally_kahler():
    u = TrigPoly([[0] * 6, [1, 0, 0, 0, 0, 0], [0, 1, 1, 0, 0, 0]], [1.0, 0.2, 0.1])
    v = verdicts(make_conformal(make_flat_torus(6), u))
    assert v["w4"] and v["hermitian"] and v["g1"]
    assert not v["kahler"] and not v["w2"] and not v["w1"]


@settings(max_examples=10)
@given(st.integers(0, 1000), st.booleans())
def test_kahler_verdict_implies_all_others(seed, ak):
    m = make_almost_kahler_torus(6, seed, 1e-12) if ak else make_compatible_torus(6, seed, 1e-12)
    v = classify(m, num_points=4, tol=1e-8, quadrature_resolution=None).verdicts
    if v["kahler"]:
        assert all(v.values())


def test_containment_constants_are_at_least_one():
    assert all(c >= 1.0 for c in containment_constants(6).values())


def test_sign_crosscheck_on_torus_and_chart():
    m = make_almost_kahler_torus(6, 1, 0.1)
    report = classify(m, num_points=8, quadrature_resolution=4)
    assert report.integral_s_j < 0
    assert [d["level"] for d in sign_crosscheck(report, m)] == ["INFO"]
    s6 = make_cayley_s6()
    r6 = classify(s6, num_points=8)
    assert r6.integral_s_j is None
    assert sign_crosscheck(r6, s6)[0]["level"] == "INFO"
    with pytest.raises(UnsupportedQuadratureError):
        sign_crosscheck(r6, s6, strict=True)


def test_sign_crosscheck_warns_on_inconsistency():
    m = make_almost_kahler_torus(6, 1, 0.1)
    report = classify(m, num_points=8, quadrature_resolution=4)
    report.integral_s_j = 1.0
    report.max_s_j = 1.0
    checks = {d["check"] for d in sign_crosscheck(report, m) if d["level"] == "WARN"}
    assert checks == {"w2w3_integral", "w2w3_pointwise"}


def test_bad_point_count():
    with pytest.raises(ValueError):
        classify(make_flat_torus(6), num_points=0)
