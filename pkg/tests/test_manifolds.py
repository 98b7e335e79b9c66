import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ahlab.fields import Coord, TrigPoly
from ahlab.manifolds import (
    ChartDomainError,
    GeneratorError,
    ManifestError,
    PositivityError,
    PullbackError,
    from_manifest,
    load_manifest,
    make_almost_kahler_torus,
    make_cayley_s6,
    make_compatible_torus,
    make_conformal,
    make_flat_torus,
    make_pullback,
    random_shears,
    round_sphere,
    shear_maps,
    structure_residuals,
)

seeds = st.integers(0, 10_000)


def check_structure(m, count=32, seed=0):
    r = structure_residuals(m, m.sample(count, seed))
    assert r["symmetry"] <= 1e-12
    assert r["j_squared"] <= 1e-12
    assert r["compatibility"] <= 1e-12
    assert r["min_cholesky_pivot"] > 0


@given(seeds)
def test_compatible_torus_is_almost_hermitian(seed):
    check_structure(make_compatible_torus(6, seed, 0.1), seed=seed)


@given(seeds)
def test_almost_kahler_torus_is_almost_hermitian(seed):
    check_structure(make_almost_kahler_torus(6, seed, 0.2), seed=seed)


@pytest.mark.parametrize("make", [lambda: make_flat_torus(6), make_cayley_s6, lambda: round_sphere(2),
                                  lambda: make_flat_torus(4)])
def test_fixed_generators_are_almost_hermitian(make):
    check_structure(make())


def test_pullback_and_conformal_are_almost_hermitian():
    base = make_almost_kahler_torus(6, 3, 0.1)
    phi, inv = shear_maps(6, random_shears(6, 4, 0.2))
    check_structure(make_pullback(base, phi, inv))
    u = TrigPoly([[0] * 6, [0, 1, 0, 0, 0, 1]], [1.0, 0.3], [0.0, 0.1])
    check_structure(make_conformal(base, u))


def test_generators_are_deterministic():
    a = make_compatible_torus(6, 5, 0.1)
    b = make_compatible_torus(6, 5, 0.1)
    pts = a.sample(8, 1)
    np.testing.assert_array_equal(a.metric_jet(pts, 2).d2, b.metric_jet(pts, 2).d2)


def test_large_amplitude_is_rejected():
    with pytest.raises(GeneratorError):
        make_compatible_torus(6, 0, 5.0)


def test_sphere_chart_domain():
    m = make_cayley_s6()
    with pytest.raises(ChartDomainError):
        m.metric_jet(np.full((1, 6), 0.5), 0)


def test_conformal_needs_positive_factor():
    m = make_conformal(make_flat_torus(6), TrigPoly([[0] * 6], [-1.0]))
    with pytest.raises(PositivityError):
        m.metric_jet(np.zeros((1, 6)), 0)


def test_pullback_rejects_wrong_inverse_and_singular_map():
    base = make_flat_torus(6)
    phi, inv = shear_maps(6, random_shears(6, 1, 0.2))
    with pytest.raises(PullbackError):
        make_pullback(base, phi, [Coord(i) for i in range(6)])
    collapse = [Coord(0)] * 6
    m = make_pullback(base, collapse)
    with pytest.raises(PullbackError):
        m.metric_jet(np.zeros((1, 6)), 0)


def test_shear_must_not_depend_on_its_target():
    with pytest.raises(ManifestError):
        shear_maps(6, [(0, TrigPoly([[1, 0, 0, 0, 0, 0]], [0.1]))])


@pytest.mark.parametrize("spec", [
    {"type": "flat_torus", "dim": 6},
    {"type": "compatible_torus", "dim": 6, "seed": 3, "amplitude": 0.1},
    {"type": "almost_kahler_torus", "dim": 6, "seed": 2, "amplitude": 0.1},
    {"type": "cayley_s6", "dim": 6},
    {"type": "conformal", "dim": 6, "base": {"type": "flat_torus", "dim": 6},
     "factor": [{"freq": [0] * 6, "cos": 1.0}, {"freq": [1, 0, 0, 0, 0, 0], "cos": 0.2}]},
    {"type": "pullback", "dim": 6, "base": {"type": "compatible_torus", "dim": 6, "seed": 1},
     "shear_seed": 4, "amplitude": 0.2},
])
def test_manifest_round_trip(spec, tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps(spec))
    m = from_manifest(load_manifest(path))
    again = from_manifest(json.loads(json.dumps(m.manifest)))
    pts = m.sample(4, 0)
    np.testing.assert_array_equal(m.metric_jet(pts, 1).d1, again.metric_jet(pts, 1).d1)
    np.testing.assert_array_equal(m.acs_jet(pts, 1).val, again.acs_jet(pts, 1).val)


@pytest.mark.parametrize("spec", [
    {"dim": 6},
    {"type": "klein_bottle"},
    {"type": "conformal", "base": {"type": "flat_torus"}},
    {"type": "cayley_s6", "dim": 4},
    {"type": "pullback", "base": {"type": "flat_torus"}},
    [1, 2],
])
def test_malformed_manifests(spec):
    with pytest.raises(ManifestError):
        from_manifest(spec)


def test_invalid_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ManifestError):
        load_manifest(path)
