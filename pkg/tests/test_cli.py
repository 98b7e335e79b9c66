import io
import json

import pytest

from ahlab.cli import EXIT_CHECK, EXIT_MANIFEST, EXIT_NUMERIC, EXIT_OK, run


def call(argv):
    out = io.StringIO()
    code = run(argv, out)
    return code, json.loads(out.getvalue()) if "--pretty" not in argv else out.getvalue()


@pytest.fixture
def manifest(tmp_path):
    def write(spec, name="m.json"):
        path = tmp_path / name
        path.write_text(json.dumps(spec) if not isinstance(spec, str) else spec)
        return str(path)
    return write


def test_curvature_on_cayley_sphere(manifest):
    code, rep = call(["curvature", "--manifest", manifest({"type": "cayley_s6", "dim": 6}), "--points", "5"])
    assert code == EXIT_OK
    for rec in rep["results"]["points"]:
        assert rec["scalar"] == pytest.approx(30.0, abs=1e-9)
        assert rec["star_scalar"] == pytest.approx(6.0, abs=1e-9)
        assert rec["s_j"] == pytest.approx(24.0, abs=1e-9)
    assert set(rep) >= {"command", "version", "seed", "manifest", "results", "diagnostics", "wall_time"}


def test_classify_flat_torus(manifest):
    code, rep = call(["classify", "--manifest", manifest({"type": "flat_torus", "dim": 6}),
                      "--quadrature-resolution", "4"])
    assert code == EXIT_OK and rep["results"]["verdicts"]["kahler"]


def test_classify_strict_on_chart_is_a_module_error(manifest):
    path = manifest({"type": "cayley_s6", "dim": 6})
    code, rep = call(["classify", "--manifest", path, "--points", "4"])
    assert code == EXIT_OK and rep["diagnostics"][0]["level"] == "INFO"
    code, rep = call(["classify", "--manifest", path, "--points", "4", "--strict"])
    assert code == EXIT_NUMERIC and rep["diagnostics"][-1]["error"] == "UnsupportedQuadratureError"


def test_conformal_check(manifest):
    code, rep = call(["conformal-check", "--manifest",
                      manifest({"type": "compatible_torus", "dim": 6, "seed": 2}), "--points", "5"])
    assert code == EXIT_OK and rep["results"]["s_j_law"] < 1e-7


def test_bubble_cn_and_report_file(tmp_path):
    target = tmp_path / "rep.json"
    code, rep = call(["bubble", "--n", "6", "--check", "cn", "--report", str(target)])
    assert code == EXIT_OK
    assert rep["results"]["data"]["quadrature"] == pytest.approx(2 / 3, rel=1e-10)
    assert json.loads(target.read_text())["check"] == "cn"


def test_yamabe_and_jvary_critical(manifest):
    code, rep = call(["yamabe", "--manifest", manifest({"type": "flat_torus", "dim": 6}),
                      "--resolution", "4", "--eigenvalue"])
    assert code == EXIT_OK and rep["results"]["final_value"] == 0.0
    code, rep = call(["jvary", "--manifest", manifest({"type": "cayley_s6", "dim": 6}),
                      "--mode", "critical", "--points", "4"])
    assert code == EXIT_OK and rep["results"]["critical"]


def test_malformed_manifest_exits_2(manifest):
    for spec in ("{broken", {"type": "nope"}):
        code, rep = call(["curvature", "--manifest", manifest(spec)])
        assert code == EXIT_MANIFEST
        assert rep["diagnostics"][-1]["check"] == "manifest"
    code, _ = call(["curvature", "--manifest", "/nonexistent/m.json"])
    assert code == EXIT_MANIFEST


def test_numerical_failure_exits_3(manifest):
    code, rep = call(["curvature", "--manifest",
                      manifest({"type": "compatible_torus", "dim": 6, "amplitude": 50.0})])
    assert code == EXIT_NUMERIC
    assert rep["diagnostics"][-1]["check"] == "numerical"


def test_failed_check_exits_1(manifest):
    code, _ = call(["conformal-check", "--manifest",
                    manifest({"type": "compatible_torus", "dim": 6, "seed": 2}), "--points", "5",
                    "--tol", "0"])
    assert code == EXIT_CHECK


def test_identical_inputs_identical_payload(manifest):
    path = manifest({"type": "almost_kahler_torus", "dim": 6, "seed": 4})
    _, a = call(["curvature", "--manifest", path, "--points", "6", "--seed", "3"])
    _, b = call(["curvature", "--manifest", path, "--points", "6", "--seed", "3"])
    assert a["results"] == b["results"]


def test_pretty_renders_the_same_data(manifest):
    code, text = call(["bubble", "--check", "cn", "--pretty"])
    assert code == EXIT_OK and "closed_form" in text


def test_unknown_subcommand():
    with pytest.raises(SystemExit):
        run(["teleport"], io.StringIO())
