"""The acceptance battery: sixteen numbered checks with fixed seeds and tolerances.

Each ``criterion_k`` returns a :class:`CriterionResult`; :func:`run_all` runs a
selection in order.  Minimizer runs are memoized so checks that share a
manifold and grid do not repeat the optimization.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import bubble, jvariation
from .curvature import s_j_holomorphic_frame, scalar_fields, weyl_identity_residual
from .fields import TrigPoly
from .gray_hervella import classify
from .grid import lattice_points
from .manifolds import (
    from_manifest,
    make_almost_kahler_torus,
    make_cayley_s6,
    make_compatible_torus,
    make_conformal,
    make_flat_torus,
    make_pullback,
    random_shears,
    round_sphere,
    shear_maps,
)
from .yamabe import (
    first_eigenvalue,
    grid_geometry,
    minimize_qj,
    residual_conformal_laws,
    sphere_area,
    value_sign,
    yamabe_bound,
)


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] criterion {self.number:2d}: {self.name} ({self.wall_time:.1f} s)"

    def to_json(self) -> dict:
        return asdict(self)


def _timed(number, name):
    def wrap(fn):
        def run():
            t0 = time.perf_counter()
            passed, details = fn()
            return CriterionResult(number, name, bool(passed), details, time.perf_counter() - t0)

        run.number = number
        run.title = name
        return run

    return wrap


# -- shared fixtures -------------------------------------------------------------

CONFORMAL_FLAT = {
    "type": "conformal",
    "dim": 6,
    "base": {"type": "flat_torus", "dim": 6},
    "factor": [{"freq": [0] * 6, "cos": 1.0}, {"freq": [1, 0, 0, 0, 0, 0], "cos": 0.2}],
}
SIGN_TORI = (
    [{"type": "compatible_torus", "dim": 6, "seed": s, "amplitude": 0.1} for s in (1, 2, 3)]
    + [{"type": "almost_kahler_torus", "dim": 6, "seed": s, "amplitude": 0.1} for s in (1, 2)]
)
SIGN_RESOLUTION = 6
EXACT_RESOLUTION = 8
EXACT_BACKEND = "spectral"
DY_MANIFEST = {"type": "compatible_torus", "dim": 6, "seed": 1, "amplitude": 0.1}
DY_DEFORMATION_SEED = 7
DY_RESOLUTION = 6
DY_STEP = 0.02
DY_MAX_ITER = 2000
DY_TOL = 1e-8

_RUNS: dict = {}


def minimizer_run(manifest, resolution, backend="fd4", max_iter=3000, tol=1e-6):
    key = (json.dumps(manifest, sort_keys=True), resolution, backend, max_iter, tol)
    if key not in _RUNS:
        _RUNS[key] = minimize_qj(manifest, resolution, max_iter=max_iter, tol=tol, backend=backend)
    return _RUNS[key]


def all_generators():
    """One instance of every manifold constructor."""
    base = make_compatible_torus(6, 1, 0.1)
    phi, inv = shear_maps(6, random_shears(6, 3, 0.2))
    u = TrigPoly([[0] * 6, [1, 0, 0, 0, 0, 0], [0, 1, 1, 0, 0, 0]], [1.0, 0.2, 0.0], [0.0, 0.0, 0.1])
    return [
        make_flat_torus(6),
        base,
        make_almost_kahler_torus(6, 1, 0.1),
        make_cayley_s6(),
        round_sphere(2),
        make_conformal(base, u),
        make_pullback(make_almost_kahler_torus(6, 2, 0.1), phi, inv),
    ]


# -- curvature -------------------------------------------------------------------


@_timed(1, "S^6 golden values R = 30, R* = 6, S_J = 24")
def criterion_1():
    t0 = time.perf_counter()
    m = make_cayley_s6()
    d = scalar_fields(m, m.sample(20, 0))
    err = {
        "scalar": float(np.max(np.abs(d["scalar"] - 30.0))),
        "star_scalar": float(np.max(np.abs(d["star_scalar"] - 6.0))),
        "s_j": float(np.max(np.abs(d["s_j"] - 24.0))),
    }
    elapsed = time.perf_counter() - t0
    return max(err.values()) <= 1e-8 and elapsed < 10.0, {"max_errors": err, "seconds": elapsed}


@_timed(2, "flat torus S_J = 0")
def criterion_2():
    m = make_flat_torus(6)
    s = scalar_fields(m, m.sample(100, 0))["s_j"]
    worst = float(np.max(np.abs(s)))
    return worst <= 1e-12, {"max_abs_s_j": worst}


@_timed(3, "conformal laws for R, R* and S_J")
def criterion_3():
    t0 = time.perf_counter()
    u = TrigPoly(
        [[0] * 6, [1, 0, 0, 0, 0, 0], [0, 1, 0, 0, -1, 0], [0, 0, 2, 0, 0, 1]],
        [1.0, 0.2, 0.0, 0.05],
        [0.0, 0.0, 0.1, 0.05],
    )
    out = {}
    for m in (make_flat_torus(6), make_compatible_torus(6, 1, 0.1), make_compatible_torus(6, 2, 0.1)):
        r = residual_conformal_laws(m, u, m.sample(50, 0))
        out[m.label] = [float(np.max(x)) for x in r]
    elapsed = time.perf_counter() - t0
    worst = max(max(v) for v in out.values())
    return worst <= 1e-7 and elapsed < 60.0, {"max_residuals": out, "seconds": elapsed}


@_timed(4, "Weyl identity (n-1)R* - R = 2(n-1) W(omega, omega)")
def criterion_4():
    out = {}
    for m in [make_compatible_torus(6, s, 0.1) for s in range(1, 6)] + [make_cayley_s6()]:
        out[m.label] = float(np.max(weyl_identity_residual(m, m.sample(50, 0))))
    return max(out.values()) <= 1e-7, {"max_residuals": out}


@_timed(5, "holomorphic frame formula equals R - R*")
def criterion_5():
    out = {}
    for m in all_generators():
        pts = m.sample(20, 0)
        frame = s_j_holomorphic_frame(m, pts)
        direct = scalar_fields(m, pts)["s_j"]
        out[m.label] = float(np.max(np.abs(frame - direct)))
    return max(out.values()) <= 1e-8, {"max_differences": out}


# -- classification ----------------------------------------------------------------


@_timed(6, "Gray-Hervella verdicts of the generators")
def criterion_6():
    flat = classify(make_flat_torus(6), 32, quadrature_resolution=4)
    s6 = classify(make_cayley_s6(), 32)
    comp = classify(make_compatible_torus(6, 1, 0.1), 32, quadrature_resolution=4)
    ak = classify(make_almost_kahler_torus(6, 1, 0.1), 32, quadrature_resolution=6)
    checks = {
        "flat_kahler": flat.verdicts["kahler"],
        "s6_nearly_kahler": s6.verdicts["w1"] and s6.residuals["w1"] <= 1e-8,
        "s6_not_kahler": s6.residuals["kahler"] > 1e-3,
        "compatible_hermitian": comp.verdicts["hermitian"],
        "ak_closed": ak.verdicts["w2"],
        "ak_pointwise_s_j": ak.max_s_j <= 1e-8,
        "ak_integral_s_j": ak.integral_s_j <= 0.0,
    }
    details = {
        "checks": checks,
        "s6_w1_residual": s6.residuals["w1"],
        "s6_kahler_residual": s6.residuals["kahler"],
        "ak_w2_residual": ak.residuals["w2"],
        "ak_max_s_j": ak.max_s_j,
        "ak_integral_s_j": ak.integral_s_j,
    }
    return all(checks.values()), details


# -- bubble ----------------------------------------------------------------------


@_timed(7, "bubble PDE holds for exactly one sign")
def criterion_7():
    rows, winners = [], set()
    for n in (3, 6, 8):
        for alpha in (0.1, 1.0):
            rp, rm = bubble.bubble_pde_residual(n, alpha)
            ok_p, ok_m = rp <= 1e-10, rm <= 1e-10
            winners.add("plus" if ok_p and not ok_m else "minus" if ok_m and not ok_p else "none")
            rows.append({"n": n, "alpha": alpha, "r_plus": rp, "r_minus": rm})
    return len(winners) == 1 and "none" not in winners, {"rows": rows, "vanishing_sign": sorted(winners)}


@_timed(8, "bubble Sobolev quotient equals n(n-1) omega_n^{2/n}")
def criterion_8():
    omega6 = sphere_area(6)
    rows = []
    for n in (6, 8):
        target = bubble.sobolev_target(n)
        for alpha in (1.0, 0.1):
            v = bubble.bubble_rayleigh(n, alpha=alpha)
            rows.append({"n": n, "alpha": alpha, "value": v, "relative_error": abs(v - target) / target})
    ok = all(r["relative_error"] <= 1e-3 for r in rows) and abs(omega6 - 16 * math.pi ** 3 / 15) <= 1e-12
    return ok, {"rows": rows, "omega6": omega6, "omega6_closed_form": 16 * math.pi ** 3 / 15}


@_timed(9, "small-alpha rates of weighted masses")
def criterion_9():
    rows = []
    for n, k in ((6, 0), (6, 2), (6, 3), (8, 2)):
        expo, regime = bubble.predicted_rate(n, k)
        slope = bubble.lemma_u_rate(n, k)
        rows.append({"n": n, "k": k, "slope": slope, "predicted": expo, "regime": regime})
    return all(abs(r["slope"] - r["predicted"]) <= 0.1 for r in rows), {"rows": rows}


@_timed(10, "c(n) quadrature equals closed form")
def criterion_10():
    rows = []
    for n in (6, 8, 10, 12):
        q, c = bubble.cn_check(n)
        rows.append({"n": n, "quadrature": q, "closed_form": c, "relative_error": abs(q - c) / abs(c)})
    c6 = bubble.cn_closed_form(6)
    ok = (
        all(r["relative_error"] <= 1e-6 and r["quadrature"] > 0 and r["closed_form"] > 0 for r in rows)
        and abs(c6 - 8.0 / 12.0) <= 1e-15
    )
    return ok, {"rows": rows, "c6": c6}


# -- the conformal invariant --------------------------------------------------------


@_timed(11, "minimizer recovers the conformally flat answer")
def criterion_11():
    t0 = time.perf_counter()
    tol = 1e-6
    run = minimizer_run(CONFORMAL_FLAT, EXACT_RESOLUTION, EXACT_BACKEND, 3000, tol)
    elapsed = time.perf_counter() - t0
    geo = grid_geometry(CONFORMAL_FLAT, EXACT_RESOLUTION, EXACT_BACKEND)
    x1 = lattice_points(6, EXACT_RESOLUTION)[:, 0]
    target = 1.0 / (1.0 + 0.2 * np.cos(x1))
    u = run.minimizer.values
    c = geo.integrate(u * target) / geo.integrate(target * target)
    rel = geo.l2_norm(u - c * target) / geo.l2_norm(c * target)
    hist = np.asarray(run.value_history)
    monotone = bool(np.all(np.diff(hist) <= 1e-12 * np.maximum(1.0, np.abs(hist[1:]))))
    checks = {
        "final_value": run.final_value <= 1e-3,
        "shape": rel <= 0.05,
        "monotone": monotone,
        "el_residual": run.el_residual < tol,
        "runtime": elapsed < 600.0,
    }
    return all(checks.values()), {
        "checks": checks, "final_value": run.final_value, "relative_l2": rel,
        "el_residual": run.el_residual, "el_residual_pointwise": run.el_residual_pointwise,
        "iterations": run.iterations, "status": run.status, "seconds": elapsed,
        "resolution": EXACT_RESOLUTION, "backend": EXACT_BACKEND,
    }


@_timed(12, "every minimizer run respects n(n-2) omega_n^{2/n}")
def criterion_12():
    bound = yamabe_bound(6)
    for man in [CONFORMAL_FLAT, {"type": "flat_torus", "dim": 6}] + SIGN_TORI:
        minimizer_run(man, SIGN_RESOLUTION)
    minimizer_run(CONFORMAL_FLAT, EXACT_RESOLUTION, EXACT_BACKEND)
    finals = {f"{json.loads(k[0])['type']}:{json.loads(k[0]).get('seed', '')}:{k[1]}:{k[2]}": r.final_value
              for k, r in _RUNS.items()}
    bounds_ok = all(r.final_value <= r.bound + 1e-6 for r in _RUNS.values())
    return bounds_ok, {"bound": bound, "final_values": finals}


@_timed(13, "sign of lambda_1 matches sign of the discrete invariant")
def criterion_13():
    rows = []
    for man in SIGN_TORI:
        run = minimizer_run(man, SIGN_RESOLUTION)
        lam = first_eigenvalue(man, SIGN_RESOLUTION)
        rows.append({
            "manifest": man, "y": run.final_value, "lambda1": lam, "status": run.status,
            "agree": value_sign(lam) == value_sign(run.final_value),
        })
    lams = [abs(first_eigenvalue(CONFORMAL_FLAT, r, EXACT_BACKEND)) for r in (4, 6, 8)]
    decreasing = lams[0] > lams[1] > lams[2]
    return all(r["agree"] for r in rows) and decreasing, {
        "rows": rows, "conformal_flat_abs_lambda1": lams, "resolution": SIGN_RESOLUTION,
    }


@_timed(14, "S_J is natural under a torus diffeomorphism")
def criterion_14():
    base = make_almost_kahler_torus(6, 1, 0.1)
    phi, inv = shear_maps(6, random_shears(6, 3, 0.2))
    pm = make_pullback(base, phi, inv)
    x = pm.sample(50, 0)
    y = np.stack([f.jet(x, 0).val for f in phi], axis=1)
    lhs = scalar_fields(pm, x)["s_j"]
    rhs = scalar_fields(base, y)["s_j"]
    worst = float(np.max(np.abs(lhs - rhs)))
    return worst <= 1e-7, {"max_difference": worst, "max_abs_s_j": float(np.max(np.abs(rhs)))}


# -- deformations of J -------------------------------------------------------------------


@_timed(15, "J-Ricci form identity, path invariants and projector constraints")
def criterion_15():
    rho, path, proj = {}, {}, {}
    ts = (0.1, -0.1, 0.01, -0.01)
    for k, m in enumerate(all_generators()):
        pts = m.sample(50, 0)
        rho[m.label] = jvariation.rho_decomposition_residual(m, pts)
        K = jvariation.random_deformation(m, 10 + k)
        proj[m.label] = max(K.residuals(pts).values())
        path[m.label] = jvariation.jpath_residuals(m, K, ts, pts[:10])
    ok = (
        max(rho.values()) <= 1e-8
        and max(proj.values()) <= 1e-12
        and all(r["j_squared"] <= 1e-10 and r["compatibility"] <= 1e-10 and r["initial"] == 0.0
                and r["derivative"] <= 1e-6 for r in path.values())
    )
    return ok, {"rho_residuals": rho, "projector_residuals": proj, "path_residuals": path}


@_timed(16, "derivative formula for Y against finite differences")
def criterion_16():
    t0 = time.perf_counter()
    m = from_manifest(DY_MANIFEST)
    skew, _ = jvariation.critical_point_test(m, 32)
    K = jvariation.random_deformation(m, DY_DEFORMATION_SEED)
    res = jvariation.dy_crosscheck(m, K, DY_RESOLUTION, DY_STEP, max_iter=DY_MAX_ITER, tol=DY_TOL)
    flat = make_flat_torus(6)
    Kf = jvariation.random_deformation(flat, DY_DEFORMATION_SEED)
    flat_value = jvariation.dY_formula(flat, Kf, DY_RESOLUTION, max_iter=DY_MAX_ITER, tol=DY_TOL)
    elapsed = time.perf_counter() - t0
    checks = {
        "skew_nonzero": skew > 1e-4,
        "agreement": res["relative_difference"] <= 0.15,
        "flat_zero": flat_value == 0.0,
        "runtime": elapsed < 1800.0,
    }
    return all(checks.values()), {"checks": checks, "skew_norm": skew, "crosscheck": res,
                                  "flat_formula": flat_value, "seconds": elapsed}


CRITERIA = [
    criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
    criterion_8, criterion_9, criterion_10, criterion_11, criterion_12, criterion_13, criterion_14,
    criterion_15, criterion_16,
]


def run_all(select=None, echo=None) -> list:
    """Run the chosen criteria (all by default); ``echo`` receives each result line."""
    out = []
    for fn in CRITERIA:
        if select and fn.number not in select:
            continue
        res = fn()
        if echo is not None:
            echo(res.line())
        out.append(res)
    return out
