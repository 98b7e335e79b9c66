"""Command-line entry point: ``ahlab <command> [flags]``, JSON reports on stdout.

Exit codes: 0 when every check of the command holds, 1 when a check fails,
2 for an unreadable or malformed manifest, 3 for a numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__

EXIT_OK, EXIT_CHECK, EXIT_MANIFEST, EXIT_NUMERIC = 0, 1, 2, 3
THREADS_ENV = "AHLAB_THREADS"


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def _flatten(data, prefix=""):
    if isinstance(data, dict):
        for k, v in data.items():
            yield from _flatten(v, f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(data, list) and data and isinstance(data[0], (dict, list)):
        for i, v in enumerate(data):
            yield from _flatten(v, f"{prefix}[{i}]")
    else:
        yield prefix, data


def render(report: dict, pretty: bool) -> str:
    if not pretty:
        return json.dumps(report, sort_keys=True)
    rows = list(_flatten(report))
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k.ljust(width)}  {v}" for k, v in rows)


# -- commands -----------------------------------------------------------------------


def _manifold(args):
    from .manifolds import from_manifest, load_manifest

    spec = load_manifest(args.manifest)
    return spec, from_manifest(spec)


def cmd_curvature(args):
    from .curvature import curvature_pack, s_j_holomorphic_frame, weyl_identity_residual
    from .manifolds import structure_residuals

    spec, m = _manifold(args)
    pts = m.sample(args.points, args.seed)
    pack = curvature_pack(m, pts, threads=args.threads)
    frame = s_j_holomorphic_frame(m, pts)
    weyl = weyl_identity_residual(m, pts) if m.dim > 2 else np.zeros(len(pts))
    records = []
    for k, x in enumerate(pts):
        rec = {"point": x, **pack.scalars(k)}
        rec["frame_s_j_difference"] = abs(frame[k] - pack.s_j[k])
        rec["weyl_identity_residual"] = weyl[k]
        records.append(rec)
    structure = structure_residuals(m, pts)
    ok = structure["j_squared"] <= 1e-10 and structure["compatibility"] <= 1e-10 \
        and structure["min_cholesky_pivot"] > 0
    return spec, {"points": records, "structure": structure}, [], ok


def cmd_classify(args):
    from .gray_hervella import classify, sign_crosscheck

    spec, m = _manifold(args)
    report = classify(m, args.points, args.tol, args.seed,
                      args.quadrature_resolution or None, args.threads)
    diags = sign_crosscheck(report, m, strict=args.strict)
    report.diagnostics = diags
    ok = not (args.strict and any(d["level"] == "WARN" for d in diags))
    return spec, report.to_json(), diags, ok


def _conformal_pair(spec, seed):
    from .fields import trig_from_spec
    from .manifolds import from_manifest

    if spec.get("type") == "conformal":
        base = from_manifest(spec["base"])
        return base, trig_from_spec(spec["factor"], base.dim)
    base = from_manifest(spec)
    rng = np.random.default_rng(seed)
    n = base.dim
    terms = [{"freq": [0] * n, "cos": 1.0}]
    for _ in range(3):
        f = [0] * n
        for i in rng.choice(n, size=2, replace=False):
            f[int(i)] = int(rng.integers(-2, 3))
        terms.append({"freq": f, "cos": float(rng.uniform(-0.1, 0.1)), "sin": float(rng.uniform(-0.1, 0.1))})
    return base, trig_from_spec(terms, n)


def cmd_conformal_check(args):
    from .manifolds import load_manifest
    from .yamabe import residual_conformal_laws

    spec = load_manifest(args.manifest)
    base, u = _conformal_pair(spec, args.seed)
    pts = base.sample(args.points, args.seed)
    r = residual_conformal_laws(base, u, pts)
    res = {
        "scalar_law": float(np.max(r[0])),
        "star_scalar_law": float(np.max(r[1])),
        "s_j_law": float(np.max(r[2])),
        "points": int(len(pts)),
        "factor": u.to_spec() if hasattr(u, "to_spec") else None,
        "tol": args.tol,
    }
    ok = max(res["scalar_law"], res["star_scalar_law"], res["s_j_law"]) <= args.tol
    return spec, res, [], ok


def cmd_yamabe(args):
    from .manifolds import load_manifest
    from .yamabe import first_eigenvalue, minimize_qj

    spec = load_manifest(args.manifest)
    run = minimize_qj(spec, args.resolution, args.max_iter, args.tol, args.backend,
                      threads=args.threads)
    if args.eigenvalue:
        run.lambda1 = first_eigenvalue(spec, args.resolution, args.backend, args.threads)
    out = run.to_json(include_minimizer=args.include_minimizer)
    ok = run.final_value <= run.bound + 1e-6
    diags = []
    if run.status != "converged":
        diags.append({"level": "WARN", "check": "convergence", "message": f"minimizer status {run.status}"})
    if run.clamp_count:
        diags.append({"level": "INFO", "check": "positivity", "message": f"{run.clamp_count} clamped values"})
    return spec, out, diags, ok


def cmd_bubble(args):
    from .bubble import run_check

    rep = run_check(args.check, args.n).to_json()
    d = rep["data"]
    if args.check == "pde":
        ok = d["vanishing_sign"] in (["minus"], ["plus"])
    elif args.check == "rayleigh":
        ok = d["relative_error"] <= 1e-3
    elif args.check == "rates":
        ok = all(abs(r["slope"] - r["predicted"]) <= 0.1 for r in d["rows"])
    else:
        ok = d["relative_error"] <= 1e-6 and d["quadrature"] > 0
    if args.report:
        with open(args.report, "w") as fh:
            json.dump(_jsonable(rep), fh, indent=2, sort_keys=True)
    return None, rep, [], ok


def cmd_jvary(args):
    from . import jvariation

    spec, m = _manifold(args)
    out, ok, diags = {}, True, []
    if args.mode == "critical":
        skew, critical = jvariation.critical_point_test(m, args.points, args.seed)
        rho = jvariation.rho_decomposition_residual(m, m.sample(args.points, args.seed))
        out = {"skew_norm": skew, "critical": critical, "rho_identity_residual": rho}
        return spec, out, diags, rho <= 1e-8
    K = jvariation.random_deformation(m, args.seed)
    out["deformation"] = K.spec
    if args.mode == "formula":
        out["formula"] = jvariation.dY_formula(m, K, args.resolution, backend=args.backend,
                                               threads=args.threads, max_iter=args.max_iter,
                                               tol=args.tol)
    elif args.mode == "fd":
        out["finite_difference"] = jvariation.finite_diff_dY(
            m, K, args.resolution, args.h, args.backend, args.threads, args.max_iter, args.tol)
    else:
        out.update(jvariation.dy_crosscheck(m, K, args.resolution, args.h, args.backend,
                                            args.threads, args.max_iter, args.tol))
        ok = out["relative_difference"] <= 0.15
    return spec, out, diags, ok


def cmd_suite(args):
    from .acceptance import run_all

    select = set(args.only) if args.only else None
    results = run_all(select, echo=lambda line: print(line, file=sys.stderr, flush=True))
    out = {"criteria": [r.to_json() for r in results],
           "passed": sum(r.passed for r in results), "total": len(results)}
    return None, out, [], all(r.passed for r in results)


COMMANDS = {
    "curvature": cmd_curvature,
    "classify": cmd_classify,
    "conformal-check": cmd_conformal_check,
    "yamabe": cmd_yamabe,
    "bubble": cmd_bubble,
    "jvary": cmd_jvary,
    "suite": cmd_suite,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--pretty", action="store_true", help="key/value table instead of JSON")
    common.add_argument("--threads", type=int, default=_default_threads(),
                        help=f"worker threads (default from {THREADS_ENV}, else 1)")
    common.add_argument("--seed", type=int, default=0)

    parser = argparse.ArgumentParser(prog="ahlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curvature", parents=[common], help="pointwise curvature scalars")
    p.add_argument("--manifest", required=True)
    p.add_argument("--points", type=int, default=20)

    p = sub.add_parser("classify", parents=[common], help="Gray-Hervella residuals and verdicts")
    p.add_argument("--manifest", required=True)
    p.add_argument("--points", type=int, default=32)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--quadrature-resolution", type=int, default=6,
                   help="lattice for the integral of S_J on tori (0 disables)")
    p.add_argument("--strict", action="store_true",
                   help="fail on sign warnings and on charts without global quadrature")

    p = sub.add_parser("conformal-check", parents=[common], help="residuals of the conformal laws")
    p.add_argument("--manifest", required=True,
                   help="a conformal manifest (base + factor) or a base with a seeded factor")
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--tol", type=float, default=1e-7)

    p = sub.add_parser("yamabe", parents=[common], help="minimize Q_{g,J} on a torus lattice")
    p.add_argument("--manifest", required=True)
    p.add_argument("--resolution", type=int, default=6)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--backend", choices=("fd4", "spectral"), default="fd4")
    p.add_argument("--eigenvalue", action="store_true", help="also compute lambda_1")
    p.add_argument("--include-minimizer", action="store_true")

    p = sub.add_parser("bubble", parents=[common], help="checks on the concentrating profile")
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--check", choices=("pde", "rayleigh", "rates", "cn"), default="cn")
    p.add_argument("--report", help="also write the report to this file")

    p = sub.add_parser("jvary", parents=[common], help="variation of the invariant in J")
    p.add_argument("--manifest", required=True)
    p.add_argument("--h", type=float, default=0.02)
    p.add_argument("--resolution", type=int, default=6)
    p.add_argument("--mode", choices=("formula", "fd", "both", "critical"), default="both")
    p.add_argument("--points", type=int, default=32)
    p.add_argument("--backend", choices=("fd4", "spectral"), default="fd4")
    p.add_argument("--max-iter", type=int, default=2000)
    p.add_argument("--tol", type=float, default=1e-8)

    p = sub.add_parser("suite", parents=[common], help="run the acceptance battery")
    p.add_argument("--only", type=int, nargs="*", help="criterion numbers to run")
    return parser


def run(argv=None, stream=None) -> int:
    """Parse ``argv``, run the command, print its report and return the exit code."""
    from .gray_hervella import UnsupportedQuadratureError
    from .jvariation import DependencyError
    from .manifolds import GeneratorError, ManifestError, PositivityError, PullbackError
    from .quadrature import QuadratureError
    from .yamabe import EigensolverError, OptimizationError

    stream = sys.stdout if stream is None else stream
    args = build_parser().parse_args(argv)
    report = {"command": args.command, "version": __version__, "seed": args.seed,
              "threads": args.threads, "manifest": None, "results": None, "diagnostics": []}
    t0 = time.perf_counter()
    code = EXIT_OK
    try:
        manifest, results, diags, ok = COMMANDS[args.command](args)
        report.update(manifest=manifest, results=results)
        report["diagnostics"].extend(d for d in diags if d not in report["diagnostics"])
        code = EXIT_OK if ok else EXIT_CHECK
    except (ManifestError, FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        report["diagnostics"].append({"level": "ERROR", "check": "manifest", "message": str(exc)})
        code = EXIT_MANIFEST
    except (OptimizationError, EigensolverError, QuadratureError, DependencyError, PositivityError,
            GeneratorError, PullbackError, UnsupportedQuadratureError, np.linalg.LinAlgError,
            FloatingPointError) as exc:
        err = {"level": "ERROR", "check": "numerical", "error": type(exc).__name__, "message": str(exc)}
        if getattr(exc, "history", None):
            err["history"] = exc.history
        report["diagnostics"].append(err)
        code = EXIT_NUMERIC
    report["wall_time"] = time.perf_counter() - t0
    report["exit_code"] = code
    print(render(_jsonable(report), args.pretty), file=stream)
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
