"""Gray-Hervella class membership from pointwise residuals of nabla omega.

All residuals are Frobenius norms of tensors expressed in a g-orthonormal,
J-adapted frame, so they do not depend on the chart.  Writing
``alpha(X, Y, Z) = nabla_X omega(Y, Z)``, the conditions are

=============  =========================================================
kahler         alpha = 0
w1             alpha(X, X, .) = 0                     (nearly Kaehler)
w2             d omega = 0                            (almost Kaehler)
balanced       delta omega = 0 and N_J = 0
w4             alpha equals the template built from delta omega
w2w3           delta omega = 0 and the cyclic sum of
               alpha(Z, X, Y) - alpha(JZ, JX, Y) vanishes
hermitian      N_J = 0
g1             alpha(X, X, .) - alpha(JX, JX, .) = 0
=============  =========================================================

Quadratic conditions are polarized over X in {e_i} and {e_i + e_j, i < j}.
Each residual is bounded by ``CONTAINMENT[c] * |alpha|`` pointwise, and a
class verdict is ``residual <= CONTAINMENT[c] * tol``; a Kaehler verdict
therefore implies every other verdict.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .curvature import adapted_frame, curvature_pack, scalar_fields
from .grid import lattice_points
from .manifolds import ChartedManifold


class UnsupportedQuadratureError(ValueError):
    """Global integrals are only available on torus charts."""


CLASSES = ("kahler", "w1", "w2", "balanced", "w4", "w2w3", "hermitian", "g1")


def containment_constants(n: int) -> dict:
    """Pointwise bounds residual_c <= C_c |nabla omega| (Frobenius, orthonormal frame)."""
    return {
        "kahler": 1.0,
        "w1": 2.0,  # |alpha(X, X, .)| <= |X|^2 |alpha|, |X|^2 <= 2
        "w2": 3.0,  # three permuted copies of alpha
        "delta": math.sqrt(n),  # trace over one index pair
        "nijenhuis": 4.0,  # four terms of the form J . nabla J
        "w4": 1.0 + 4.0 * n / (n - 2) if n > 2 else 1.0,
        "cyclic": 6.0,
        "g1": 4.0,
    }


@dataclass
class ClassReport:
    residuals: dict
    verdicts: dict
    points_sampled: int
    tol: float
    integral_s_j: Optional[float] = None
    max_s_j: Optional[float] = None
    min_s_j: Optional[float] = None
    label: str = ""
    is_torus: bool = False
    diagnostics: list = field(default_factory=list)

    def to_json(self) -> dict:
        return asdict(self)


def _polarization_vectors(n):
    vecs = [np.eye(n)[i] for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            vecs.append(np.eye(n)[i] + np.eye(n)[j])
    return np.array(vecs)


def _frame_tensors(pack, k):
    """alpha, delta omega, N_J, J in the adapted orthonormal frame at point k."""
    g, J = pack.metric[k], pack.acs[k]
    E = adapted_frame(g, J)
    Einv = np.linalg.inv(E)
    alpha = np.einsum("abc,ai,bj,ck->ijk", pack.nabla_omega[k], E, E, E)
    delta = pack.delta_omega[k] @ E
    nij = np.einsum("abe,ai,bj,ke->ijk", pack.nijenhuis[k], E, E, Einv)
    Jf = Einv @ J @ E
    dom = np.einsum("abc,ai,bj,ck->ijk", pack.d_omega[k], E, E, E)
    return alpha, delta, nij, Jf, dom


def w4_template(delta, J, n):
    """-1/(n-2) [g(X,Y) d(Z) - g(X,Z) d(Y) - g(X,JY) d(JZ) + g(X,JZ) d(JY)] in an orthonormal frame."""
    I = np.eye(n)
    dJ = delta @ J  # dJ[c] = delta(J e_c)
    # g(X, JY) components: g(e_a, J e_b) = J[a, b]
    t = (
        np.einsum("ab,c->abc", I, delta)
        - np.einsum("ac,b->abc", I, delta)
        - np.einsum("ab,c->abc", J, dJ)
        + np.einsum("ac,b->abc", J, dJ)
    )
    return -t / (n - 2)


def point_residuals(pack, k, n) -> dict:
    alpha, delta, nij, J, dom = _frame_tensors(pack, k)
    X = _polarization_vectors(n)
    JX = X @ J.T
    quad = np.einsum("pa,pb,abc->pc", X, X, alpha)
    quadJ = np.einsum("pa,pb,abc->pc", JX, JX, alpha)
    # cyclic sum over (Z, X, Y) of alpha(Z, X, Y) - alpha(JZ, JX, Y)
    beta = alpha - np.einsum("da,eb,dec->abc", J, J, alpha)
    cyclic = beta + np.transpose(beta, (1, 2, 0)) + np.transpose(beta, (2, 0, 1))
    return {
        "kahler": float(np.linalg.norm(alpha)),
        "w1": float(np.max(np.linalg.norm(quad, axis=1))),
        "w2": float(np.linalg.norm(dom)),
        "delta": float(np.linalg.norm(delta)),
        "nijenhuis": float(np.linalg.norm(nij)),
        "w4": float(np.linalg.norm(alpha - w4_template(delta, J, n))) if n > 2 else 0.0,
        "cyclic": float(np.linalg.norm(cyclic)),
        "g1": float(np.max(np.linalg.norm(quad - quadJ, axis=1))),
    }


def torus_integral_s_j(m: ChartedManifold, resolution: int = 6, threads: int = 1):
    """Trapezoidal integral of S_J dV over the lattice, plus min and max of S_J on it."""
    if not m.is_torus:
        raise UnsupportedQuadratureError("global quadrature needs a torus chart")
    pts = lattice_points(m.dim, resolution)
    data = scalar_fields(m, pts, threads=threads)
    h = 2.0 * math.pi / resolution
    integral = float(np.sum(data["s_j"] * data["volume_density"]) * h ** m.dim)
    return integral, float(np.min(data["s_j"])), float(np.max(data["s_j"]))


def classify(m: ChartedManifold, num_points: int = 32, tol: float = 1e-8, seed: int = 0,
             quadrature_resolution: Optional[int] = 6, threads: int = 1) -> ClassReport:
    """Residuals and class verdicts at ``num_points`` quasi-random chart points."""
    if num_points < 1:
        raise ValueError("num_points must be positive")
    n = m.dim
    pts = m.sample(num_points, seed)
    pack = curvature_pack(m, pts, threads=threads)
    per_point = [point_residuals(pack, k, n) for k in range(num_points)]
    raw = {key: max(r[key] for r in per_point) for key in per_point[0]}
    C = containment_constants(n)

    def ok(key):
        return raw[key] <= C[key] * tol

    residuals = {
        "kahler": raw["kahler"],
        "w1": raw["w1"],
        "w2": raw["w2"],
        "balanced": {"delta_omega": raw["delta"], "nijenhuis": raw["nijenhuis"]},
        "w4": raw["w4"],
        "w2w3": {"delta_omega": raw["delta"], "cyclic": raw["cyclic"]},
        "hermitian": raw["nijenhuis"],
        "g1": raw["g1"],
    }
    verdicts = {
        "kahler": ok("kahler"),
        "w1": ok("w1"),
        "w2": ok("w2"),
        "balanced": ok("delta") and ok("nijenhuis"),
        "w4": ok("w4"),
        "w2w3": ok("delta") and ok("cyclic"),
        "hermitian": ok("nijenhuis"),
        "g1": ok("g1"),
    }
    report = ClassReport(residuals, verdicts, num_points, tol, label=m.label, is_torus=m.is_torus)
    report.max_s_j = float(np.max(pack.s_j))
    report.min_s_j = float(np.min(pack.s_j))
    if m.is_torus and quadrature_resolution:
        integral, lo, hi = torus_integral_s_j(m, quadrature_resolution, threads)
        report.integral_s_j = integral
        report.max_s_j = max(report.max_s_j, hi)
        report.min_s_j = min(report.min_s_j, lo)
    return report


def sign_crosscheck(report: ClassReport, m: ChartedManifold, tol: Optional[float] = None,
                    strict: bool = False) -> list:
    """Sign consistency of S_J with the class verdicts.

    WARN when the G1 verdict holds but int S_J dV < -tol, when the W2+W3
    verdict holds but int S_J dV > tol, or when the W2+W3 verdict holds but
    S_J > tol at a sampled point.  Non-torus charts have no global
    quadrature: ``strict`` raises, otherwise an INFO record explains the skip.
    """
    tol = report.tol if tol is None else tol
    if not m.is_torus or report.integral_s_j is None:
        if strict:
            raise UnsupportedQuadratureError(f"{m.label}: no global quadrature on this chart")
        return [{
            "level": "INFO",
            "check": "sign_crosscheck",
            "message": f"{m.label}: integral sign checks skipped, chart does not cover a torus",
        }]
    out = []
    I = report.integral_s_j
    v = report.verdicts
    if v["g1"] and I < -tol:
        out.append({"level": "WARN", "check": "g1_integral",
                    "message": f"G1 class but integral of S_J is {I:.3e} < 0"})
    if v["w2w3"] and I > tol:
        out.append({"level": "WARN", "check": "w2w3_integral",
                    "message": f"W2+W3 class but integral of S_J is {I:.3e} > 0"})
    if v["w2w3"] and report.max_s_j is not None and report.max_s_j > tol:
        out.append({"level": "WARN", "check": "w2w3_pointwise",
                    "message": f"W2+W3 class but S_J reaches {report.max_s_j:.3e} > 0"})
    if not out:
        out.append({"level": "INFO", "check": "sign_crosscheck", "message": "consistent",
                    "integral_s_j": I})
    return out
