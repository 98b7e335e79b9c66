"""The concentrating profile u_alpha(x) = (alpha / (|x|^2 + alpha^2))^{(n-2)/2} and
the integrals built from it: its PDE, its Sobolev quotient, the small-alpha rates of
weighted L^2 masses, and the constant c(n).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import qmc

from .jets import coordinate_jets
from .quadrature import QuadratureError, integrate
from .yamabe import sphere_area


@dataclass(frozen=True)
class BubbleProfile:
    n: int
    alpha: float

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("the profile needs n >= 3")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")

    @property
    def exponent(self) -> float:
        return 2.0 * self.n / (self.n - 2)

    def radial(self, r, derivative: int = 0):
        """u, u' or u'' as functions of r = |x|, from the closed form."""
        r = np.asarray(r, dtype=float)
        q = 0.5 * (self.n - 2)
        a = self.alpha
        s = r * r + a * a
        if derivative == 0:
            return (a / s) ** q
        if derivative == 1:
            return -2.0 * q * r * a ** q * s ** (-q - 1)
        if derivative == 2:
            return a ** q * (-2.0 * q * s ** (-q - 1) + 4.0 * q * (q + 1) * r * r * s ** (-q - 2))
        raise ValueError("derivative must be 0, 1 or 2")

    def jet(self, points, order: int = 2):
        """Jet of u_alpha in Cartesian coordinates of R^n."""
        X = coordinate_jets(points, order)
        s = sum(X[i] * X[i] for i in range(self.n)) + self.alpha ** 2
        return (s.reciprocal().scale(self.alpha)) ** (0.5 * (self.n - 2))


def _directions(n, count, seed=0):
    z = qmc.Halton(d=n, scramble=True, seed=seed).random(count) - 0.5
    z[np.linalg.norm(z, axis=1) < 1e-6] = 1.0
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def bubble_pde_residual(n: int, alpha: float, sample_points=None):
    """(r_plus, r_minus) for Delta u + n(n-2) u^{p-1} and Delta u - n(n-2) u^{p-1}.

    ``Delta = -sum d_i^2`` is applied to the Cartesian jet of u_alpha.
    ``sample_points`` are radii (1-D, placed along quasi-random directions) or
    points of R^n (2-D); the default is 100 radii in (0, 10 alpha).  Residuals
    carry the homogeneity weight alpha^{(n+2)/2}, so they equal the alpha = 1
    residuals at x / alpha and are comparable across alpha.
    """
    prof = BubbleProfile(n, alpha)
    if sample_points is None:
        sample_points = alpha * np.linspace(0.0, 10.0, 101)[1:]
    pts = np.asarray(sample_points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None] * _directions(n, len(pts))
    if pts.shape[1] != n:
        raise ValueError("sample points must live in R^n")
    uj = prof.jet(pts, 2)
    lap = -np.einsum("pii->p", uj.d2)
    nonlin = n * (n - 2) * uj.val ** (prof.exponent - 1)
    weight = alpha ** (0.5 * (n + 2))
    return (
        float(weight * np.max(np.abs(lap + nonlin))),
        float(weight * np.max(np.abs(lap - nonlin))),
    )


def sobolev_target(n: int) -> float:
    """n(n-1) omega_n^{2/n}."""
    return n * (n - 1) * sphere_area(n) ** (2.0 / n)


def bubble_rayleigh(n: int, quadrature_radius: float = 1e4, tol: float = 1e-10,
                    alpha: float = 1.0) -> float:
    """4(n-1)/(n-2) int |du|^2 dx / (int u^p dx)^{2/p} for u = u_alpha on R^n.

    Radial integrals run over [0, quadrature_radius * alpha]; the remainders are
    bounded by (n-2) (alpha/R)^{n-2} and (alpha/R)^n / n times the matching
    power of alpha, and a relative remainder above ``tol`` raises.
    """
    if n < 5:
        raise ValueError("the quotient is computed for n >= 5")
    prof = BubbleProfile(n, alpha)
    p = prof.exponent
    R = quadrature_radius * alpha

    def grad_density(r):
        return prof.radial(r, 1) ** 2 * r ** (n - 1)

    def mass_density(r):
        return prof.radial(r) ** p * r ** (n - 1)

    # the profile varies on the scale alpha: split there and at a few decades beyond
    cuts = [0.0] + [alpha * 10.0 ** k for k in range(int(math.log10(quadrature_radius)) + 1)]
    cuts = sorted(set(c for c in cuts if c < R)) + [R]
    D = math.fsum(integrate(grad_density, a, b, rtol=1e-13)[0] for a, b in zip(cuts, cuts[1:]))
    M = math.fsum(integrate(mass_density, a, b, rtol=1e-13)[0] for a, b in zip(cuts, cuts[1:]))
    tail_D = (n - 2) * alpha ** (n - 2) * R ** (2 - n)
    tail_M = alpha ** n * R ** (-n) / n
    if tail_D > tol * D or tail_M > tol * M:
        raise QuadratureError(
            f"tail bound {max(tail_D / D, tail_M / M):.2e} exceeds tol {tol:.1e}; enlarge quadrature_radius"
        )
    area = sphere_area(n - 1)
    return 4.0 * (n - 1) / (n - 2) * area * D / (area * M) ** (2.0 / p)


def predicted_rate(n: int, k: float):
    """(exponent, regime) for int_0^eps r^k u_alpha^2 r^{n-1} dr as alpha -> 0."""
    if n > k + 4:
        return k + 2.0, "power"
    if n == k + 4:
        return k + 2.0, "log"
    return float(n - 2), "saturated"


def weighted_mass(n: int, k: float, alpha: float, epsilon: float = 1.0, rtol: float = 1e-12) -> float:
    """int_0^eps r^{k+n-1} u_alpha(r)^2 dr.

    Uses r = e^s on [alpha * 1e-4, eps] so the peak at r ~ alpha and the long
    tail are both resolved; the piece below alpha * 1e-4 is taken from the
    leading term r^{k+n-1} alpha^{2-n} of the integrand.
    """
    if not k > -n:
        raise ValueError("need k > -n for integrability at 0")
    r0 = min(alpha * 1e-4, 0.5 * epsilon)
    prof = BubbleProfile(n, alpha)

    def g(s):
        r = np.exp(s)
        return r ** (k + n) * prof.radial(r) ** 2

    lo, hi = math.log(r0), math.log(epsilon)
    cuts = [lo] + [c for c in (math.log(alpha) - 2.0, math.log(alpha) + 2.0) if lo < c < hi] + [hi]
    body = math.fsum(integrate(g, a, b, rtol=rtol)[0] for a, b in zip(cuts, cuts[1:]))
    head = r0 ** (k + n) * alpha ** (2 - n) / (k + n)
    return body + head


def lemma_u_rate(n: int, k: float, alphas=None, epsilon: float = 1.0) -> float:
    """Least-squares slope of log I(alpha) against log alpha, I as in :func:`weighted_mass`."""
    alphas = np.geomspace(1e-5, 1e-8, 8) if alphas is None else np.asarray(alphas, dtype=float)
    if alphas.size < 4:
        raise ValueError("need at least 4 alpha values")
    if np.any(np.diff(alphas) >= 0):
        raise ValueError("alphas must be decreasing")
    vals = np.array([weighted_mass(n, k, a, epsilon) for a in alphas])
    slope, _ = np.polyfit(np.log(alphas), np.log(vals), 1)
    return float(slope)


def local_slopes(n: int, k: float, alphas, epsilon: float = 1.0) -> np.ndarray:
    """Slopes between consecutive alphas (the drift shows a log factor)."""
    alphas = np.asarray(alphas, dtype=float)
    vals = np.array([weighted_mass(n, k, a, epsilon) for a in alphas])
    return np.diff(np.log(vals)) / np.diff(np.log(alphas))


def cn_closed_form(n: int) -> float:
    """(m^2 - 2m - 1)(m-1)!^2 / ((m-1)(m-2)(2m-3)!), n = 2m."""
    m = n // 2
    f = math.factorial
    return (m * m - 2 * m - 1) * f(m - 1) ** 2 / ((m - 1) * (m - 2) * f(2 * m - 3))


def cn_integrand(n: int):
    a = 2 * n * n - 9 * n + 2
    b = 2 * (3 * n + 2)
    c = 3 * n + 2

    def f(s):
        s2 = s * s
        return (a * s2 * s2 - b * s2 - c) * s ** (n - 1) / (s2 + 1.0) ** n

    return f


def cn_check(n: int):
    """(quadrature over [0, inf), closed form) for the constant c(n)."""
    if n % 2 or n < 6:
        raise ValueError("c(n) is defined for even n >= 6")
    value, _ = integrate(cn_integrand(n), 0.0, math.inf, rtol=1e-12)
    return value, cn_closed_form(n)


@dataclass
class BubbleReport:
    check: str
    n: int
    data: dict

    def to_json(self) -> dict:
        return asdict(self)


def run_check(check: str, n: int) -> BubbleReport:
    """One named check with its default parameters, as reported by the CLI."""
    if check == "pde":
        rows = []
        for alpha in (0.1, 1.0):
            rp, rm = bubble_pde_residual(n, alpha)
            rows.append({"alpha": alpha, "r_plus": rp, "r_minus": rm})
        signs = {("minus" if r["r_minus"] <= 1e-10 < r["r_plus"] else
                  "plus" if r["r_plus"] <= 1e-10 < r["r_minus"] else "ambiguous") for r in rows}
        return BubbleReport(check, n, {"rows": rows, "vanishing_sign": sorted(signs)})
    if check == "rayleigh":
        vals = {str(a): bubble_rayleigh(n, alpha=a) for a in (1.0, 0.1)}
        target = sobolev_target(n)
        return BubbleReport(check, n, {
            "values": vals, "target": target, "omega_n": sphere_area(n),
            "relative_error": max(abs(v - target) / target for v in vals.values()),
        })
    if check == "rates":
        rows = []
        for k in (0, n - 4, n - 3):
            expo, regime = predicted_rate(n, k)
            rows.append({"k": k, "slope": lemma_u_rate(n, k), "predicted": expo, "regime": regime})
        return BubbleReport(check, n, {"rows": rows})
    if check == "cn":
        q, c = cn_check(n)
        return BubbleReport(check, n, {"quadrature": q, "closed_form": c,
                                       "relative_error": abs(q - c) / abs(c)})
    raise ValueError(f"unknown bubble check {check!r}")
