"""Gauge-group metrics, group identities and multiplier bounds for Ad g.

Products and inverses carry their logarithmic differential through the
composition laws

    (gk)^-1 d(gk) = k^-1 dk + Ad(k^-1)(g^-1 dg),   (g^-1)^-1 d(g^-1) = -Ad(g)(g^-1 dg),

so they stay free of new aliasing.  The identity battery compares these with
the independent route that differentiates the matrix entries of the product.
"""
from __future__ import annotations

import numpy as np

from . import forms as F
from .forms import FormField
from .gauge import GaugeFunction, apply_ad, log_derivative
from .lattice import Lattice
from .lie import LieAlgebra
from . import sobolev


def random_gauge(lattice: Lattice, algebra: LieAlgebra, seed: int, amplitude: float = 0.3,
                 band: int = 1) -> GaugeFunction:
    """exp of a band-limited random 0-form whose sup norm equals ``amplitude``."""
    x = F.random_form(lattice, algebra, 0, seed, band=band)
    peak = float(np.max(x.pointwise_norm()))
    if peak > 0:
        x = x * (amplitude / peak)
    return GaugeFunction.exp(x)


def identity(lattice: Lattice, algebra: LieAlgebra) -> GaugeFunction:
    return GaugeFunction.identity(lattice, algebra)


def multiply(g: GaugeFunction, k: GaugeFunction) -> GaugeFunction:
    """Pointwise product gk with h composed by the product rule."""
    h = k.h + apply_ad(k.inv.Ad(), g.h)
    return GaugeFunction(g.g @ k.g, g.lattice, g.algebra, _h=h)


def inverse(g: GaugeFunction) -> GaugeFunction:
    return GaugeFunction(g.algebra.inv(g.g), g.lattice, g.algebra, _h=-apply_ad(g.Ad(), g.h))


def l2_distance(g: GaugeFunction, h: GaugeFunction) -> float:
    """||g - h||_2 with the pointwise Frobenius norm."""
    diff = np.sum(np.abs(g.g - h.g) ** 2, axis=(-2, -1))
    return float(np.sqrt(np.sum(diff) * g.lattice.cell_volume))


def metric_rho(g: GaugeFunction, h: GaugeFunction, index: float, kind: str = "sobolev") -> float:
    """rho_a(g,h) = ||g^-1dg - h^-1dh||_{H_a} + ||g-h||_2, or with ||.||_p for kind='lp'."""
    diff = g.h - h.h
    if kind == "sobolev":
        first = diff.sobolev_norm(index)
    elif kind == "lp":
        first = diff.lp_norm(index)
    else:
        raise ValueError(f"unknown metric kind {kind!r}")
    return first + l2_distance(g, h)


def _rel(a: FormField, b: FormField) -> float:
    scale = max(a.norm(), b.norm(), 1e-300)
    return (a - b).norm() / scale


def group_identity_battery(g: GaugeFunction, h: GaugeFunction) -> dict:
    """Relative residuals of the four logarithmic-differential identities.

    Left sides differentiate the matrix entries of the product; right sides use
    the formulas in terms of g^-1 dg and h^-1 dh.
    """
    lat, alg = g.lattice, g.algebra

    def dlog(m):
        return log_derivative(m, lat, alg)[0]

    ginv = alg.inv(g.g)
    hinv = alg.inv(h.g)
    Ad_g, Ad_h = g.Ad(), h.Ad()
    Ad_ginv = alg.Ad(ginv)
    kg, kh = g.h, h.h
    out = {}
    # (hg)^-1 d(hg) = g^-1dg + Ad(g^-1)(h^-1dh)
    out["product"] = _rel(dlog(h.g @ g.g), kg + apply_ad(Ad_ginv, kh))
    # (hg^-1)^-1 d(hg^-1) = Ad(g)(h^-1dh - g^-1dg)
    out["quotient"] = _rel(dlog(h.g @ ginv), apply_ad(Ad_g, kh - kg))
    # (g^-1)^-1 d(g^-1) = -Ad(g)(g^-1dg)
    out["inverse"] = _rel(dlog(ginv), -apply_ad(Ad_g, kg))
    # (hgh^-1)^-1 d(hgh^-1) = Ad(h)((Ad g^-1 - 1)(h^-1dh) + g^-1dg)
    rhs = apply_ad(Ad_h, apply_ad(Ad_ginv, kh) - kh + kg)
    out["conjugate"] = _rel(dlog(h.g @ g.g @ hinv), rhs)
    # cross route: g = h^-1 in the conjugation formula against the inverse formula
    cross = apply_ad(Ad_h, apply_ad(Ad_h, kh) - kh - apply_ad(Ad_h, kh))
    out["conjugate_vs_inverse"] = _rel(cross, -apply_ad(Ad_h, kh))
    out["max"] = max(out.values())
    return out


# multiplier bounds -------------------------------------------------------------------


def constants(lattice: Lattice, algebra: LieAlgebra) -> dict:
    """c (commutator bound), kappa_6, kappa_3, c1 = sqrt(2) c kappa_6 and c2 = c1 kappa_3."""
    c = algebra.commutator_bound()
    k6 = sobolev.kappa_6(lattice)
    k3 = sobolev.kappa_3(lattice)
    c1 = np.sqrt(2.0) * c * k6
    return {"c": c, "kappa_6": k6, "kappa_3": k3, "c1": c1, "c2": c1 * k3}


def ad_minus_one_norm(g: GaugeFunction, p: float) -> float:
    """|| Ad g - 1 ||_p with the pointwise operator norm on the algebra."""
    R = g.Ad() - np.eye(g.algebra.dim)
    pointwise = np.linalg.norm(R, ord=2, axis=(-2, -1))
    return F.lp_norm(pointwise[None], p, g.lattice)


def multiplier_bound_check(g: GaugeFunction, u: FormField, b: float, consts: dict | None = None) -> dict:
    """Slack of ||(Ad g)u||_{H_b} <= (1 + c1||g^-1dg||_3)||u||_{H_b} and of the
    H_{b+1/2} -> H_b bound for (Ad g - 1) with p1 = 6."""
    if not 0.0 <= b <= 1.0:
        raise ValueError("b must lie in [0, 1]")
    consts = consts or constants(g.lattice, g.algebra)
    c1 = consts["c1"]
    h3 = g.h.lp_norm(3.0)
    Ru = apply_ad(g.Ad(), u)
    lhs = Ru.sobolev_norm(b)
    rhs = (1.0 + c1 * h3) * u.sobolev_norm(b)
    out = {"b": b, "lhs": lhs, "rhs": rhs, "slack": rhs - lhs}
    if b <= 0.5:
        lhs2 = (Ru - u).sobolev_norm(b)
        rhs2 = (consts["kappa_3"] * ad_minus_one_norm(g, 6.0) + c1 * h3) * u.sobolev_norm(b + 0.5)
        out.update({"lhs_minus_one": lhs2, "rhs_minus_one": rhs2, "slack_minus_one": rhs2 - lhs2})
    return out


def metric_estimates(g: GaugeFunction, h: GaugeFunction, k: GaugeFunction, a: float,
                     consts: dict | None = None) -> dict:
    """Slacks of the near-triangle estimates for rho_a with the measured c2."""
    if not 0.5 <= a <= 1.0:
        raise ValueError("the estimates are stated for a in [1/2, 1]")
    consts = consts or constants(g.lattice, g.algebra)
    c2 = consts["c2"]
    e = identity(g.lattice, g.algebra)
    rg, rh, rk = metric_rho(g, e, a), metric_rho(h, e, a), metric_rho(k, e, a)
    r_gh = metric_rho(multiply(g, h), e, a)
    r_ginv = metric_rho(inverse(g), e, a)
    lhs_right = metric_rho(multiply(g, k), multiply(h, k), a)
    rhs_right = (1.0 + c2 * rk) * metric_rho(g, h, a)
    return {
        "product": rg + rh + c2 * rg * rh - r_gh,
        "inverse": rg + c2 * rg**2 - r_ginv,
        "right_translation": rhs_right - lhs_right,
        "scale": max(rg, rh, rk, 1e-300),
    }


def right_invariance_lp(g: GaugeFunction, h: GaugeFunction, k: GaugeFunction, p: float = 3.0) -> float:
    """|rho_p(gk, hk) - rho_p(g, h)|."""
    return abs(metric_rho(multiply(g, k), multiply(h, k), p, "lp") - metric_rho(g, h, p, "lp"))


# continuity experiments (report only) ---------------------------------------------------


def strong_continuity_trend(u: FormField, x: FormField, b: float, steps: int = 6) -> np.ndarray:
    """||(Ad g_n - 1)u||_{H_b} along g_n = exp(x / 2^n)."""
    out = []
    for n in range(steps):
        g = GaugeFunction.exp(x * (0.5**n))
        out.append((apply_ad(g.Ad(), u) - u).sobolev_norm(b))
    return np.asarray(out)


def concentration_contrast(lattice: Lattice, algebra: LieAlgebra, p: float, widths, b: float = 0.5,
                           n_probe: int = 4, seed: int = 0) -> np.ndarray:
    """Operator-norm surrogate of Ad g_r - 1 for bumps g_r of shrinking width r.

    The bump x_r(y) = v exp(-|y - y0|^2 / 2r^2) is scaled so that ||g_r^-1 dg_r||_p
    is held near one; the surrogate is the largest ratio ||(Ad g - 1)u||_{H_b}/||u||_{H_b}
    over a fixed set of random probe forms u.
    """
    X, Y, Z = lattice.grid()
    c = np.array(lattice.lengths) / 2.0
    r2 = (X - c[0]) ** 2 + (Y - c[1]) ** 2 + (Z - c[2]) ** 2
    probes = [F.random_form(lattice, algebra, 1, seed + i, band=2) for i in range(n_probe)]
    v = np.zeros(algebra.dim)
    v[0] = 1.0
    out = []
    for r in widths:
        prof = np.exp(-r2 / (2.0 * r * r))
        x = FormField(v[None, :, None, None, None] * prof[None, None], 0, lattice, algebra)
        hp = F.d(x).lp_norm(p)
        x = x * (1.0 / hp if hp > 0 else 0.0)
        g = GaugeFunction.exp(x)
        R = g.Ad()
        out.append(max((apply_ad(R, u) - u).sobolev_norm(b) / u.sobolev_norm(b) for u in probes))
    return np.asarray(out)
