"""Measured discrete Sobolev constants.

kappa(p, a) is estimated as sup ||u||_p / ||u||_{H_a} over admissible scalar
lattice functions of each parity class that occurs for forms of degree 0..2,
times a 1.05 safety factor.  For a form, ||w||_p <= max_class kappa ||w||_{H_a}
follows from the scalar bound componentwise and the triangle inequality in
L^{p/2}, so the scalar maximum covers every degree.

The supremum is approached by L-BFGS on the Rayleigh-type quotient, started from
a grid-scale bump at the centre and at a corner, the lowest nonconstant modes,
and random fields.  Results are cached per (lattice, p, a).
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.optimize import minimize

from . import lattice as lt
from .lattice import Lattice

SAFETY = 1.05


def parity_classes(lattice: Lattice) -> list:
    tags = []
    for deg in range(3):
        for t in lattice.form_parities(deg):
            if t not in tags:
                tags.append(t)
    return tags


def _quotient(lattice, tags, p, a):
    mask = lt.admissible_mask(lattice, tags).astype(float)
    weight = (1.0 + lt.eigenvalues(lattice, tags)) ** a * mask
    dv = lattice.cell_volume

    def project(v):
        return lt.inverse(lt.forward(v, tags) * mask, tags)

    def f(v):
        v = v.reshape(lattice.shape)
        u = project(v)
        c = lt.forward(u, tags)
        h = float(np.sum(weight * np.abs(c) ** 2)) * dv
        if h <= 0:
            return 0.0, np.zeros(v.size)
        absu = np.abs(u)
        s = float(np.sum(absu**p)) * dv
        lp2 = s ** (2.0 / p)
        # gradients with respect to grid values of u, then through the projection
        g_lp = 2.0 * s ** (2.0 / p - 1.0) * absu ** (p - 2.0) * u * dv
        g_h = 2.0 * lt.inverse(weight * c, tags) * dv
        q = lp2 / h
        grad = (g_lp - q * g_h) / h
        grad = project(grad)
        return -q, -grad.ravel()

    return f


def _starts(lattice, tags, rng, n_random):
    x, y, z = lattice.grid()
    out = []
    width = 1.5 * float(np.max(lattice.spacing))
    centres = [np.array(lattice.lengths) / 2.0]
    if not lattice.periodic:
        centres.append(np.array(lattice.spacing) / 2.0)
    for c in centres:
        r2 = (x - c[0]) ** 2 + (y - c[1]) ** 2 + (z - c[2]) ** 2
        out.append(np.exp(-r2 / (2 * width**2)))
    lam = lt.eigenvalues(lattice, tags)
    mask = lt.admissible_mask(lattice, tags)
    positive = np.where(mask & (lam > 0), lam, np.inf)
    k = np.unravel_index(np.argmin(positive), lam.shape)
    coeff = np.zeros(lattice.shape, dtype=complex if lattice.periodic else float)
    coeff[k] = 1.0
    out.append(lt.inverse(coeff, tags))
    for _ in range(n_random):
        out.append(rng.standard_normal(lattice.shape))
    return out


def measure_raw(lattice: Lattice, p: float, a: float, seed: int = 0, n_random: int = 2,
                maxiter: int = 300) -> float:
    """sup ||u||_p / ||u||_{H_a} without the safety factor."""
    rng = np.random.default_rng(seed)
    best = 0.0
    for tags in parity_classes(lattice):
        f = _quotient(lattice, tags, p, a)
        for v0 in _starts(lattice, tags, rng, n_random):
            val0, _ = f(v0.ravel())
            if val0 == 0.0:
                continue
            res = minimize(f, v0.ravel(), jac=True, method="L-BFGS-B",
                           options={"maxiter": maxiter, "gtol": 1e-12, "ftol": 1e-15})
            best = max(best, -float(res.fun), -val0)
    return float(np.sqrt(best))


@lru_cache(maxsize=None)
def kappa(lattice: Lattice, p: float, a: float) -> float:
    """Measured constant with ||u||_p <= kappa ||u||_{H_a}, including the safety factor."""
    return SAFETY * measure_raw(lattice, p, a)


def kappa_gfs(lattice: Lattice) -> float:
    """kappa in the Gaffney-Friedrichs-Sobolev inequality: H_1 -> L^6 for forms."""
    return kappa(lattice, 6.0, 1.0)


def kappa_6(lattice: Lattice) -> float:
    """H_1 -> L^6 constant used in the Kato-type 0-form bound."""
    return kappa(lattice, 6.0, 1.0)


def kappa_3(lattice: Lattice) -> float:
    """H_{1/2} -> L^3 constant; with delta = 1/2 the exponent p1 = 3/delta is 6."""
    return kappa(lattice, 3.0, 0.5)
