"""Gauge functions, gauge transforms and the recovery of A from the augmented flow.

The gauge path solves dg/dt g^-1 = phi(t) = d*C(t) pointwise.  Along with g we
transport h = g^-1 dg: one Magnus step g <- E g with E = exp(X) changes h by

    h <- h + Ad(g^-1) (E^-1 dE),   E^-1 dE = ((1 - e^{-ad X}) / ad X) dX,

and dX is an exact spectral derivative of the interpolated phi.  This keeps h
free of the aliasing that differentiating the matrix entries of g would pick up,
and it is exact for abelian groups.  :func:`log_derivative` provides the entry
differentiation route for independent checks.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import forms as F
from . import lattice as lt
from .forms import FormField
from .lattice import Lattice
from .lie import LieAlgebra
from .flow import phi1, phi2
from .quadrature import central_derivative, cumulative


@dataclass
class GaugeFunction:
    """A K-valued lattice function g with its logarithmic differential h = g^-1 dg.

    ``g`` has shape (N1, N2, N3, n, n).  When ``h`` is not supplied it is computed
    from the entries of g by :func:`log_derivative` on first access.
    """

    g: np.ndarray
    lattice: Lattice
    algebra: LieAlgebra
    eps: float | None = None
    _h: FormField | None = field(default=None, repr=False)
    projection_defect: float = 0.0

    @classmethod
    def identity(cls, lattice, algebra):
        g = algebra.identity(lattice.shape)
        return cls(g, lattice, algebra, _h=FormField.zeros(1, lattice, algebra))

    @classmethod
    def exp(cls, x: FormField) -> "GaugeFunction":
        """exp of a 0-form; h is taken from the matrix entries."""
        if x.degree != 0:
            raise ValueError("exp needs a 0-form")
        return cls(x.algebra.exp(x.data[0]), x.lattice, x.algebra)

    @property
    def h(self) -> FormField:
        if self._h is None:
            self._h, self.projection_defect = log_derivative(self.g, self.lattice, self.algebra)
        return self._h

    @property
    def inv(self) -> "GaugeFunction":
        return GaugeFunction(self.algebra.inv(self.g), self.lattice, self.algebra)

    def __matmul__(self, other: "GaugeFunction") -> "GaugeFunction":
        return GaugeFunction(self.g @ other.g, self.lattice, self.algebra)

    def Ad(self) -> np.ndarray:
        """Coordinate matrices of Ad(g), shape (N1, N2, N3, dim, dim)."""
        return self.algebra.Ad(self.g)


def apply_ad(R: np.ndarray, w: FormField) -> FormField:
    """Apply sitewise coordinate matrices R[..., c, a] to a form."""
    if w.algebra.abelian:
        return w.copy()
    return w.like(np.einsum("xyzca,saxyz->scxyz", R, w.data))


def _matrix_partial(g: np.ndarray, lattice: Lattice, axis: int) -> np.ndarray:
    """Spectral derivative of the matrix entries of g along one axis."""
    arr = np.moveaxis(g, (-2, -1), (0, 1))  # (n, n, N1, N2, N3)
    if lattice.bc == "periodic":
        tag, base = "fourier", 0.0
    elif lattice.bc == "neumann":
        tag, base = "cos", 0.0
    else:
        tag, base = "sin", 1.0
    shifted = arr - base * np.eye(arr.shape[0])[:, :, None, None, None]
    re, _ = lt.partial(np.ascontiguousarray(shifted.real), axis, tag, lattice.lengths[axis])
    im, _ = lt.partial(np.ascontiguousarray(shifted.imag), axis, tag, lattice.lengths[axis])
    return np.moveaxis(re + 1j * im, (0, 1), (-2, -1))


def log_derivative(g: np.ndarray, lattice: Lattice, algebra: LieAlgebra) -> tuple[FormField, float]:
    """h = g^-1 dg from spectral derivatives of the entries of g, projected to the algebra.

    Returns the form and the largest sitewise size of the discarded non-algebra part.
    """
    ginv = algebra.inv(g)
    data = np.empty((3, algebra.dim) + lattice.shape)
    defect = 0.0
    for j in range(3):
        m = ginv @ _matrix_partial(g, lattice, j)
        p = algebra.project(m)
        defect = max(defect, float(np.max(np.abs(m - p))))
        data[j] = algebra.coords(p)
    return FormField(data, 1, lattice, algebra), defect


def gauge_transform(C: FormField, g: GaugeFunction) -> FormField:
    """C^g = g^-1 C g + g^-1 dg."""
    return apply_ad(g.inv.Ad(), C) + g.h


def conjugate_form(w: FormField, g: GaugeFunction) -> FormField:
    """g^-1 w g sitewise."""
    return apply_ad(g.inv.Ad(), w)


# dexp ------------------------------------------------------------------------


def dexp_inverse_apply(x: np.ndarray, y: np.ndarray, algebra: LieAlgebra) -> np.ndarray:
    """((1 - e^{-ad X}) / ad X) Y for coordinate arrays x (dim, ...) and y (dim, ...).

    With K = ad X satisfying K^3 = -r^2 K this equals
    Y - (1 - cos r)/r^2 K Y + (r - sin r)/r^3 K^2 Y.
    """
    if algebra.abelian:
        return y.copy()
    if algebra.name != "su2":
        raise NotImplementedError
    r = np.sqrt(np.sum(x * x, axis=0)) / np.sqrt(algebra.scale)
    small = r < 1e-4
    rs = np.where(small, 1.0, r)
    a = np.where(small, 0.5 - r**2 / 24.0, (1.0 - np.cos(rs)) / rs**2)
    b = np.where(small, 1.0 / 6.0 - r**2 / 120.0, (rs - np.sin(rs)) / rs**3)
    ky = algebra.bracket_coords(x, y)
    kky = algebra.bracket_coords(x, ky)
    return y - a * ky + b * kky


# the gauge ODE ---------------------------------------------------------------


@dataclass
class GaugePath:
    """g_eps and h_eps = g_eps^-1 dg_eps at the mesh nodes from eps onward."""

    times: np.ndarray
    g: list
    h: list
    lattice: Lattice
    algebra: LieAlgebra
    eps: float
    max_reprojection: float = 0.0

    def at(self, n: int) -> GaugeFunction:
        return GaugeFunction(self.g[n], self.lattice, self.algebra, eps=self.eps,
                             _h=FormField(self.h[n], 1, self.lattice, self.algebra))


class _PhiIntegrals:
    """Exact substep integrals of phi = d*C under an exponential interpolant.

    On [t_n, t_n + h] each spectral mode of C is modelled as
    c(s) = e^{-lam s} c_n + s phi1(-lam s) m_n with m_n fixed by c(h) = c_{n+1}.
    This is exact for the linear part of the flow and second order overall.
    """

    def __init__(self, traj):
        self.traj = traj
        lat = traj.lattice
        self.tags = lat.form_parities(1)
        self.lam = [lt.eigenvalues(lat, t) for t in self.tags]
        self._n = None

    def _coeffs(self, n):
        data = self.traj.fields[n]
        return [lt.forward(data[i], self.tags[i]) for i in range(3)]

    def load(self, n):
        if self._n == n:
            return
        t = self.traj.times
        h = t[n + 1] - t[n]
        c0, c1 = self._coeffs(n), self._coeffs(n + 1)
        self.c0 = c0
        self.m = []
        for i in range(3):
            z = -h * self.lam[i]
            self.m.append((c1[i] - np.exp(z) * c0[i]) / (h * phi1(z)))
        self.t0 = t[n]
        self._n = n

    def integral(self, a, b):
        """int_a^b phi(s) ds for t_n <= a < b <= t_{n+1} (absolute times)."""
        sa, sb = a - self.t0, b - self.t0
        comps = []
        for i in range(3):
            lam = self.lam[i]
            e1 = sb * phi1(-lam * sb) - sa * phi1(-lam * sa)
            e2 = sb**2 * phi2(-lam * sb) - sa**2 * phi2(-lam * sa)
            comps.append(lt.inverse(e1 * self.c0[i] + e2 * self.m[i], self.tags[i]))
        w = FormField(np.stack(comps), 1, self.traj.lattice, self.traj.algebra)
        return F.d_star(w).data[0]


def integrate_gauge_path(traj, start: int = 0, stop: int | None = None, substeps: int = 2) -> GaugePath:
    """Solve dg/dt g^-1 = d*C(t), g(t_start) = I, up to node ``stop``.

    Each mesh interval is split into ``substeps`` first-order Magnus steps
    g <- exp(int phi ds) g, with the integral taken exactly under the
    exponential interpolant of :class:`_PhiIntegrals`.  Identical steps make
    the cocycle g_delta(t) = g_eps(t) g_delta(eps) exact.
    """
    times = np.asarray(traj.times)
    stop = len(times) - 1 if stop is None else stop
    if not 0 <= start <= stop < len(times):
        raise ValueError("gauge path endpoints must be mesh nodes with start <= stop")
    lat, alg = traj.lattice, traj.algebra
    phi_int = _PhiIntegrals(traj)
    ptags = lat.form_parities(0)[0]
    g = alg.identity(lat.shape)
    h = np.zeros((3, alg.dim) + lat.shape)
    gs, hs = [g.copy()], [h.copy()]
    worst = 0.0
    for n in range(start, stop):
        phi_int.load(n)
        t0, t1 = times[n], times[n + 1]
        step = (t1 - t0) / substeps
        for m in range(substeps):
            x = phi_int.integral(t0 + m * step, t0 + (m + 1) * step)
            E = alg.exp(x)
            # h <- h + Ad(g^-1)(E^-1 dE)
            dx = np.stack([lt.partial(x, j, ptags[j], lat.lengths[j])[0] for j in range(3)])
            incr = np.stack([dexp_inverse_apply(x, dx[j], alg) for j in range(3)])
            if alg.abelian:
                h = h + incr
            else:
                R = alg.Ad(alg.inv(g))
                h = h + np.einsum("xyzca,saxyz->scxyz", R, incr)
            g = E @ g
            defect = alg.unitarity_defect(g)
            worst = max(worst, defect)
            if defect > 1e-8:
                g = alg.reproject(g)
        gs.append(g.copy())
        hs.append(h.copy())
    return GaugePath(times[start:stop + 1], gs, hs, lat, alg, float(times[start]), worst)


def integrate_gauge_ode(traj, eps_index: int, t_index: int, substeps: int = 2) -> GaugeFunction:
    """g_eps(t) as a GaugeFunction."""
    if eps_index > t_index:
        raise ValueError("start time must not exceed end time")
    path = integrate_gauge_path(traj, eps_index, t_index, substeps)
    return path.at(len(path.g) - 1)


# reconstruction ----------------------------------------------------------------


@dataclass
class Reconstruction:
    """A(t) = C(t)^{g(t)}, the strong-solution gauge A_hat(t) = A(t)^{g0}, and checks."""

    times: np.ndarray
    A: list
    A_hat: list
    B_A: list
    path: GaugePath
    g0: GaugeFunction
    tau_index: int
    series: dict


def reconstruct_a(traj, tau_index: int | None = None, eps_index: int = 0, substeps: int = 2,
                  direct_curvature: bool = True) -> Reconstruction:
    """Convert an augmented trajectory into a solution of the Yang-Mills heat equation.

    A(t) = C(t)^{g_eps(t)} with eps the node ``eps_index`` (default the first node,
    t = 0, which is finite on a lattice).  The ratio gauge g0 = g(tau)^-1 gives
    A_hat(t) = Ad(g(tau))(A(t) - h(tau)) = C(t)^{g(t) g(tau)^-1}.
    """
    n_nodes = len(traj.times)
    if tau_index is None:
        tau_index = n_nodes // 2
    if not eps_index <= tau_index < n_nodes:
        raise ValueError("anchor must be a mesh node after eps")
    path = integrate_gauge_path(traj, eps_index, n_nodes - 1, substeps)
    alg = traj.algebra
    k_tau = tau_index - eps_index
    g_tau = path.g[k_tau]
    h_tau = FormField(path.h[k_tau], 1, traj.lattice, alg)
    R_tau = alg.Ad(g_tau)
    A, A_hat, B_A = [], [], []
    ser = {k: [] for k in ("B_A_L2", "B_C_L2", "covariance_rel", "direct_curvature_sitewise", "A_H1", "A_hat_H1")}
    for k in range(len(path.g)):
        n = eps_index + k
        st = traj.state(n)
        gf = path.at(k)
        Rinv = alg.Ad(alg.inv(gf.g))
        a_n = apply_ad(Rinv, st.C) + gf.h
        b_n = apply_ad(Rinv, st.B)
        ahat = apply_ad(R_tau, a_n - h_tau)
        A.append(a_n.data)
        A_hat.append(ahat.data)
        B_A.append(b_n.data)
        bc = st.B.norm()
        ba = b_n.norm()
        ser["B_C_L2"].append(bc)
        ser["B_A_L2"].append(ba)
        ser["covariance_rel"].append(abs(ba - bc) / max(bc, 1e-300))
        if direct_curvature:
            diff = F.curvature(a_n) - b_n
            ser["direct_curvature_sitewise"].append(float(np.max(diff.pointwise_norm())) /
                                                    max(float(np.max(b_n.pointwise_norm())), 1e-300))
        ser["A_H1"].append(a_n.sobolev_norm(1.0))
        ser["A_hat_H1"].append(ahat.sobolev_norm(1.0))
        traj._states.pop(n - 1, None)
    series = {k: np.asarray(v) for k, v in ser.items()}
    g0 = GaugeFunction(alg.inv(g_tau), traj.lattice, alg,
                       _h=apply_ad(R_tau, -h_tau))
    rec = Reconstruction(np.asarray(path.times), A, A_hat, B_A, path, g0, tau_index, series)
    return rec


def strong_residual(rec: Reconstruction, lattice: Lattice, algebra: LieAlgebra) -> np.ndarray:
    """||A_hat' + d*_{A_hat} B_{A_hat}|| / ||A_hat'|| at interior nodes (central differences)."""
    t = rec.times
    arr = np.stack(rec.A_hat)
    deriv = central_derivative(t, arr)
    out = np.zeros(len(t) - 2)
    for i in range(len(t) - 2):
        ah = FormField(arr[i + 1], 1, lattice, algebra)
        vel = F.direct_velocity(ah)
        dv = FormField(deriv[i], 1, lattice, algebra)
        out[i] = (dv - vel).norm() / max(vel.norm(), 1e-300)
    return out


def pure_gauge(g: GaugeFunction) -> FormField:
    """g^-1 dg, a flat connection."""
    return g.h


# representation of g^-1 dg --------------------------------------------------------


def representation_check(traj, eps_index: int = 0, t_index: int | None = None, substeps: int = 2,
                         path: GaugePath | None = None) -> dict:
    """Compare h_eps(t) with C_hat(eps) - a(t) C_hat(t) + int_eps^t a(s) chi(s) ds.

    C_hat = P^perp C, a(s) = Ad(g_eps(s)^-1) and
    chi = [C_hat, phi] - P^perp(d_C* B + [C, phi]), with inadmissible modes removed
    inside the projection as in the flow.
    The integral uses the trapezoid rule on the mesh nodes.
    """
    n_nodes = len(traj.times)
    t_index = n_nodes - 1 if t_index is None else t_index
    if path is None:
        path = integrate_gauge_path(traj, eps_index, t_index, substeps)
    alg = traj.algebra
    integrand = []
    chat_eps = chat_t = None
    a_t = None
    for k in range(t_index - eps_index + 1):
        n = eps_index + k
        st = traj.state(n)
        chat = F.vertical_projection(st.C)
        # the flow drops inadmissible modes of the nonlinear term, so chi does too
        chi = F.bracket_scalar(chat, st.phi) - F.vertical_projection(
            (F.covariant_d_star(st.C, st.B) + F.bracket_scalar(st.C, st.phi)).project())
        R = alg.Ad(alg.inv(path.g[k]))
        integrand.append(apply_ad(R, chi).data)
        if k == 0:
            chat_eps = chat
        chat_t = chat
        a_t = R
    integ = cumulative(np.asarray(traj.times[eps_index:t_index + 1]), np.stack(integrand))[-1]
    rhs = chat_eps - apply_ad(a_t, chat_t) + FormField(integ, 1, traj.lattice, alg)
    lhs = FormField(path.h[t_index - eps_index], 1, traj.lattice, alg)
    scale = max(lhs.norm(), rhs.norm())
    return {
        "lhs_L2": lhs.norm(),
        "rhs_L2": rhs.norm(),
        "abs": (lhs - rhs).norm(),
        "rel": (lhs - rhs).norm() / scale if scale > 0 else 0.0,
    }


# epsilon family (reports) ---------------------------------------------------------


def oscillation(g: np.ndarray, lattice: Lattice) -> float:
    """Largest Frobenius jump |g(x + e_j) - g(x)| between neighbouring sites."""
    worst = 0.0
    for j in range(3):
        ax = j - 5  # spatial axes precede the two matrix axes
        if lattice.periodic:
            jump = np.roll(g, -1, axis=ax) - g
        else:
            jump = np.diff(g, axis=ax)
        worst = max(worst, float(np.max(np.sqrt(np.sum(np.abs(jump) ** 2, axis=(-2, -1))))))
    return worst


def epsilon_family_report(traj, eps_indices, t_index: int | None = None, substeps: int = 2) -> dict:
    """g_eps(t) for several starting nodes eps at a fixed node t.

    Reports rho_2(g_eps, g_eps') = |h_eps - h_eps'|_2 + |g_eps - g_eps'|_2 for
    successive entries, |h_eps(t)|_{H_a}, the H_1 norms of A = C^{g_eps} and of
    A_hat = A^{g_eps(t)^-1}, and the site oscillation of g_eps(t).  Nothing is asserted.
    """
    n_nodes = len(traj.times)
    t_index = n_nodes - 1 if t_index is None else t_index
    eps_indices = sorted(eps_indices)
    if not eps_indices or eps_indices[-1] > t_index or eps_indices[0] < 0:
        raise ValueError("eps nodes must lie in [0, t]")
    alg, lat = traj.algebra, traj.lattice
    C = traj.field(t_index)
    gs, hs, rows = [], [], []
    for e in eps_indices:
        path = integrate_gauge_path(traj, e, t_index, substeps)
        g, h = path.g[-1], FormField(path.h[-1], 1, lat, alg)
        A = apply_ad(alg.Ad(alg.inv(g)), C) + h
        gs.append(g)
        hs.append(h)
        rows.append({"eps": float(traj.times[e]), "h_Ha": h.sobolev_norm(traj.a), "A_H1": A.sobolev_norm(1.0),
                     "oscillation": oscillation(g, lat)})
    rho = [float("nan")]
    for k in range(1, len(gs)):
        dist = float(np.sqrt(np.sum(np.abs(gs[k] - gs[k - 1]) ** 2) * lat.cell_volume))
        rho.append((hs[k] - hs[k - 1]).norm() + dist)
    for r, v in zip(rows, rho):
        r["rho2_to_previous"] = v
    return {"t": float(traj.times[t_index]), "rows": rows}
