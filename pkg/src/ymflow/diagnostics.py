"""Trajectory-level checks: energy identities, differential inequalities,
action functionals, energy bounds, Neumann domination, exponent fits,
uniqueness comparison, the Cauchy bound for the gauge functions and free
propagation.

Every check returns a dict with raw series and a slack or residual; the
caller decides on tolerances.  Inequalities whose two sides differ by an
algebraic identity are evaluated through that identity, so the slack is
free of time-discretization error; finite-difference versions are reported
alongside.  These identities assume the trajectory velocity is the
unfiltered C' = -(d_C* B + d_C phi), so runs fed to them use dealias=False or
fully resolved data.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import forms as F
from . import lattice as lt
from . import sobolev
from .flow import Trajectory
from .forms import FormField
from .gauge import integrate_gauge_path
from .quadrature import central_derivative, cumulative, richardson_error, weighted_cumulative


# per-node quantities ------------------------------------------------------------------


def node_terms(traj: Trajectory, n: int) -> dict:
    """Scalars at node n used by the identities and inequalities."""
    st = traj.state(n)
    C, B, Cp = st.C, st.B, st.velocity
    out = {"B2": B.norm() ** 2, "B_L2": B.norm(), "B_Linf": B.lp_norm(np.inf), "Cp2": Cp.norm() ** 2,
           "C_L6": C.lp_norm(6.0)}
    if traj.kind == "direct":
        return out
    phi = st.phi
    dC_cp = F.covariant_d(C, Cp)
    ds_cp = F.covariant_d_star(C, Cp)
    out.update({
        "phi2": phi.norm() ** 2,
        "cross1": Cp.inner(F.bracket_scalar(C, phi)),
        "dC_Cp2": dC_cp.norm() ** 2,
        "dsC_Cp2": ds_cp.norm() ** 2,
        "cross2a": B.inner(F.wedge_bracket(Cp, Cp)),
        "cross2b": F.interior_bracket(C, Cp).inner(ds_cp),
        "dC_phi2": F.covariant_d(C, phi).norm() ** 2,
        "phi_L6": phi.lp_norm(6.0),
        "Cp_L6": Cp.lp_norm(6.0),
    })
    return out


def trajectory_terms(traj: Trajectory) -> dict:
    """node_terms stacked over the mesh (cached on the trajectory)."""
    if "_terms" in traj.meta:
        return traj.meta["_terms"]
    rows = []
    for n in range(len(traj)):
        rows.append(node_terms(traj, n))
        traj._states.pop(n, None)
    out = {k: np.asarray([r[k] for r in rows]) for k in rows[0]}
    out["t"] = np.asarray(traj.times, dtype=float)
    traj.meta["_terms"] = out
    return out


def refinement_order(errors, ratio: float = 2.0) -> np.ndarray:
    """Observed orders log(e_k / e_{k+1}) / log(ratio) for successive refinements."""
    e = np.asarray(errors, dtype=float)
    return np.log(e[:-1] / e[1:]) / np.log(ratio)


# energy identities ----------------------------------------------------------------------


def energy_identity_check(traj: Trajectory) -> dict:
    """Central-difference left sides against the analytic right sides at interior nodes.

    Augmented flow:
      d/ds(|B|^2 + |phi|^2) + 2|C'|^2 = -2(C', [C, phi])
      d/ds |C'|^2 + 2(|d_C C'|^2 + |d_C* C'|^2) = -2(B, [C' ^ C']) + 2([C _| C'], d_C* C')
    Direct flow:
      d/ds |B|^2 = -2|A'|^2
    """
    T = trajectory_terms(traj)
    t = T["t"]
    if traj.kind == "direct":
        lhs = central_derivative(t, T["B2"])
        rhs = -2.0 * T["Cp2"][1:-1]
        scale = max(float(np.max(np.abs(rhs))), 1e-300)
        res = np.abs(lhs - rhs)
        return {"t": t[1:-1], "residual": res, "max_residual": float(res.max()) / scale,
                "scale": scale, "monotone_slack": float(np.min(-np.diff(T["B2"])))}
    lhs1 = central_derivative(t, T["B2"] + T["phi2"]) + 2.0 * T["Cp2"][1:-1]
    rhs1 = -2.0 * T["cross1"][1:-1]
    lhs2 = central_derivative(t, T["Cp2"]) + 2.0 * (T["dC_Cp2"] + T["dsC_Cp2"])[1:-1]
    rhs2 = (-2.0 * T["cross2a"] + 2.0 * T["cross2b"])[1:-1]
    s1 = max(float(np.max(2.0 * T["Cp2"])), 1e-300)
    s2 = max(float(np.max(2.0 * (T["dC_Cp2"] + T["dsC_Cp2"]))), 1e-300)
    r1, r2 = np.abs(lhs1 - rhs1), np.abs(lhs2 - rhs2)
    return {"t": t[1:-1], "residual_order1": r1, "residual_order2": r2,
            "max_residual_order1": float(r1.max()) / s1, "max_residual_order2": float(r2.max()) / s2,
            "scale_order1": s1, "scale_order2": s2}


# inequality ledger ---------------------------------------------------------------------


def inequality_constants(lattice, algebra) -> dict:
    """Constants of the order-1/2 differential inequalities and of lambda(B)."""
    c = algebra.commutator_bound()
    kappa = sobolev.kappa_gfs(lattice)
    k6 = sobolev.kappa_6(lattice)
    return {
        "c": c, "kappa": kappa, "kappa_6": k6,
        "a1": 0.5, "a2": 2.0 * k6**2 * c**4,
        "b1": 0.75, "b2": (4.0 * kappa * c**2) ** 2, "b3": kappa**6 * c**4 * 19.0 * 27.0 / 16.0,
        "gamma": 27.0 / 4.0 * kappa**6 * c**4,
    }


@dataclass
class InequalityLedger:
    """alpha, beta, lambda(B), psi and their cumulative integrals at the mesh nodes."""

    t: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    lam: np.ndarray
    psi: np.ndarray
    alpha_cum: np.ndarray
    beta_cum: np.ndarray
    consts: dict
    slacks: dict = field(default_factory=dict)

    @classmethod
    def build(cls, traj: Trajectory, consts: dict | None = None) -> "InequalityLedger":
        consts = consts or inequality_constants(traj.lattice, traj.algebra)
        T = trajectory_terms(traj)
        t = T["t"]
        c6 = T["C_L6"] ** 4
        alpha = consts["a1"] + consts["a2"] * c6
        beta = consts["b1"] + consts["b2"] * c6 + consts["b3"] * T["B_L2"] ** 4
        lam = 1.0 + consts["gamma"] * T["B_L2"] ** 4
        psi = 2.0 * cumulative(t, lam)
        return cls(t, alpha, beta, lam, psi, cumulative(t, alpha), cumulative(t, beta), consts)

    def alpha_st(self, s_index, t_index):
        """alpha_s^t = int_s^t alpha."""
        return self.alpha_cum[t_index] - self.alpha_cum[s_index]

    def beta_st(self, s_index, t_index):
        return self.beta_cum[t_index] - self.beta_cum[s_index]


def differential_inequality_check(traj: Trajectory, ledger: InequalityLedger | None = None) -> dict:
    """Slack of the order-1 and order-2 differential inequalities at every node.

    Through the energy identities the slacks are
      order 1: alpha |phi|^2 + |C'|^2 + 2(C', [C, phi])
      order 2: beta |C'|^2 + |d_C C'|^2 + |d_C* C'|^2 + 2(B, [C' ^ C']) - 2([C _| C'], d_C* C')
    The finite-difference forms are reported at interior nodes.
    """
    ledger = ledger or InequalityLedger.build(traj)
    T = trajectory_terms(traj)
    t = T["t"]
    s1 = ledger.alpha * T["phi2"] + T["Cp2"] + 2.0 * T["cross1"]
    diss = T["dC_Cp2"] + T["dsC_Cp2"]
    s2 = ledger.beta * T["Cp2"] + diss + 2.0 * T["cross2a"] - 2.0 * T["cross2b"]
    fd1 = (ledger.alpha * T["phi2"])[1:-1] - (central_derivative(t, T["B2"] + T["phi2"]) + T["Cp2"][1:-1])
    fd2 = (ledger.beta * T["Cp2"])[1:-1] - (central_derivative(t, T["Cp2"]) + diss[1:-1])
    scale1 = max(float(np.max(ledger.alpha * T["phi2"] + T["Cp2"])), 1e-300)
    scale2 = max(float(np.max(ledger.beta * T["Cp2"] + diss)), 1e-300)
    ledger.slacks.update({"order1": s1, "order2": s2})
    return {"t": t, "slack_order1": s1, "slack_order2": s2, "fd_slack_order1": fd1, "fd_slack_order2": fd2,
            "min_rel_order1": float(s1.min()) / scale1, "min_rel_order2": float(s2.min()) / scale2,
            "scale_order1": scale1, "scale_order2": scale2, "constants": ledger.consts}


def gfs_check(traj: Trajectory, ledger: InequalityLedger | None = None, forms: str = "velocity") -> dict:
    """|w|_6^2 <= kappa^2 {|d_C* w|^2 + |d_C w|^2 + lambda(B)|w|^2} for w = C' (or B)."""
    ledger = ledger or InequalityLedger.build(traj)
    k2 = ledger.consts["kappa"] ** 2
    slack, scale = np.zeros(len(traj)), np.zeros(len(traj))
    for n in range(len(traj)):
        st = traj.state(n)
        w = st.velocity if forms == "velocity" else st.B
        rhs = k2 * (F.covariant_d_star(st.C, w).norm() ** 2 + F.covariant_d(st.C, w).norm() ** 2
                    + ledger.lam[n] * w.norm() ** 2)
        lhs = w.lp_norm(6.0) ** 2
        slack[n], scale[n] = rhs - lhs, rhs
        traj._states.pop(n, None)
    sc = max(float(scale.max()), 1e-300)
    return {"t": ledger.t, "slack": slack, "min_rel": float(slack.min()) / sc, "scale": sc}


def kato_check(traj: Trajectory) -> dict:
    """|phi|_6^2 <= kappa_6^2 (|d_C phi|^2 + |phi|^2)."""
    k6 = sobolev.kappa_6(traj.lattice)
    T = trajectory_terms(traj)
    rhs = k6**2 * (T["dC_phi2"] + T["phi2"])
    slack = rhs - T["phi_L6"] ** 2
    sc = max(float(rhs.max()), 1e-300)
    return {"t": T["t"], "slack": slack, "min_rel": float(slack.min()) / sc, "scale": sc}


# action functionals and energy bounds -----------------------------------------------------


@dataclass
class ActionReport:
    t: np.ndarray
    a: float
    rho: np.ndarray
    strong_action: np.ndarray
    magnetic_action: np.ndarray
    errors: dict

    @property
    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.rho)))


def action_functionals(traj: Trajectory, a: float | None = None, B_L2=None) -> ActionReport:
    """rho_a(t) = (1-a) int_0^t s^-a |B|^2, the strong a-action int s^-a |C|_{H1}^2
    and the magnetic action int s^-1/2 |B|^2.

    ``B_L2`` overrides the curvature norms (e.g. those of B_A from a
    reconstruction) for the gauge-invariance comparison.
    """
    a = traj.a if a is None else a
    t = np.asarray(traj.times, dtype=float)
    b2 = (np.asarray(B_L2) if B_L2 is not None else trajectory_terms(traj)["B_L2"]) ** 2
    if "C_H1" in traj.series:
        c2 = traj.series["C_H1"] ** 2
    else:
        c2 = np.asarray([traj.field(n).sobolev_norm(1.0) ** 2 for n in range(len(traj))])
    rho = (1.0 - a) * weighted_cumulative(t, b2, -a)
    strong = weighted_cumulative(t, c2, -a)
    mag = weighted_cumulative(t, b2, -0.5)
    errors = {"rho": (1.0 - a) * richardson_error(t, b2, -a),
              "strong_action": richardson_error(t, c2, -a),
              "magnetic_action": richardson_error(t, b2, -0.5)}
    return ActionReport(t, a, rho, strong, mag, errors)


def _exp_weighted_cumulative(t, f, q, cum):
    """int_0^t s^q e^{cum(t) - cum(s)} f(s) ds at every node."""
    return np.exp(cum) * weighted_cumulative(t, np.exp(-cum) * f, q)


def order1_energy_bound_check(traj: Trajectory, a: float | None = None,
                              ledger: InequalityLedger | None = None) -> dict:
    """Direct flow: residual of t^{1-a}|B|^2 + 2 int s^{1-a}|A'|^2 = rho_a(t).
    Augmented: slack of
      t^{1-a}(|B|^2 + |phi|^2) + int s^{1-a} e^{alpha_s^t}|C'|^2
        <= (1-a) int s^-a e^{alpha_s^t}(|B|^2 + |phi|^2).
    """
    a = traj.a if a is None else a
    T = trajectory_terms(traj)
    t = T["t"]
    if traj.kind == "direct":
        rho = (1.0 - a) * weighted_cumulative(t, T["B2"], -a)
        lhs = t ** (1.0 - a) * T["B2"] + 2.0 * weighted_cumulative(t, T["Cp2"], 1.0 - a)
        res = np.abs(lhs - rho)
        sc = max(float(rho.max()), 1e-300)
        return {"t": t, "lhs": lhs, "rhs": rho, "residual": res, "max_rel_residual": float(res.max()) / sc,
                "scale": sc}
    ledger = ledger or InequalityLedger.build(traj)
    e = T["B2"] + T["phi2"]
    lhs = t ** (1.0 - a) * e + _exp_weighted_cumulative(t, T["Cp2"], 1.0 - a, ledger.alpha_cum)
    rhs = (1.0 - a) * _exp_weighted_cumulative(t, e, -a, ledger.alpha_cum)
    slack = rhs - lhs
    sc = max(float(rhs.max()), 1e-300)
    return {"t": t, "lhs": lhs, "rhs": rhs, "slack": slack, "min_rel": float(slack[1:].min()) / sc, "scale": sc}


def order2_energy_bound_check(traj: Trajectory, a: float | None = None,
                              ledger: InequalityLedger | None = None) -> dict:
    """Slack of
      t^{2-a}|C'|^2 + int s^{2-a} e^{beta_s^t}(|d_C* C'|^2 + |d_C C'|^2)
        <= (2-a)(1-a) e^{beta_0^t} int s^-a (|B|^2 + |phi|^2).
    """
    a = traj.a if a is None else a
    ledger = ledger or InequalityLedger.build(traj)
    T = trajectory_terms(traj)
    t = T["t"]
    diss = T["dC_Cp2"] + T["dsC_Cp2"]
    lhs = t ** (2.0 - a) * T["Cp2"] + _exp_weighted_cumulative(t, diss, 2.0 - a, ledger.beta_cum)
    rhs = (2.0 - a) * (1.0 - a) * np.exp(ledger.beta_cum) * weighted_cumulative(t, T["B2"] + T["phi2"], -a)
    slack = rhs - lhs
    sc = max(float(rhs.max()), 1e-300)
    return {"t": t, "lhs": lhs, "rhs": rhs, "slack": slack, "min_rel": float(slack[1:].min()) / sc, "scale": sc}


def order3_trend(traj: Trajectory, a: float | None = None) -> dict:
    """t^{3-a}|B'|^2 against the candidate (1-a) int_0^t s^-a (|B|^2 + |phi|^2).

    B' is a central difference of the curvature fields at interior nodes.  The
    dominating constant is not explicit, so only the ratio is reported.
    """
    a = traj.a if a is None else a
    T = trajectory_terms(traj)
    t = T["t"]
    B = np.stack([traj.state(n).B.data for n in range(len(traj))])
    dB = central_derivative(t, B)
    cv = traj.lattice.cell_volume
    dB2 = np.sum(dB**2, axis=tuple(range(1, dB.ndim))) * cv
    lhs = t[1:-1] ** (3.0 - a) * dB2
    e = T["B2"] + (T["phi2"] if "phi2" in T else 0.0)
    cand = (1.0 - a) * weighted_cumulative(t, e, -a)[1:-1]
    ratio = np.where(cand > 0, lhs / np.where(cand > 0, cand, 1.0), 0.0)
    return {"t": t[1:-1], "lhs": lhs, "candidate": cand, "ratio": ratio, "max_ratio": float(ratio.max())}


# Neumann domination -----------------------------------------------------------------------


def scalar_heat(f: np.ndarray, t: float, lattice) -> np.ndarray:
    """e^{t Delta} on scalar site functions: Neumann (cosine) on boxes, Fourier on the torus."""
    tags = lattice.scalar_parity()
    return lt.apply_multiplier(f, tags, np.exp(-t * lt.eigenvalues(lattice, tags)))


def _domination_sources(traj: Trajectory, n: int):
    st = traj.state(n)
    b_src = F.bochner_product(st.B, st.B) - F.bracket_scalar(st.B, st.phi)
    p_src = F.interior_bracket(st.C, st.velocity)
    return (st.B.pointwise_norm(), b_src.pointwise_norm(), st.phi.pointwise_norm(), p_src.pointwise_norm())


def neumann_domination_check(traj: Trajectory, t_index: int) -> dict:
    """Sitewise slack of |w(t)| <= (1/t) int_0^t e^{(t-s)Delta}(|w(s)| + s|h(s)|) ds for
    w = B with h = B # B - [B, phi] and for w = phi with h = [C _| C'].

    The time integral is the trapezoid rule over the mesh nodes up to t.
    """
    if traj.kind != "augmented":
        raise ValueError("domination check needs an augmented trajectory")
    if t_index < 1:
        raise ValueError("t must be a positive mesh node")
    t = np.asarray(traj.times[: t_index + 1], dtype=float)
    lat = traj.lattice
    tt = t[-1]
    acc_b, acc_p = [], []
    for n in range(t_index + 1):
        b, hb, p, hp = _domination_sources(traj, n)
        acc_b.append(scalar_heat(b + t[n] * hb, tt - t[n], lat))
        acc_p.append(scalar_heat(p + t[n] * hp, tt - t[n], lat))
        if n < t_index:
            traj._states.pop(n, None)
    rhs_b = cumulative(t, np.stack(acc_b))[-1] / tt
    rhs_p = cumulative(t, np.stack(acc_p))[-1] / tt
    b_now, _, p_now, _ = _domination_sources(traj, t_index)
    slack_b = rhs_b - b_now
    slack_p = rhs_p - p_now
    bmax = float(b_now.max())
    pmax = float(p_now.max())
    return {"t": tt, "slack_B": slack_b, "slack_phi": slack_p, "B_Linf": bmax, "phi_Linf": pmax,
            "min_slack_B": float(slack_b.min()), "min_slack_phi": float(slack_p.min()),
            "min_rel_B": float(slack_b.min()) / max(bmax, 1e-300),
            "min_rel_phi": float(slack_p.min()) / max(bmax, 1e-300)}


# exponent fits ----------------------------------------------------------------------------


EXPONENT_TARGETS = {
    "B_inf": lambda a, p=None: -1.0 + (a - 0.5) / 2.0,
    "B_p": lambda a, p=6.0: -1.0 + 3.0 / (2.0 * p) + (a - 0.5) / 2.0,
    "phi_p": lambda a, p=6.0: -1.0 + 3.0 / (2.0 * p) + (a - 0.5) / 2.0,
}


def blowup_exponent_fit(traj: Trajectory, quantity: str, a: float | None = None, p: float = 6.0,
                        t_min: float | None = None, t_max: float | None = None, min_nodes: int = 8) -> dict:
    """Least-squares slope of log(quantity) against log(t) on the early-time window
    [t_min, t_max] (default: first positive node to T/10)."""
    a = traj.a if a is None else a
    t = np.asarray(traj.times, dtype=float)
    if quantity == "B_inf":
        key = "B_Linf"
    elif quantity == "B_p":
        key = f"B_L{int(p)}"
    elif quantity == "phi_p":
        key = f"phi_L{int(p)}"
    else:
        raise ValueError(f"unknown quantity {quantity!r}")
    if key in traj.series:
        y = np.asarray(traj.series[key])
    else:
        fn = (lambda st: st.B.lp_norm(np.inf)) if quantity == "B_inf" else (
            (lambda st: st.B.lp_norm(p)) if quantity == "B_p" else (lambda st: st.phi.lp_norm(p)))
        y = np.asarray([fn(traj.state(n)) for n in range(len(traj))])
    t_min = t[1] if t_min is None else t_min
    t_max = t[-1] / 10.0 if t_max is None else t_max
    sel = (t >= t_min) & (t <= t_max) & (y > 0)
    target = EXPONENT_TARGETS[quantity](a, p)
    if int(sel.sum()) < min_nodes:
        return {"status": "unresolved", "nodes": int(sel.sum()), "target": target}
    slope, icpt = np.polyfit(np.log(t[sel]), np.log(y[sel]), 1)
    return {"status": "ok", "slope": float(slope), "intercept": float(icpt), "target": target,
            "nodes": int(sel.sum()), "window": (float(t[sel][0]), float(t[sel][-1]))}


# uniqueness -------------------------------------------------------------------------------


def uniqueness_constant(algebra) -> float:
    """c in d/dt|A1 - A2|^2 <= c(|B1|_inf + |B2|_inf)|A1 - A2|^2.

    With D = A1 - A2 one has
    d/dt |D|^2 = -2|d_{A2} D + 1/2 [D ^ D]|^2 - ([D ^ D], B1 + B2)
    and |[D ^ D]| <= (2c/sqrt 3)|D|^2 pointwise, c the commutator bound.
    """
    return 2.0 * algebra.commutator_bound() / np.sqrt(3.0)


def uniqueness_comparison(times, A1: list, A2: list, lattice, algebra) -> dict:
    """Differential slack of the uniqueness inequality, the contraction window and
    sup |A1 - A2|_2 inside it.

    f' is evaluated as 2(A1 - A2, A1' - A2') with A_i' = -d*_{A_i} B_i.
    """
    if len(A1) != len(A2) or len(A1) != len(times):
        raise ValueError("trajectories must share the time mesh")
    t = np.asarray(times, dtype=float)
    cu = uniqueness_constant(algebra)
    f = np.zeros(t.size)
    fp = np.zeros(t.size)
    u = np.zeros(t.size)
    for n in range(t.size):
        a1 = FormField(np.asarray(A1[n]), 1, lattice, algebra)
        a2 = FormField(np.asarray(A2[n]), 1, lattice, algebra)
        b1, b2 = F.curvature(a1), F.curvature(a2)
        dd = a1 - a2
        f[n] = dd.norm() ** 2
        fp[n] = 2.0 * dd.inner(F.direct_velocity(a1, b1) - F.direct_velocity(a2, b2))
        u[n] = cu * (b1.lp_norm(np.inf) + b2.lp_norm(np.inf))
    slack = u * f - fp
    w = np.sqrt(weighted_cumulative(t, u**2, 1.0)) if t[0] == 0 else np.sqrt(cumulative(t, t * u**2))
    window = w <= 0.5
    diff = np.sqrt(f)
    sup_in = float(diff[window].max()) if window.any() else float("nan")
    scale = max(float(np.max(np.abs(u * f))), float(np.max(np.abs(fp))), 1e-300)
    return {"t": t, "f": f, "fprime": fp, "u": u, "slack": slack, "min_rel_slack": float(slack.min()) / scale,
            "scale": scale, "w": w, "window_end": float(t[window][-1]) if window.any() else 0.0,
            "sup_diff_in_window": sup_in, "sup_diff": float(diff.max())}


# gauge functions -----------------------------------------------------------------------


def cauchy_bound_check(traj: Trajectory, delta_index: int, eps_index: int, t_index: int | None = None,
                       substeps: int = 2) -> dict:
    """|g_delta(t) - g_eps(t)|_2 <= int_delta^eps |phi(s)|_2 ds, delta < eps <= t.

    The left side uses the pointwise Frobenius norm; the algebra norm of phi
    dominates sqrt 2 times its operator norm for su(2) and u(1).
    """
    n = len(traj.times)
    t_index = n - 1 if t_index is None else t_index
    if not delta_index < eps_index <= t_index:
        raise ValueError("need delta < eps <= t")
    p_d = integrate_gauge_path(traj, delta_index, t_index, substeps)
    p_e = integrate_gauge_path(traj, eps_index, t_index, substeps)
    gd = p_d.g[-1]
    ge = p_e.g[-1]
    lhs = float(np.sqrt(np.sum(np.abs(gd - ge) ** 2) * traj.lattice.cell_volume))
    ts = np.asarray(traj.times[delta_index:eps_index + 1])
    if "phi_L2" in traj.series:
        ph = np.asarray(traj.series["phi_L2"][delta_index:eps_index + 1])
    else:
        ph = np.asarray([traj.state(k).phi.norm() for k in range(delta_index, eps_index + 1)])
    rhs = float(cumulative(ts, ph)[-1])
    return {"lhs": lhs, "rhs": rhs, "slack": rhs - lhs, "scale": max(rhs, 1e-300)}


# free propagation ---------------------------------------------------------------------------


def free_constants(a: float) -> dict:
    """c_a = sup_s s^{1-a} e^{-2s} and gamma_a^2 = int_0^inf s^-a e^{-2s} ds."""
    if not 0.0 <= a < 1.0:
        raise ValueError("need 0 <= a < 1")
    c_a = ((1.0 - a) / 2.0) ** (1.0 - a) * np.exp(-(1.0 - a)) if a < 1 else 1.0
    gamma2 = special.gamma(1.0 - a) * 2.0 ** (a - 1.0)
    return {"c_a": float(c_a), "gamma_a2": float(gamma2)}


def _mode_energies(C0: FormField):
    """Pairs (lambda, |coefficient|^2 dV) over the admissible modes of each component."""
    lams, ens = [], []
    spec = C0.transform()
    for i, tags in enumerate(spec.tags):
        lam = lt.eigenvalues(C0.lattice, tags)
        mask = lt.admissible_mask(C0.lattice, tags)
        e = np.sum(np.abs(spec.coeffs[i]) ** 2, axis=0) * C0.lattice.cell_volume
        lams.append(lam[mask])
        ens.append(e[mask])
    return np.concatenate(lams), np.concatenate(ens)


def free_propagation_check(C0: FormField, a: float, T: float = 0.5, n_times: int = 80,
                           t_min: float = 1e-12) -> dict:
    """Heat-propagated data: the bound e^{2t} c_a |C0|_{H_a}^2 >= t^{1-a}|e^{t Delta}C0|_{H_1}^2,
    its decrease to zero as t -> 0, and
    int_0^T t^-a |e^{t Delta}C0|_{H_1}^2 dt <= e^{2T} gamma_a^2 |C0|_{H_a}^2.

    All quantities are evaluated per mode in closed form.
    """
    k = free_constants(a)
    lam, en = _mode_energies(C0)
    ha2 = float(np.sum((1.0 + lam) ** a * en))
    ts = np.geomspace(t_min, T, n_times)
    val = np.asarray([t ** (1.0 - a) * np.sum((1.0 + lam) * np.exp(-2.0 * t * lam) * en) for t in ts])
    bound = np.exp(2.0 * ts) * k["c_a"] * ha2
    # int_0^T t^-a e^{-2 t lam} dt per mode
    pos = lam > 0
    tint = np.empty_like(lam)
    tint[~pos] = T ** (1.0 - a) / (1.0 - a)
    lp = lam[pos]
    tint[pos] = (2.0 * lp) ** (a - 1.0) * special.gamma(1.0 - a) * special.gammainc(1.0 - a, 2.0 * T * lp)
    integral = float(np.sum((1.0 + lam) * en * tint))
    int_bound = float(np.exp(2.0 * T) * k["gamma_a2"] * ha2)
    # the small-t end of the curve: increasing in t below the first turning point
    n_small = max(3, n_times // 4)
    trend_ok = bool(np.all(np.diff(val[:n_small]) > 0)) and val[0] <= 1e-2 * max(val.max(), 1e-300)
    sc = max(float(bound.max()), 1e-300)
    return {"t": ts, "value": val, "bound": bound, "min_rel_slack": float(np.min(bound - val)) / sc,
            "integral": integral, "integral_bound": int_bound,
            "integral_slack": int_bound - integral, "trend_decreasing_to_zero": trend_ok,
            "H_a2": ha2, **k}


def free_propagation_integral_quadrature(C0: FormField, a: float, T: float = 0.5, n: int = 400) -> float:
    """Same integral through heat applications on a graded mesh (independent route)."""
    t = T * (np.arange(n + 1) / n) ** (2.0 / (1.0 - a))
    vals = np.asarray([C0.heat(s).sobolev_norm(1.0) ** 2 for s in t])
    return float(weighted_cumulative(t, vals, -a)[-1])


# abelian end-to-end oracle --------------------------------------------------------------


def abelian_exact(A0: FormField, t: float) -> FormField:
    """e^{-t d*d} A0: exact modes are stationary, coexact modes decay like the heat flow."""
    grad = F.vertical_projection(A0)
    return grad + (A0 - grad).heat(t)


def abelian_oracle(n: int = 16, T: float = 0.1, h: float = 1e-3, seed: int = 0,
                   amplitude: float = 1.0, scheme: str = "etd2rk") -> dict:
    """Run the augmented flow on periodic U(1) data, reconstruct A(T) through the
    gauge ODE and compare with the closed-form solution of A' = -d*dA."""
    from .flow import TimeMesh, generate_initial_data, run_flow
    from .gauge import reconstruct_a
    from .lattice import Lattice
    from .lie import U1

    lat = Lattice.cube(n, "periodic")
    A0 = generate_initial_data(lat, U1, 0.5, amplitude, seed)
    steps = max(1, int(round(T / h)))
    traj = run_flow(A0, TimeMesh(T, steps, 1.0), scheme=scheme, record_series=False)
    rec = reconstruct_a(traj, tau_index=0, direct_curvature=False)
    A_T = FormField(rec.A[-1], 1, lat, U1)
    exact = abelian_exact(A0, T)
    err = (A_T - exact).norm() / exact.norm()
    return {"n": n, "T": T, "h": T / steps, "rel_error": float(err), "covariance": rec.series["covariance_rel"]}
