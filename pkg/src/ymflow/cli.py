"""Command line driver.

    ymflow flow run --config run.cfg [--set key=value ...] [--out DIR]
    ymflow flow reconstruct --config run.cfg
    ymflow flow bisect --config run.cfg [--lo A --hi B --iters K]
    ymflow diag NAME --traj DIR [--out DIR]
    ymflow oracle abelian [--n 16 --T 0.1 --h 1e-3]
    ymflow oracle inequalities [--trials 100]
    ymflow gauge-group battery [--n 12 --bc periodic]

Exit codes: 0 when every hard check passes, 1 when one fails (the failing
check is named on stderr), 2 for usage or configuration errors.
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import diagnostics as D
from . import flow as fl
from . import groups as Gr
from . import io
from . import oracles
from . import plotting
from .forms import FormField
from .gauge import epsilon_family_report, reconstruct_a, strong_residual
from .lie import get_algebra

DIAG_NAMES = ("energy", "inequalities", "gfs", "kato", "action", "order1", "order2", "order3", "domination",
              "exponents", "cauchy", "gauge_family", "free", "uniqueness")


class CheckFailed(RuntimeError):
    pass


class Report:
    """Collects named pass/fail lines and writes them to a table."""

    def __init__(self, out: str):
        self.out = out
        self.rows = []
        os.makedirs(out, exist_ok=True)

    def check(self, name: str, value: float, ok: bool, bound: str = ""):
        self.rows.append({"check": name, "value": float(value), "bound": bound, "status": "PASS" if ok else "FAIL"})
        print(f"{'PASS' if ok else 'FAIL'} {name}: {value:.6g} {bound}".rstrip())

    def path(self, name: str) -> str:
        return os.path.join(self.out, name)

    def finish(self, name: str = "checks.csv") -> int:
        if self.rows:
            io.write_table(self.path(name), self.rows)
        failed = [r["check"] for r in self.rows if r["status"] == "FAIL"]
        if failed:
            print("failed checks: " + ", ".join(failed), file=sys.stderr)
            return 1
        return 0


# helpers -------------------------------------------------------------------------------


def _overrides(pairs) -> dict:
    out = {}
    for p in pairs or []:
        if "=" not in p:
            raise io.ConfigError(f"--set expects key=value, got {p!r}")
        k, v = p.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _config(args) -> io.RunConfig:
    cfg = io.load_config(args.config, _overrides(args.set))
    if args.out:
        cfg.output = args.out
    return cfg


def initial_data(cfg: io.RunConfig) -> FormField:
    lat, alg = cfg.lattice(), get_algebra(cfg.group)
    if cfg.data == "zero" or cfg.amplitude == 0:
        return FormField.zeros(1, lat, alg)
    if cfg.data == "smooth":
        return fl.smooth_initial_data(lat, alg, cfg.amplitude, cfg.seed, band=cfg.band)
    return fl.generate_initial_data(lat, alg, cfg.a, cfg.amplitude, cfg.seed, eps=cfg.eps)


def mesh_of(cfg: io.RunConfig) -> fl.TimeMesh:
    return fl.TimeMesh(cfg.T, cfg.steps, cfg.grading or fl.default_grading(cfg.a))


def run_from_config(cfg: io.RunConfig, amplitude: float | None = None) -> fl.Trajectory:
    if amplitude is not None:
        cfg = io.RunConfig(**{**cfg.__dict__, "amplitude": amplitude})
    return fl.run_flow(initial_data(cfg), mesh_of(cfg), kind=cfg.kind, h_max=cfg.h_max or None,
                       scheme=cfg.integrator, dealias=cfg.dealias, a=cfg.a)


def _write_series(rep: Report, traj: fl.Trajectory, stem: str = "series"):
    cols = {k: v for k, v in traj.series.items()}
    io.write_csv(rep.path(f"{stem}.csv"), traj.times, cols)
    norms = {k: cols[k] for k in ("C_H1", "B_L2", "B_Linf", "velocity_L2") if k in cols}
    plotting.plot_series(rep.path(f"{stem}.png"), traj.times, norms, title="norms along the run", logx=True)


# flow -----------------------------------------------------------------------------------


def cmd_flow_run(args) -> int:
    cfg = _config(args)
    rep = Report(cfg.output)
    try:
        traj = run_from_config(cfg)
    except fl.FlowAborted as err:
        io.write_table(rep.path("abort.csv"), [{k: v for k, v in err.dump.items()}])
        rep.check("run_completed", 0.0, False, str(err))
        return rep.finish()
    _write_series(rep, traj)
    io.write_trajectory(rep.path("trajectory"), traj, cfg)
    rep.check("finite_state", float(np.isfinite(np.stack(traj.fields)).all()),
              bool(np.isfinite(np.stack(traj.fields)).all()))
    for name in cfg.diagnostics:
        if name not in DIAG_NAMES:
            raise io.ConfigError(f"unknown diagnostic {name!r}")
        run_diagnostic(name, traj, rep)
    return rep.finish()


def cmd_flow_reconstruct(args) -> int:
    cfg = _config(args)
    if cfg.kind != "augmented":
        raise io.ConfigError("reconstruction needs kind = augmented")
    rep = Report(cfg.output)
    traj = run_from_config(cfg)
    _write_series(rep, traj)
    rec = reconstruct_a(traj)
    sr = strong_residual(rec, traj.lattice, traj.algebra)
    ser = dict(rec.series)
    io.write_csv(rep.path("reconstruct.csv"), rec.times, ser)
    io.write_csv(rep.path("strong_residual.csv"), rec.times[1:-1], {"strong_residual": sr})
    plotting.plot_series(rep.path("reconstruct.png"), rec.times,
                         {"covariance_rel": ser["covariance_rel"],
                          "direct_curvature_sitewise": ser["direct_curvature_sitewise"]},
                         title="gauge covariance of the curvature")
    rep.check("covariance_norm", float(ser["covariance_rel"].max()), bool(ser["covariance_rel"].max() <= 1e-9),
              "<= 1e-9")
    rep.check("covariance_sitewise", float(ser["direct_curvature_sitewise"].max()),
              bool(ser["direct_curvature_sitewise"].max() <= 1e-9), "<= 1e-9")
    rep.check("strong_residual_report", float(sr.max()) if sr.size else 0.0, True, "report only")
    return rep.finish()


def cmd_flow_bisect(args) -> int:
    """Largest amplitude in [lo, hi] whose run completes with finite values."""
    cfg = _config(args)
    rep = Report(cfg.output)
    lo, hi = args.lo, args.hi
    rows = []

    def completes(amp):
        try:
            tr = run_from_config(cfg, amp)
            ok = bool(np.isfinite(np.stack(tr.fields)).all())
        except fl.FlowAborted:
            ok = False
        rows.append({"amplitude": float(amp), "completed": int(ok)})
        return ok

    if not completes(lo):
        rep.check("lower_end_completes", lo, False)
        return rep.finish()
    if completes(hi):
        lo = hi
    else:
        for _ in range(args.iters):
            mid = 0.5 * (lo + hi)
            if completes(mid):
                lo = mid
            else:
                hi = mid
    io.write_table(rep.path("bisect.csv"), rows)
    rep.check("threshold_amplitude", lo, True, "report only")
    return rep.finish()


# diagnostics ------------------------------------------------------------------------------


def run_diagnostic(name: str, traj: fl.Trajectory, rep: Report, t_index: int | None = None) -> None:
    t = np.asarray(traj.times)
    aug = traj.kind == "augmented"
    if name == "energy":
        r = D.energy_identity_check(traj)
        if aug:
            io.write_csv(rep.path("energy.csv"), r["t"], {"residual_order1": r["residual_order1"],
                                                         "residual_order2": r["residual_order2"]})
            plotting.plot_series(rep.path("energy.png"), r["t"], {"order 1": r["residual_order1"],
                                                                  "order 2": r["residual_order2"]},
                                 title="energy identity residuals")
            rep.check("energy_order1", r["max_residual_order1"], r["max_residual_order1"] <= 1e-2, "<= 1e-2 rel")
            rep.check("energy_order2", r["max_residual_order2"], r["max_residual_order2"] <= 1e-2, "<= 1e-2 rel")
        else:
            io.write_csv(rep.path("energy.csv"), r["t"], {"residual": r["residual"]})
            plotting.plot_series(rep.path("energy.png"), r["t"], {"residual": r["residual"]},
                                 title="energy identity residual")
            rep.check("energy_direct", r["max_residual"], r["max_residual"] <= 1e-2, "<= 1e-2 rel")
            rep.check("monotone_dissipation", r["monotone_slack"], r["monotone_slack"] >= -1e-8 * r["scale"])
    elif name == "inequalities":
        _need_augmented(traj, name)
        r = D.differential_inequality_check(traj)
        io.write_csv(rep.path("inequalities.csv"), r["t"], {"slack_order1": r["slack_order1"],
                                                           "slack_order2": r["slack_order2"]})
        plotting.plot_slack(rep.path("inequalities.png"), r["t"], {"order 1": r["slack_order1"],
                                                                   "order 2": r["slack_order2"]})
        rep.check("diff_ineq_order1", r["min_rel_order1"], r["min_rel_order1"] >= -1e-6, ">= -1e-6")
        rep.check("diff_ineq_order2", r["min_rel_order2"], r["min_rel_order2"] >= -1e-6, ">= -1e-6")
    elif name == "gfs":
        _need_augmented(traj, name)
        r = D.gfs_check(traj)
        io.write_csv(rep.path("gfs.csv"), r["t"], {"slack": r["slack"]})
        plotting.plot_slack(rep.path("gfs.png"), r["t"], {"gfs": r["slack"]})
        rep.check("gfs", r["min_rel"], r["min_rel"] >= -1e-6, ">= -1e-6")
    elif name == "kato":
        _need_augmented(traj, name)
        r = D.kato_check(traj)
        io.write_csv(rep.path("kato.csv"), r["t"], {"slack": r["slack"]})
        plotting.plot_slack(rep.path("kato.png"), r["t"], {"kato": r["slack"]})
        rep.check("kato", r["min_rel"], r["min_rel"] >= -1e-6, ">= -1e-6")
    elif name == "action":
        r = D.action_functionals(traj)
        io.write_csv(rep.path("action.csv"), r.t, {"rho": r.rho, "strong_action": r.strong_action,
                                                  "magnetic_action": r.magnetic_action})
        plotting.plot_series(rep.path("action.png"), r.t, {"rho_a": r.rho, "strong action": r.strong_action,
                                                           "magnetic action": r.magnetic_action})
        mono = min(float(np.min(np.diff(x))) for x in (r.rho, r.strong_action, r.magnetic_action))
        rep.check("action_nondecreasing", mono, mono >= 0.0, ">= 0")
    elif name == "order1":
        r = D.order1_energy_bound_check(traj)
        io.write_csv(rep.path("order1.csv"), r["t"], {"lhs": r["lhs"], "rhs": r["rhs"]})
        plotting.plot_series(rep.path("order1.png"), r["t"], {"lhs": r["lhs"], "rhs": r["rhs"]})
        if aug:
            rep.check("order1_bound", r["min_rel"], r["min_rel"] >= -1e-6, ">= -1e-6")
        else:
            rep.check("order1_equality", r["max_rel_residual"], r["max_rel_residual"] <= 1e-2, "<= 1e-2 rel")
    elif name == "order2":
        _need_augmented(traj, name)
        r = D.order2_energy_bound_check(traj)
        io.write_csv(rep.path("order2.csv"), r["t"], {"lhs": r["lhs"], "rhs": r["rhs"]})
        plotting.plot_series(rep.path("order2.png"), r["t"], {"lhs": r["lhs"], "rhs": r["rhs"]})
        rep.check("order2_bound", r["min_rel"], r["min_rel"] >= -1e-6, ">= -1e-6")
    elif name == "order3":
        r = D.order3_trend(traj)
        io.write_csv(rep.path("order3.csv"), r["t"], {"lhs": r["lhs"], "candidate": r["candidate"],
                                                     "ratio": r["ratio"]})
        plotting.plot_series(rep.path("order3.png"), r["t"], {"t^(3-a)|B'|^2": r["lhs"],
                                                              "candidate": r["candidate"]})
        rep.check("order3_ratio_report", r["max_ratio"], True, "report only")
    elif name == "domination":
        _need_augmented(traj, name)
        # default evaluation time 0.05 (or the end of a shorter run); at times
        # comparable to h^2 the spectral heat kernel has negative lobes
        k = int(np.searchsorted(t, min(0.05, t[-1]) * (1 - 1e-12))) if t_index is None else t_index
        r = D.neumann_domination_check(traj, max(k, 1))
        rep.check("domination_B", r["min_rel_B"], r["min_rel_B"] >= -1e-4, ">= -1e-4 |B|_inf")
        rep.check("domination_phi", r["min_rel_phi"], r["min_rel_phi"] >= -1e-4, ">= -1e-4 |B|_inf")
    elif name == "exponents":
        rows = []
        for q in ("B_inf", "B_p") + (("phi_p",) if aug else ()):
            r = D.blowup_exponent_fit(traj, q)
            rows.append({"quantity": q, "status": r["status"], "slope": r.get("slope", float("nan")),
                         "target": r["target"]})
            if r["status"] == "ok":
                key = {"B_inf": "B_Linf", "B_p": "B_L6", "phi_p": "phi_L6"}[q]
                sel = (t >= r["window"][0]) & (t <= r["window"][1])
                plotting.plot_loglog_fit(rep.path(f"exponent_{q}.png"), t[sel], traj.series[key][sel],
                                         r["slope"], r["intercept"], r["target"], q)
                rep.check(f"exponent_{q}", r["slope"], r["slope"] >= r["target"] - 0.3,
                          f"target {r['target']:.3f}")
            else:
                rep.check(f"exponent_{q}_unresolved", r["nodes"], True, "report only, fewer than 8 early nodes")
        io.write_table(rep.path("exponents.csv"), rows)
    elif name == "cauchy":
        _need_augmented(traj, name)
        n = len(t)
        r = D.cauchy_bound_check(traj, 0, max(1, n // 4), n - 1)
        rep.check("cauchy_bound", r["slack"] / r["scale"], r["slack"] >= -1e-9 * r["scale"], ">= 0")
    elif name == "gauge_family":
        _need_augmented(traj, name)
        n = len(t)
        eps = sorted({0, max(1, n // 8), max(1, n // 4), max(1, n // 2)})
        r = epsilon_family_report(traj, eps)
        io.write_table(rep.path("gauge_family.csv"), r["rows"])
        rep.check("gauge_family_report", r["rows"][-1]["oscillation"], True, "report only")
    elif name == "free":
        r = D.free_propagation_check(traj.field(0), min(traj.a, 0.99))
        io.write_csv(rep.path("free.csv"), r["t"], {"value": r["value"], "bound": r["bound"]})
        plotting.plot_series(rep.path("free.png"), r["t"], {"t^(1-a)|e^(tD)C0|_H1^2": r["value"],
                                                            "bound": r["bound"]}, logx=True)
        rep.check("free_pointwise", r["min_rel_slack"], r["min_rel_slack"] >= 0.0, ">= 0")
        rep.check("free_integral", r["integral_slack"], r["integral_slack"] >= 0.0, ">= 0")
        rep.check("free_trend", float(r["trend_decreasing_to_zero"]), r["trend_decreasing_to_zero"])
    elif name == "uniqueness":
        _need_augmented(traj, name)
        rec = reconstruct_a(traj, tau_index=0, direct_curvature=False)
        A0 = FormField(rec.A_hat[0], 1, traj.lattice, traj.algebra)
        mesh = fl.TimeMesh(float(t[-1]), len(t) - 1, 1.0)
        if not np.allclose(mesh.nodes, t, rtol=1e-12, atol=1e-15):
            mesh = None
        if mesh is None:
            raise CheckFailed("uniqueness comparison needs a uniform mesh")
        dr = fl.run_flow(A0, mesh, kind="direct", dealias=traj.meta.get("dealias", False),
                         scheme=traj.meta.get("scheme", "etd2rk"), record_series=False)
        r = D.uniqueness_comparison(t, dr.fields, rec.A_hat, traj.lattice, traj.algebra)
        io.write_csv(rep.path("uniqueness.csv"), t, {"diff_L2": np.sqrt(r["f"]), "slack": r["slack"], "w": r["w"]})
        plotting.plot_series(rep.path("uniqueness.png"), t, {"|A1 - A2|_2": np.sqrt(r["f"]), "w(t)": r["w"]})
        rep.check("uniqueness_slack", r["min_rel_slack"], r["min_rel_slack"] >= -1e-6, ">= -1e-6")
        rep.check("uniqueness_sup_diff", r["sup_diff_in_window"], r["sup_diff_in_window"] <= 1e-5, "<= 1e-5")
    else:
        raise io.ConfigError(f"unknown diagnostic {name!r}")


def _need_augmented(traj, name):
    if traj.kind != "augmented":
        raise io.ConfigError(f"diagnostic {name!r} needs an augmented trajectory")


def cmd_diag(args) -> int:
    if args.name not in DIAG_NAMES:
        raise io.ConfigError(f"unknown diagnostic {args.name!r}; choose from {', '.join(DIAG_NAMES)}")
    try:
        traj = io.read_trajectory(args.traj)
    except (OSError, KeyError, io.FormatError) as err:
        raise io.ConfigError(f"cannot load trajectory from {args.traj}: {err}") from err
    rep = Report(args.out or os.path.join(args.traj, "..", f"diag_{args.name}"))
    run_diagnostic(args.name, traj, rep, args.t_index)
    return rep.finish(f"checks_{args.name}.csv")


# oracles and group battery ---------------------------------------------------------------


def cmd_oracle_abelian(args) -> int:
    rep = Report(args.out)
    r = D.abelian_oracle(n=args.n, T=args.T, h=args.h, seed=args.seed)
    io.write_table(rep.path("abelian.csv"), [{"n": r["n"], "T": r["T"], "h": r["h"], "rel_error": r["rel_error"]}])
    rep.check("abelian_rel_error", r["rel_error"], r["rel_error"] <= 1e-6, "<= 1e-6")
    return rep.finish()


def cmd_oracle_inequalities(args) -> int:
    rep = Report(args.out)
    r = oracles.run_battery(n_trials=args.trials, seed=args.seed)
    for name, v in r.items():
        if not isinstance(v, dict):
            continue
        val = v.get("min_rel_slack", v.get("max_rel_residual", max(v.get("gamma_err", 0.0), v.get("lhs_err", 0.0),
                                                                     v.get("rhs_err", 0.0))))
        rep.check(f"oracle_{name}", val, v["passed"])
    return rep.finish()


def cmd_group_battery(args) -> int:
    from .lattice import Lattice

    rep = Report(args.out)
    lat = Lattice.cube(args.n, args.bc)
    alg = get_algebra(args.group)
    worst = 0.0
    for s in range(args.trials):
        g = Gr.random_gauge(lat, alg, 2 * s + args.seed, args.amplitude)
        h = Gr.random_gauge(lat, alg, 2 * s + 1 + args.seed, args.amplitude)
        worst = max(worst, Gr.group_identity_battery(g, h)["max"])
    rep.check("group_identities", worst, worst <= 1e-7, "<= 1e-7")
    cs = Gr.constants(lat, alg)
    m_slack, m1_slack, est = [], [], []
    for s in range(args.trials):
        g = Gr.random_gauge(lat, alg, 100 + s + args.seed, 1.0, band=2)
        u = Gr.F.random_form(lat, alg, 1, 200 + s + args.seed)
        r = Gr.multiplier_bound_check(g, u, 0.5, cs)
        m_slack.append(r["slack"] / r["rhs"])
        m1_slack.append(r["slack_minus_one"] / r["rhs_minus_one"])
        gg, hh, kk = (Gr.random_gauge(lat, alg, 300 + 3 * s + i + args.seed, 0.5, band=2) for i in range(3))
        e = Gr.metric_estimates(gg, hh, kk, 0.5, cs)
        est.append(min(e["product"], e["inverse"], e["right_translation"]) / e["scale"])
    rep.check("multiplier_bound", min(m_slack), min(m_slack) >= -1e-6, ">= -1e-6")
    rep.check("multiplier_minus_one", min(m1_slack), min(m1_slack) >= -1e-6, ">= -1e-6")
    rep.check("metric_estimates", min(est), min(est) >= -1e-6, ">= -1e-6")
    return rep.finish()


# parser ---------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ymflow", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    pf = sub.add_parser("flow", help="run, reconstruct or bisect")
    fsub = pf.add_subparsers(dest="action", required=True)
    for name, fn in (("run", cmd_flow_run), ("reconstruct", cmd_flow_reconstruct), ("bisect", cmd_flow_bisect)):
        q = fsub.add_parser(name)
        q.add_argument("--config", required=True)
        q.add_argument("--set", action="append", metavar="KEY=VALUE")
        q.add_argument("--out")
        if name == "bisect":
            q.add_argument("--lo", type=float, default=0.1)
            q.add_argument("--hi", type=float, default=50.0)
            q.add_argument("--iters", type=int, default=8)
        q.set_defaults(func=fn)

    pd = sub.add_parser("diag", help="run one diagnostic on a stored trajectory")
    pd.add_argument("name")
    pd.add_argument("--traj", required=True)
    pd.add_argument("--out")
    pd.add_argument("--t-index", type=int, dest="t_index")
    pd.set_defaults(func=cmd_diag)

    po = sub.add_parser("oracle", help="closed-form and abstract oracles")
    osub = po.add_subparsers(dest="action", required=True)
    q = osub.add_parser("abelian")
    q.add_argument("--n", type=int, default=16)
    q.add_argument("--T", type=float, default=0.1)
    q.add_argument("--h", type=float, default=1e-3)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", default="out/oracle_abelian")
    q.set_defaults(func=cmd_oracle_abelian)
    q = osub.add_parser("inequalities")
    q.add_argument("--trials", type=int, default=100)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", default="out/oracle_inequalities")
    q.set_defaults(func=cmd_oracle_inequalities)

    pg = sub.add_parser("gauge-group", help="gauge-group identities and metric estimates")
    gsub = pg.add_subparsers(dest="action", required=True)
    q = gsub.add_parser("battery")
    q.add_argument("--n", type=int, default=12)
    q.add_argument("--bc", default="periodic", choices=("periodic", "neumann", "dirichlet"))
    q.add_argument("--group", default="su2", choices=("su2", "u1"))
    q.add_argument("--trials", type=int, default=5)
    q.add_argument("--amplitude", type=float, default=0.2)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", default="out/group_battery")
    q.set_defaults(func=cmd_group_battery)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on usage errors
    try:
        return int(args.func(args))
    except io.ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 2
    except CheckFailed as err:
        print(f"FAIL {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
