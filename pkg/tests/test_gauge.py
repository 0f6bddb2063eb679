import numpy as np
import pytest

from ymflow import flow as fl
from ymflow import forms as F
from ymflow import groups as Gr
from ymflow.forms import FormField
from ymflow.gauge import (GaugeFunction, conjugate_form, dexp_inverse_apply, epsilon_family_report, gauge_transform,
                          integrate_gauge_ode, integrate_gauge_path, log_derivative, oscillation, pure_gauge,
                          reconstruct_a, representation_check, strong_residual)
from ymflow.lattice import Lattice
from ymflow.lie import get_algebra

SU2 = get_algebra("su2")
U1 = get_algebra("u1")


def test_dexp_inverse_matches_finite_difference():
    rng = np.random.default_rng(0)
    for scale in (1e-6, 0.3, 2.5):
        x = scale * rng.standard_normal(3)
        y = rng.standard_normal(3)
        s = 1e-5
        dE = (SU2.exp(x + s * y) - SU2.exp(x - s * y)) / (2 * s)
        fd = SU2.coords(SU2.inv(SU2.exp(x)) @ dE)
        assert np.allclose(dexp_inverse_apply(x, y, SU2), fd, atol=1e-9)


def test_log_derivative_of_abelian_exponential_is_exact():
    lat = Lattice.cube(16, "periodic")
    x = F.random_form(lat, U1, 0, 1, band=1)
    x = x * (0.5 / np.max(x.pointwise_norm()))
    h, defect = log_derivative(U1.exp(x.data[0]), lat, U1)
    # exp is not band limited, so the agreement is spectral rather than exact
    assert (h - F.d(x)).norm() <= 1e-8 * F.d(x).norm()
    assert defect < 1e-9


@pytest.mark.parametrize("bc,n", [("periodic", 24), ("neumann", 16)])
def test_curvature_is_covariant(bc, n):
    # products of g with C are not band limited, so this is a resolution test
    lat = Lattice.cube(n, bc)
    g = Gr.random_gauge(lat, SU2, 0, 0.3)
    C = F.random_form(lat, SU2, 1, 1, band=2)
    lhs = F.curvature(gauge_transform(C, g))
    rhs = conjugate_form(F.curvature(C), g)
    assert (lhs - rhs).norm() <= 1e-9 * rhs.norm()
    assert rhs.norm() == pytest.approx(F.curvature(C).norm(), rel=1e-12)


@pytest.mark.parametrize("bc", ["periodic", "neumann"])
def test_pure_gauge_is_flat(bc):
    lat = Lattice.cube(12, bc)
    g = Gr.random_gauge(lat, SU2, 2, 0.3)
    A = pure_gauge(g)
    assert F.curvature(A).norm() <= 1e-7 * A.sobolev_norm(1.0) ** 2


def test_gauge_path_cocycle():
    lat = Lattice.cube(8, "periodic")
    C0 = fl.smooth_initial_data(lat, SU2, 2.0, 0, band=2)
    traj = fl.run_flow(C0, fl.TimeMesh(0.1, 8, 1.0), record_series=False)
    g_delta = integrate_gauge_ode(traj, 0, 8).g
    g_eps = integrate_gauge_ode(traj, 3, 8).g
    g_delta_eps = integrate_gauge_ode(traj, 0, 3).g
    assert np.allclose(g_delta, g_eps @ g_delta_eps, atol=1e-12)


def test_gauge_path_abelian_closed_form():
    # for u(1), g(t) = exp(int_0^t d*C ds) and C(t) = e^{t Delta} C0 per mode
    lat = Lattice.cube(8, "periodic")
    C0 = F.random_form(lat, U1, 1, 3, band=2)
    traj = fl.run_flow(C0, fl.TimeMesh(0.2, 4, 2.0), record_series=False, dealias=False)
    path = integrate_gauge_path(traj)
    T = traj.times[-1]

    def integrated(lam):
        safe = np.where(lam > 0, lam, 1.0)
        return np.where(lam > 0, -np.expm1(-T * safe) / safe, T)

    x = F.d_star(C0.spectral_map(integrated))
    assert np.allclose(path.g[-1], U1.exp(x.data[0]), atol=1e-12)
    assert np.allclose(path.h[-1], F.d(x).data, atol=1e-12)


def test_reconstruction_covariance_and_strong_solution():
    lat = Lattice.cube(16, "neumann")
    C0 = fl.smooth_initial_data(lat, SU2, 2.0, 0, band=2)
    traj = fl.run_flow(C0, fl.TimeMesh(0.1, 20, 1.0), dealias=False, record_series=False)
    rec = reconstruct_a(traj)
    assert rec.series["covariance_rel"].max() <= 1e-12
    assert rec.series["direct_curvature_sitewise"].max() <= 1e-9
    sr = strong_residual(rec, lat, SU2)
    assert sr.max() < 1e-3


def test_representation_converges_at_second_order():
    lat = Lattice.cube(12, "periodic")
    C0 = fl.smooth_initial_data(lat, SU2, 2.0, 0, band=2)
    errs = []
    for n in (10, 20, 40):
        traj = fl.run_flow(C0, fl.TimeMesh(0.1, n, 1.0), dealias=False, record_series=False)
        errs.append(representation_check(traj)["rel"])
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert rates.min() > 1.8


def test_gauge_function_identity_and_errors():
    lat = Lattice.cube(6, "periodic")
    e = GaugeFunction.identity(lat, SU2)
    assert e.h.norm() == 0.0
    with pytest.raises(ValueError):
        GaugeFunction.exp(FormField.zeros(1, lat, SU2))
    traj = fl.run_flow(FormField.zeros(1, lat, SU2), fl.TimeMesh(0.1, 2), record_series=False)
    with pytest.raises(ValueError):
        reconstruct_a(traj, tau_index=5)


def test_gauge_action_composes():
    lat = Lattice.cube(16, "neumann")
    g = Gr.random_gauge(lat, SU2, 0, 0.3)
    k = Gr.random_gauge(lat, SU2, 1, 0.3)
    C = F.random_form(lat, SU2, 1, 2, band=2)
    twice = gauge_transform(gauge_transform(C, g), k)
    once = gauge_transform(C, GaugeFunction(g.g @ k.g, lat, SU2))
    assert (twice - once).norm() <= 1e-9 * once.norm()
    assert (gauge_transform(C, GaugeFunction.identity(lat, SU2)) - C).norm() == 0.0


def test_pure_gauge_data_is_stationary():
    lat = Lattice.cube(12, "neumann")
    A0 = Gr.random_gauge(lat, SU2, 3, 0.3).h
    traj = fl.run_flow(A0, fl.TimeMesh(0.05, 10, 1.0), dealias=False, record_series=False)
    rec = reconstruct_a(traj, tau_index=0)
    drift = max(np.sqrt(np.sum((a - A0.data) ** 2) * lat.cell_volume) for a in rec.A)
    assert drift <= 1e-6 * A0.norm()


def test_representation_without_phi_is_trivial():
    # coexact abelian data keeps d*C = 0, so both sides vanish
    lat = Lattice.cube(8, "periodic")
    x, y, z = lat.grid()
    data = np.zeros((3, 1) + lat.shape)
    data[0, 0] = np.sin(y + z)
    traj = fl.run_flow(FormField(data, 1, lat, U1), fl.TimeMesh(0.05, 5, 1.0), record_series=False)
    r = representation_check(traj)
    assert r["lhs_L2"] <= 1e-13 and r["rhs_L2"] <= 1e-13


def test_representation_abelian():
    lat = Lattice.cube(8, "periodic")
    C0 = F.random_form(lat, U1, 1, 4, band=2)
    traj = fl.run_flow(C0, fl.TimeMesh(0.05, 80, 1.0), record_series=False, dealias=False)
    assert representation_check(traj)["rel"] <= 1e-7


def test_epsilon_family_report():
    lat = Lattice.cube(8, "periodic")
    C0 = fl.smooth_initial_data(lat, SU2, 2.0, 0, band=2)
    traj = fl.run_flow(C0, fl.TimeMesh(0.1, 16, 1.0), dealias=False)
    r = epsilon_family_report(traj, [2, 4, 8])
    rows = r["rows"]
    # eps halving: T/8 vs T/4 is closer than T/4 vs T/2
    assert rows[1]["rho2_to_previous"] < rows[2]["rho2_to_previous"]
    # g_eps(t) approaches the identity as eps -> t
    assert rows[0]["h_Ha"] > rows[1]["h_Ha"] > rows[2]["h_Ha"]
    assert oscillation(SU2.identity(lat.shape), lat) == 0.0
    with pytest.raises(ValueError):
        epsilon_family_report(traj, [20])
