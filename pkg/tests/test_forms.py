import numpy as np
import pytest

from ymflow import forms as F
from ymflow.forms import FormField
from ymflow.lattice import Lattice, components
from ymflow.lie import get_algebra

SU2 = get_algebra("su2")
BCS = ["periodic", "neumann", "dirichlet"]


def field(bc, degree, seed, band=None, n=10):
    return F.random_form(Lattice.cube(n, bc), SU2, degree, seed, band=band)


@pytest.mark.parametrize("bc", BCS)
@pytest.mark.parametrize("degree", [0, 1])
def test_d_squared_vanishes(bc, degree):
    w = field(bc, degree, 0)
    assert F.d(F.d(w)).norm() <= 1e-11 * F.d(w).norm()


@pytest.mark.parametrize("bc", BCS)
@pytest.mark.parametrize("degree", [0, 1, 2])
def test_d_star_is_adjoint(bc, degree):
    w = field(bc, degree, 1)
    v = field(bc, degree + 1, 2)
    assert F.d(w).inner(v) == pytest.approx(w.inner(F.d_star(v)), rel=1e-11, abs=1e-12)


@pytest.mark.parametrize("bc", BCS)
@pytest.mark.parametrize("degree", [0, 1, 2, 3])
def test_hodge_laplacian_is_spectral(bc, degree):
    w = field(bc, degree, 3)
    comp = F.hodge_laplacian(w)
    spectral = -w.laplacian()
    assert (comp - spectral).norm() <= 1e-11 * spectral.norm()


def test_curvature_closed_form():
    lat = Lattice.cube(16, "periodic")
    x, y, z = lat.grid()
    data = np.zeros((3, 3) + lat.shape)
    data[0, 0] = np.sin(y)
    data[1, 1] = np.sin(x)
    B = F.curvature(FormField(data, 1, lat, SU2))
    expect = np.zeros((3, 3) + lat.shape)
    i12 = components(2).index((0, 1))
    # dC_12 = d_1 C_2 - d_2 C_1, [e1, e2] = e3
    expect[i12, 1] = np.cos(x)
    expect[i12, 0] = -np.cos(y)
    expect[i12, 2] = np.sin(y) * np.sin(x)
    assert np.allclose(B.data, expect, atol=1e-12)


def test_abelian_curvature_is_dc():
    lat = Lattice.cube(8, "periodic")
    c = F.random_form(lat, get_algebra("u1"), 1, 4)
    assert (F.curvature(c) - F.d(c)).norm() == 0.0


@pytest.mark.parametrize("r,p", [(1, 1), (1, 2), (0, 1), (1, 0)])
def test_interior_bracket_is_adjoint_of_wedge(r, p):
    lat = Lattice.cube(6, "periodic")
    u = F.random_form(lat, SU2, r, 5)
    w = F.random_form(lat, SU2, p, 6)
    v = F.random_form(lat, SU2, r + p, 7)
    lhs = F.wedge_bracket(u, w).inner(v)
    rhs = w.inner(F.interior_bracket(u, v))
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-13)


@pytest.mark.parametrize("bc", BCS)
def test_vertical_projection(bc):
    w = field(bc, 1, 8)
    p = F.vertical_projection(w)
    assert (F.vertical_projection(p) - p).norm() <= 1e-11 * p.norm()
    assert F.d_star(w - p).norm() <= 1e-10 * F.d_star(w).norm()
    assert F.d(p).norm() <= 1e-10 * w.norm()


def test_sobolev_norm_and_heat():
    lat = Lattice.cube(8, "periodic")
    x, y, z = lat.grid()
    data = np.zeros((3, 3) + lat.shape)
    data[2, 0] = np.cos(2 * x + y)  # lambda = 5
    w = FormField(data, 1, lat, SU2)
    l2 = w.norm()
    assert w.sobolev_norm(1.0) == pytest.approx(np.sqrt(6.0) * l2, rel=1e-12)
    assert w.heat(0.3).norm() == pytest.approx(np.exp(-1.5) * l2, rel=1e-12)
    with pytest.raises(ValueError):
        w.heat(-1.0)


@pytest.mark.parametrize("bc", ["periodic", "neumann"])
def test_structural_identities_band_limited(bc):
    lat = Lattice.cube(12, bc)
    for s in range(3):
        c = F.random_form(lat, SU2, 1, s, band=2)
        w = F.random_form(lat, SU2, 1, 50 + s, band=2)
        assert F.splitting_residual(c) <= 1e-12
        assert F.bianchi_residual(c) <= 1e-12 * (1 + c.lp_norm(6.0) ** 3)
        assert F.orthogonality_residual(c) <= 1e-12
        assert F.weitzenbock_residual(c, w) <= 1e-12


def test_dirichlet_products_alias():
    # products of sine-parity fields land in the wrong parity class on a
    # Dirichlet box, so the Bianchi identity fails at the grid scale
    lat = Lattice.cube(12, "dirichlet")
    c = F.random_form(lat, SU2, 1, 0, band=2)
    assert F.splitting_residual(c) <= 1e-12
    assert F.bianchi_residual(c) > 1e-6


def test_splitting_matches_augmented_velocity():
    lat = Lattice.cube(8, "periodic")
    c = F.random_form(lat, SU2, 1, 9)
    vel = F.augmented_velocity(c)
    split = F.nonlinearity_x(c) - F.hodge_laplacian(c)
    assert (vel - split).norm() <= 1e-12 * vel.norm()


def test_incompatible_forms_rejected():
    a = field("periodic", 1, 0, n=6)
    b = field("neumann", 1, 0, n=6)
    with pytest.raises(ValueError):
        a + b
    with pytest.raises(ValueError):
        FormField(np.zeros((2, 3, 6, 6, 6)), 1, Lattice.cube(6), SU2)
