import numpy as np
import pytest

from ymflow import forms as F
from ymflow import groups as Gr
from ymflow.lattice import Lattice
from ymflow.lie import get_algebra

SU2 = get_algebra("su2")


@pytest.fixture(scope="module", params=["periodic", "neumann"])
def lat(request):
    return Lattice.cube(12, request.param)


def test_identity_battery(lat):
    for s in range(3):
        g = Gr.random_gauge(lat, SU2, 2 * s, 0.2)
        h = Gr.random_gauge(lat, SU2, 2 * s + 1, 0.2)
        assert Gr.group_identity_battery(g, h)["max"] <= 1e-7


def test_product_and_inverse_transport_h(lat):
    g = Gr.random_gauge(lat, SU2, 0, 0.2)
    k = Gr.random_gauge(lat, SU2, 1, 0.2)
    gk = Gr.multiply(g, k)
    e = Gr.multiply(g, Gr.inverse(g))
    assert np.allclose(e.g, SU2.identity(lat.shape), atol=1e-13)
    assert e.h.norm() <= 1e-12
    assert Gr.metric_rho(Gr.identity(lat, SU2), e, 0.5) <= 1e-12
    assert gk.h.norm() > 0


def test_metric_is_right_invariant_in_lp(lat):
    g, h, k = (Gr.random_gauge(lat, SU2, s, 0.5) for s in range(3))
    assert Gr.right_invariance_lp(g, h, k, 3.0) <= 1e-12 * Gr.metric_rho(g, h, 3.0, "lp")
    assert Gr.metric_rho(g, g, 0.5) == 0.0
    with pytest.raises(ValueError):
        Gr.metric_rho(g, h, 0.5, kind="other")


def test_multiplier_bounds(lat):
    cs = Gr.constants(lat, SU2)
    for s in range(2):
        g = Gr.random_gauge(lat, SU2, 10 + s, 1.0, band=2)
        u = F.random_form(lat, SU2, 1, 20 + s)
        r = Gr.multiplier_bound_check(g, u, 0.5, cs)
        assert r["slack"] >= 0 and r["slack_minus_one"] >= 0
    with pytest.raises(ValueError):
        Gr.multiplier_bound_check(g, u, 1.5, cs)


def test_metric_estimates(lat):
    cs = Gr.constants(lat, SU2)
    g, h, k = (Gr.random_gauge(lat, SU2, 30 + s, 0.5, band=2) for s in range(3))
    est = Gr.metric_estimates(g, h, k, 0.5, cs)
    assert min(est["product"], est["inverse"], est["right_translation"]) >= -1e-6 * est["scale"]
    with pytest.raises(ValueError):
        Gr.metric_estimates(g, h, k, 0.25, cs)


def test_ad_minus_one_vanishes_on_central_elements():
    lat = Lattice.cube(6, "periodic")
    e = Gr.identity(lat, SU2)
    assert Gr.ad_minus_one_norm(e, 6.0) == 0.0
    minus = type(e)(-e.g, lat, SU2)
    assert Gr.ad_minus_one_norm(minus, 6.0) <= 1e-14


def test_strong_continuity_trend_decreases():
    lat = Lattice.cube(8, "periodic")
    u = F.random_form(lat, SU2, 1, 0, band=2)
    x = F.random_form(lat, SU2, 0, 1, band=1, amplitude=5.0)
    trend = Gr.strong_continuity_trend(u, x, 0.5, steps=5)
    assert np.all(np.diff(trend) < 0)
    assert trend[-1] < 0.1 * trend[0]
