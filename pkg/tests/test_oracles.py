import numpy as np
import pytest
from scipy import integrate, special

from ymflow import oracles as O


def test_kernel_closed_form_matches_quadrature():
    for lam, t, alpha, mu in [(0.0, 0.5, 0.3, 0.4), (3.0, 0.2, 0.5, 0.2), (250.0, 1.0, 0.1, 0.7)]:
        direct = integrate.quad(lambda s: lam**alpha * np.exp(-(t - s) * lam), 0, t, weight="alg",
                                wvar=(-mu, 0), epsabs=0, epsrel=1e-12)[0]
        assert O.kernel_integral(lam, t, alpha, mu) == pytest.approx(direct, rel=1e-9, abs=1e-300)


def test_gauss_jacobi_matches_quadrature():
    x, w = O._gauss_jacobi(40, -0.6, 0.3, 1.7)
    approx = np.sum(w * np.cos(x))
    direct = integrate.quad(np.cos, 0.3, 1.7, weight="alg", wvar=(-0.6, 0))[0]
    assert approx == pytest.approx(direct, rel=1e-12)


def test_beta_constant_is_the_averaged_convolution():
    mu, nu, t = 0.3, 0.45, 2.0
    avg = integrate.quad(lambda s: s**-nu, 0, t, weight="alg", wvar=(0, -mu))[0] / t
    assert avg == pytest.approx(O.beta_constant(mu, nu) * t ** (-mu - nu), rel=1e-8)
    with pytest.raises(ValueError):
        O.beta_constant(1.0, 0.0)


def test_convolution_gamma_reference_value():
    # b = 1/2, c = 1/4: r = 1/2, gamma = B(3/4, 1/2) B(3/4, 1/2)
    assert O.convolution_gamma(0.5, 0.25) == pytest.approx(special.beta(0.75, 0.5) ** 2, rel=1e-14)
    assert O.convolution_r(0.1, 0.25) == 0.0


def test_action_constants():
    # C(mu, 0) = Gamma(1 - mu), and alpha + mu = 1 gives (1 - mu)^(alpha - 1) Gamma(1 - mu)
    assert O.action_sup_constant(0.3, 0.0) == pytest.approx(special.gamma(0.7))
    assert O.action_constant(0.4, 0.6) == pytest.approx(0.4 ** -0.6 * special.gamma(0.4))
    # alpha = 0, mu = 0: sup tau^-1 (1 - e^-tau) = 1
    assert O.action_constant(0.0, 0.0) == pytest.approx(1.0, rel=1e-9)
    with pytest.raises(ValueError):
        O.action_constant(0.8, 0.5)


@pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0, 3.0])
def test_heat_constant(alpha):
    assert O.heat_constant_crosscheck(alpha) <= 1e-10


def test_beta_crosscheck():
    cc = O.convolution_beta_crosscheck()
    assert max(cc["gamma_err"], cc["lhs_err"], cc["rhs_err"]) <= 1e-8
    assert cc["slack"] >= 0


@pytest.mark.parametrize("name", list(O.TRIALS))
def test_single_trials_have_nonnegative_slack(name):
    for seed in range(5):
        r = O.TRIALS[name](seed)
        assert r["slack"] >= -1e-9 * r["scale"]


def test_equality_case_is_tight():
    for seed in range(5):
        r = O.equality_trial(seed)
        assert r["residual"] <= 1e-8 * r["scale"]


def test_trials_are_seeded():
    assert O.action_trial(3) == O.action_trial(3)


def test_kernel_single_eigenvalue():
    lam = np.array([0.5, 2.0, 30.0])
    val = O.kernel_integral(lam, 0.7, 1.0, 0.0)
    assert np.allclose(val, 1.0 - np.exp(-0.7 * lam), rtol=1e-12)
    assert np.all(val <= 1.0)
