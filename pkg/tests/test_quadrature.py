import numpy as np
import pytest

from ymflow.quadrature import (central_derivative, cumulative, richardson_error, weighted_cumulative,
                               weighted_integral)


def graded(n, gamma=3.0, T=1.0):
    return T * (np.arange(n + 1) / n) ** gamma


@pytest.mark.parametrize("q", [-0.75, -0.5, 0.0, 1.0])
def test_weighted_cumulative_exact_for_constants(q):
    t = graded(20)
    assert np.allclose(weighted_cumulative(t, np.ones_like(t), q), t ** (1 + q) / (1 + q), rtol=1e-13)


def test_weighted_integral_converges_at_second_order():
    # int_0^1 s^-1/2 cos(s) ds by independent quadrature
    from scipy.integrate import quad

    exact = quad(lambda s: np.cos(s), 0, 1, weight="alg", wvar=(-0.5, 0))[0]
    errs = [abs(weighted_integral(graded(n, 2.0), np.cos(graded(n, 2.0)), -0.5) - exact) for n in (20, 40, 80)]
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert rates.min() > 1.9


def test_weighted_cumulative_rejects_bad_exponent():
    with pytest.raises(ValueError):
        weighted_cumulative(np.linspace(0, 1, 5), np.ones(5), -1.0)


def test_cumulative_vector_valued():
    t = np.linspace(0, 2, 41)
    f = np.stack([t, 2 * t], axis=1)
    out = cumulative(t, f)
    assert np.allclose(out[-1], [2.0, 4.0])


def test_central_derivative_exact_for_quadratics():
    t = graded(15, 2.5)
    f = 3 * t**2 - t + 1
    assert np.allclose(central_derivative(t, f), 6 * t[1:-1] - 1, atol=1e-9)


def test_richardson_error_tracks_true_error():
    t = np.linspace(0, 1, 41)
    f = np.exp(t)
    est = richardson_error(t, f, 0.0)
    true = abs(weighted_integral(t, f, 0.0) - (np.e - 1))
    assert 0.5 * true < est < 2 * true
