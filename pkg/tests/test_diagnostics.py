import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraclane.constants import ParameterError, ProblemParams, kappa, sphere_area
from fraclane.diagnostics import (
    NonIntegrableError,
    coefficient_sandwich,
    expected_integral_exponent,
    fit_asymptotics,
    harnack_ratio,
    integral_bound_exponent,
    max_harnack_ratio,
    monotonicity_check,
    weighted_integral,
)
from fraclane.fracop import PowerTail, RadialFunction, RadialGrid, ZeroTail

CUBIC = ProblemParams(3, 0.5, 0.0, 3.0)


@pytest.fixture(scope="module")
def grid():
    return RadialGrid.log_uniform(300, 1e-6, 1.0)


def profile(grid, params):
    K, b = kappa(params), params.beta
    return RadialFunction(grid, K * grid.nodes ** (-b), b, PowerTail(K, b))


def test_fit_exact_profile(grid):
    fit = fit_asymptotics(profile(grid, CUBIC))
    assert fit.exponent == pytest.approx(0.5, abs=1e-12)
    assert fit.coefficient == pytest.approx(math.sqrt(0.5), rel=1e-12)
    assert fit.max_residual <= 1e-12
    assert fit.sample_count >= 8 and fit.window == (1e-4, 1e-2)


@settings(max_examples=30)
@given(st.floats(-2.0, 3.0), st.floats(0.1, 10.0), st.floats(1e-5, 1e-3), st.floats(5.0, 500.0))
def test_fit_pure_power_any_window(tau, amp, ra, factor):
    g = RadialGrid.log_uniform(300, 1e-6, 1.0)
    u = RadialFunction(g, amp * g.nodes**tau, 0.0, ZeroTail())
    fit = fit_asymptotics(u, (ra, min(ra * factor, 0.9)))
    assert fit.exponent == pytest.approx(-tau, abs=1e-9)
    assert fit.coefficient == pytest.approx(amp, rel=1e-9)


def sine_slope(a, b, amp):
    # continuous least-squares slope of amp * sin(x) on [a, b]
    m = 0.5 * (a + b)
    # int (x - m) sin x dx = [sin x - (x - m) cos x]
    num = (math.sin(b) - (b - m) * math.cos(b)) - (math.sin(a) - (a - m) * math.cos(a))
    return amp * num / ((b - a) ** 3 / 12)


def test_fit_with_oscillating_perturbation(grid):
    b, K = CUBIC.beta, kappa(CUBIC)
    r = grid.nodes
    u = RadialFunction(grid, K * r ** (-b) * (1 + 0.01 * np.sin(np.log(r))), 0.0, ZeroTail())
    # short window: the oscillation tilts the line by a computable amount
    fit = fit_asymptotics(u)
    tilt = sine_slope(math.log(1e-4), math.log(1e-2), 0.01)
    assert -fit.exponent == pytest.approx(-b + tilt, abs=0.05 * abs(tilt))
    assert fit.max_residual == pytest.approx(0.01, rel=0.5)
    # a window of about two periods averages it out
    wide = fit_asymptotics(u, (2e-6, 0.5))
    assert abs(wide.exponent / b - 1) <= 0.005


def test_fit_flat_data(grid):
    u = RadialFunction(grid, np.full(grid.n, 3.0), 0.0, ZeroTail())
    assert fit_asymptotics(u).exponent == pytest.approx(0.0, abs=1e-12)


def test_fit_rejects_nonpositive_and_small_windows(grid):
    u = RadialFunction(grid, -np.ones(grid.n), 0.0, ZeroTail())
    with pytest.raises(ParameterError):
        fit_asymptotics(u)
    v = RadialFunction(grid, np.ones(grid.n), 0.0, ZeroTail())
    with pytest.raises(ParameterError):
        fit_asymptotics(v, (1e-3, 1.05e-3))
    with pytest.raises(ParameterError):
        fit_asymptotics(v, (1e-8, 1e-3))


@pytest.mark.parametrize("r", [1e-5, 3e-3, 0.2])
def test_harnack_exact_profile(grid, r):
    assert harnack_ratio(profile(grid, CUBIC), r) == pytest.approx(2**0.5, rel=1e-8)


def test_harnack_constant_and_outside(grid):
    u = RadialFunction(grid, np.full(grid.n, 2.0), 0.0, ZeroTail())
    assert harnack_ratio(u, 0.01) == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(ParameterError):
        harnack_ratio(u, 0.6)


def test_max_harnack_is_scale_free(grid):
    u = profile(grid, ProblemParams(3, 0.5, -0.5, 2.5))
    assert max_harnack_ratio(u) == pytest.approx(2 ** (1 / 3), rel=1e-10)


def test_sandwich():
    class Fit:
        coefficient = 1.2

    assert coefficient_sandwich(Fit, 1.0, 1.3)
    assert not coefficient_sandwich(Fit, 1.0, 1.1)


def test_integral_closed_form(grid):
    u = profile(grid, CUBIC)
    e = expected_integral_exponent(CUBIC)
    assert e == 1.5
    radii = np.array([1e-4, 1e-2, 0.5])
    K = kappa(CUBIC)
    exact = K**3 * sphere_area(2) * radii**e / e
    assert np.allclose(weighted_integral(u, CUBIC, radii), exact, rtol=1e-10)
    assert integral_bound_exponent(u, CUBIC).exponent == pytest.approx(1.5, abs=1e-6)


def test_integral_bounded_function(grid):
    u = RadialFunction(grid, 1 + grid.nodes, 0.0, ZeroTail())
    fit = integral_bound_exponent(u, CUBIC, np.geomspace(1e-5, 1e-3, 12))
    assert fit.exponent == pytest.approx(3.0, abs=1e-2)


def test_integral_divergence_detected(grid):
    # u ~ r^{-1.2}: rho^{2} u^3 ~ rho^{-1.6} near the origin
    u = RadialFunction(grid, grid.nodes**-1.2, 1.2, PowerTail(1.0, 1.2))
    with pytest.raises(NonIntegrableError):
        weighted_integral(u, CUBIC, [0.1])


def test_monotonicity(grid):
    assert monotonicity_check(profile(grid, CUBIC)).nonincreasing
    bump = np.exp(-((np.log(grid.nodes) + 5) ** 2))
    res = monotonicity_check(RadialFunction(grid, bump, 0.0, ZeroTail()))
    assert not res.nonincreasing
    assert res.first_violation == 1
    dip = RadialFunction(grid, np.concatenate([np.ones(10), np.ones(grid.n - 10) * 0.5]), 0.0, ZeroTail())
    assert monotonicity_check(dip).nonincreasing
    rise = np.linspace(2.0, 1.0, grid.n)
    rise[100] = rise[99] * (1 + 1e-9)
    assert monotonicity_check(RadialFunction(grid, rise, 0.0, ZeroTail())).first_violation == 100
