import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraclane.constants import ParameterError, ProblemParams, spectral_constant, theta_star
from fraclane.fracop import PowerTail, RadialFunction, RadialGrid, ZeroTail, power_function
from fraclane.kelvin import (
    exterior_decay,
    exterior_to_interior,
    kelvin_pair,
    kelvin_transform,
    verify_kelvin_identity,
)


@pytest.fixture(scope="module")
def grid():
    return RadialGrid.log_uniform(120, 1e-4, 1.0)


def test_power_maps_to_power(grid):
    N, s, gamma = 3, 0.5, 0.8
    v = kelvin_transform(power_function(grid, -gamma), N, s)
    r = v.grid.nodes
    assert np.allclose(v.values, r ** (2 * s - N + gamma), rtol=1e-13)
    # weighted function stays constant, and the tail continues the power
    assert np.allclose(v.weighted, 1.0, rtol=1e-13)
    assert v.tail.decay == pytest.approx(N - 2 * s - gamma, abs=1e-14)
    assert v(np.array([1e5]))[0] == pytest.approx(1e5 ** (2 * s - N + gamma), rel=1e-12)


def test_reflected_grid_is_log_uniform(grid):
    v = kelvin_transform(power_function(grid, -0.3), 3, 0.5)
    assert v.grid.is_log_uniform()
    assert v.grid.r_min == pytest.approx(1.0) and v.grid.r_max == pytest.approx(1e4)


def test_double_transform_is_identity(grid):
    u = RadialFunction(grid, np.exp(-grid.nodes) / (1 + grid.nodes), 0.3, PowerTail(2.0, 1.0))
    back = kelvin_transform(kelvin_transform(u, 4, 0.3), 4, 0.3)
    assert np.max(np.abs(back.values / u.values - 1)) <= 1e-12
    assert np.max(np.abs(back.grid.nodes / grid.nodes - 1)) <= 1e-12
    assert back.beta_w == pytest.approx(u.beta_w, abs=1e-14)
    assert back.tail.decay == pytest.approx(1.0, abs=1e-14)


def test_non_log_grid_rejected():
    g = RadialGrid(np.array([0.1, 0.2, 0.5, 0.6, 0.9]), 0.05, 1.0)
    with pytest.raises(ParameterError):
        kelvin_transform(RadialFunction(g, np.ones(5)), 3, 0.5)


def test_pair_requires_ball(grid):
    pair = kelvin_pair(power_function(grid, -0.5), 3, 0.5)
    assert pair.exterior.grid.nodes[0] > 1.0
    big = RadialGrid.log_uniform(20, 1e-2, 10.0)
    with pytest.raises(ParameterError):
        kelvin_pair(RadialFunction(big, np.ones(20), 0.0, ZeroTail()), 3, 0.5)


@settings(max_examples=100)
@given(st.integers(1, 7), st.floats(0.05, 0.95), st.floats(0.01, 0.99))
def test_identity_analytic(N, s, frac):
    if N <= 2 * s:
        return
    gamma = -2 * s + frac * (N + 2 * s)
    assert verify_kelvin_identity(gamma, N, s, sample_radii=(0.1, 0.7, 1.0, 3.0, 40.0)) <= 1e-10


def test_identity_at_the_maximum():
    N, s = 3, 0.5
    gamma = (N - 2 * s) / 2
    # both arguments equal (2s - N)/2, the maximiser
    assert 2 * s - N + gamma == -gamma
    assert verify_kelvin_identity(gamma, N, s) <= 1e-14


@pytest.mark.parametrize("N, s", [(3, 0.5), (2, 0.3), (5, 0.9)])
@pytest.mark.parametrize("frac", [0.1, 0.5, 0.9])
def test_identity_quadrature(N, s, frac):
    gamma = -2 * s + frac * (N + 2 * s)
    assert verify_kelvin_identity(gamma, N, s, route="quadrature") <= 1e-4


def test_identity_rejects_out_of_range():
    with pytest.raises(ParameterError):
        verify_kelvin_identity(3.5, 3, 0.5)
    with pytest.raises(ParameterError):
        verify_kelvin_identity(0.1, 3, 0.5, route="nope")


def test_identity_tolerance_enforced():
    with pytest.raises(ParameterError):
        verify_kelvin_identity(1.5, 3, 0.5, route="quadrature", grid=RadialGrid.log_uniform(40, 2.0**-8, 2.0**4), tol=1e-12)


@pytest.mark.parametrize("N, s, tt", [(3, 0.5, 0.0), (4, 0.3, 0.7), (2, 0.75, -1.2)])
def test_sobolev_exterior_maps_to_theta_zero(N, s, tt):
    p = (N + 2 * s + tt) / (N - 2 * s)
    assert exterior_to_interior(ProblemParams(N, s, tt, p, unrestricted=True)).theta == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("p", [1.55, 1.75, 1.95])
def test_subcritical_exterior_lands_in_weighted_regime(p):
    inner = exterior_to_interior(ProblemParams(3, 0.5, 0.0, p, unrestricted=True))
    assert inner.theta == pytest.approx(2 * p - 4, abs=1e-14)
    assert -1.0 < inner.theta < 0.0


@settings(max_examples=60)
@given(st.integers(2, 6), st.floats(0.05, 0.95), st.floats(-0.9, 2.0), st.floats(0.05, 3.0))
def test_decay_translation(N, s, tfrac, dp):
    tt = tfrac * 2 * s if tfrac < 0 else tfrac
    p = (N + tt) / (N - 2 * s) + dp
    ext = ProblemParams(N, s, tt, p, unrestricted=True)
    inner = exterior_to_interior(ext)
    # exterior decay equals N - 2s minus the interior singular rate
    assert exterior_decay(ext) == pytest.approx(N - (2 * s * p + inner.theta) / (p - 1), abs=1e-10)
    assert exterior_decay(ext) == pytest.approx(N - 2 * s - inner.beta, abs=1e-10)
    # the map is an involution on the weight
    assert theta_star(N, s, inner.theta, p) == pytest.approx(tt, abs=1e-10)


def test_exterior_singular_profile_maps_to_interior_profile():
    ext = ProblemParams(3, 0.5, 0.0, 1.8, unrestricted=True)
    inner = exterior_to_interior(ext)
    d = exterior_decay(ext)
    g = RadialGrid.log_uniform(60, 1e-3, 1.0).reflected()
    u_ext = RadialFunction(g, g.nodes ** (-d), d, PowerTail(1.0, d))
    v = kelvin_transform(u_ext, 3, 0.5)
    slope = np.polyfit(np.log(v.grid.nodes), np.log(v.values), 1)[0]
    assert -slope == pytest.approx(inner.beta, abs=1e-12)
    assert spectral_constant(3, 0.5, -inner.beta) > 0


def test_exterior_to_interior_rejects_low_p():
    with pytest.raises(ParameterError):
        exterior_to_interior(ProblemParams(3, 0.5, 0.0, 1.4, unrestricted=True))
    with pytest.raises(ParameterError):
        exterior_to_interior(ProblemParams(3, 0.5, 0.0, 1.5, unrestricted=True))
    assert math.isfinite(exterior_to_interior(ProblemParams(3, 0.5, 0.0, 1.6, unrestricted=True)).theta)
