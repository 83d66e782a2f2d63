import itertools
import math

import numpy as np
import pytest

from fraclane.classical import (
    Termination,
    classical_asymptotics,
    classical_rate,
    shoot_singular,
    verify_classical_profile,
)
from fraclane.constants import ParameterError, classical_coefficient


def coefficient_oracle(N, theta, p):
    # c^{p-1} = b (N - 2 - b) with b = (2 + theta)/(p - 1)
    b = (2 + theta) / (p - 1)
    return (b * (N - 2 - b)) ** (1 / (p - 1))


def test_coefficient_values():
    assert classical_coefficient(3, 0.0, 7.0) == pytest.approx((2 / 9) ** (1 / 6), rel=1e-14)
    assert classical_coefficient(3, -1.0, 6.0) == pytest.approx((4 / 25) ** (1 / 5), rel=1e-14)
    assert (2 / 9) ** (1 / 6) == pytest.approx(0.77827, abs=1e-5)
    assert (4 / 25) ** (1 / 5) == pytest.approx(0.69314, abs=1e-5)


@pytest.mark.parametrize("N, theta, p", [(3, 0.0, 7.0), (4, -1.0, 6.0)])
def test_profile_residual(N, theta, p):
    assert verify_classical_profile(N, theta, p) <= 1e-12


def test_profile_residual_regime_grid():
    for N, theta, extra in itertools.product((3, 4, 6), (-1.5, 0.0, 2.0), (0.1, 1.0, 5.0)):
        p = (N + 2 + 2 * theta) / (N - 2) + extra
        assert verify_classical_profile(N, theta, p) <= 1e-12
        assert classical_coefficient(N, theta, p) == pytest.approx(coefficient_oracle(N, theta, p), rel=1e-13)


def test_profile_at_serrin_threshold_is_zero():
    assert verify_classical_profile(3, 0.0, 3.0) == 0.0


def test_out_of_regime_rejected():
    with pytest.raises(ParameterError):
        verify_classical_profile(2, 0.0, 7.0)
    with pytest.raises(ParameterError):
        verify_classical_profile(3, -2.5, 7.0)
    with pytest.raises(ParameterError):
        verify_classical_profile(3, 0.0, 2.0)


@pytest.mark.parametrize("N, theta, p", [(3, 0.0, 7.0), (3, -1.0, 6.0)])
def test_unperturbed_shot_tracks_profile(N, theta, p):
    traj = shoot_singular(N, theta, p, r0=1e-6, delta=0.0)
    c, b = classical_coefficient(N, theta, p), classical_rate(theta, p)
    assert traj.termination is Termination.REACHED_BOUNDARY
    assert traj.radii[-1] == pytest.approx(1.0)
    assert np.max(np.abs(traj.values / (c * traj.radii ** (-b)) - 1)) <= 1e-6
    fit = classical_asymptotics(traj, (1e-6, 1.0))
    assert fit.exponent == pytest.approx(b, rel=1e-6)
    assert fit.coefficient == pytest.approx(c, rel=1e-6)


def test_trajectory_is_monotone_and_immutable():
    traj = shoot_singular(3, 0.0, 7.0, delta=0.05)
    assert np.all(np.diff(traj.radii) > 0)
    assert np.all(np.isfinite(traj.values))
    with pytest.raises(ValueError):
        traj.values[0] = 1.0


@pytest.mark.parametrize("delta", [0.05, -0.05])
def test_inner_rate_near_start(delta):
    r0 = 1e-6
    traj = shoot_singular(3, 0.0, 7.0, r0=r0, delta=delta)
    fit = classical_asymptotics(traj, (2 * r0, 100 * r0))
    assert abs(fit.exponent / (1 / 3) - 1) <= 0.02


@pytest.mark.parametrize("N, theta, p", [(3, 0.0, 7.0), (3, -1.0, 6.0)])
@pytest.mark.parametrize("delta", [0.1, 0.05, -0.05, -0.1])
def test_perturbed_shot_recovers_rate(N, theta, p, delta):
    traj = shoot_singular(N, theta, p, r0=1e-6, delta=delta)
    fit = classical_asymptotics(traj, (1e-4, 0.25))
    c, b = classical_coefficient(N, theta, p), classical_rate(theta, p)
    assert abs(fit.exponent / b - 1) <= 0.02
    assert abs(fit.coefficient / c - 1) <= 0.05
    # sandwich with the measured dyadic Harnack constant of the trajectory
    r = np.geomspace(1e-4, 0.25, 200)
    v = traj.dense(r)
    C = max(np.max(v[(r >= a) & (r <= 2 * a)]) / np.min(v[(r >= a) & (r <= 2 * a)]) for a in r[r <= 0.125])
    assert c / C <= fit.coefficient <= C * c


def test_cap_crossing_reported_as_blowup():
    # outward shots circle the attracting profile, so a cap just above c is
    # crossed upward once the first undershoot swings back
    traj = shoot_singular(3, 0.0, 7.0, r0=1e-8, delta=-0.1, blowup=1.0 + 1e-6)
    assert traj.termination is Termination.BLOWUP and traj.terminal_radius < 1.0
    calm = shoot_singular(3, 0.0, 7.0, r0=1e-8, delta=-0.1)
    assert calm.termination is Termination.REACHED_BOUNDARY
    assert np.all(calm.values > 0)


def test_shoot_argument_checks():
    with pytest.raises(ParameterError):
        shoot_singular(3, 0.0, 7.0, r0=1e-3)
    with pytest.raises(ParameterError):
        shoot_singular(3, 0.0, 7.0, delta=0.2)
    with pytest.raises(ParameterError):
        shoot_singular(3, 0.0, 3.0)


def test_asymptotics_window_checked():
    traj = shoot_singular(3, 0.0, 7.0)
    with pytest.raises(ParameterError):
        classical_asymptotics(traj, (1e-7, 1e-3))
    assert math.isfinite(classical_asymptotics(traj, (1e-5, 1e-3)).exponent)
