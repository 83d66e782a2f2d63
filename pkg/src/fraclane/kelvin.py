"""Kelvin transform u -> r^{2s-N} u(1/r) of radial functions and problem parameters."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import ParameterError, ProblemParams, spectral_constant, theta_star
from .fracop import PowerTail, RadialFunction, RadialGrid, apply_frac_laplacian


@dataclass(frozen=True, eq=False)
class KelvinPair:
    """A function on (0, 1) and its transform on (1, inf)."""

    interior: RadialFunction
    exterior: RadialFunction


def kelvin_transform(u, N, s):
    """v(r) = r^{2s-N} u(1/r) on the reflected grid.

    Node values map exactly.  The region beyond the grid of u becomes the gap
    below the first node of v, where the model holds r^{beta_w} v constant, so
    a power tail r^{-d} of u fixes the weight exponent of v to N - 2s - d;
    otherwise it is N - 2s - beta_w.  The constant closure of u below its first
    node becomes the power tail of v.  Power functions map to power functions
    exactly, and applying the transform twice restores values and weight.
    """
    grid = u.grid
    if not grid.is_log_uniform():
        raise ParameterError("the Kelvin transform needs a log-uniform grid")
    if isinstance(u.tail, PowerTail):
        beta = N - 2 * s - u.tail.decay
    else:
        beta = N - 2 * s - u.beta_w
    if not beta < N:
        raise ParameterError(f"transformed weight exponent {beta} leaves the admissible range")
    new_grid = grid.reflected()
    r = new_grid.nodes
    values = r ** (2 * s - N) * u.values[::-1]
    # below r_min the weighted function of u equals its first nodal value
    tail = PowerTail(float(u.weighted[0]), N - 2 * s - u.beta_w)
    return RadialFunction(RadialGrid(r, new_grid.r_min, new_grid.r_max, grid.spacing), values, beta, tail)


def kelvin_pair(interior, N, s):
    if interior.grid.r_max > 1.0:
        raise ParameterError("the interior function must live in the unit ball")
    return KelvinPair(interior, kelvin_transform(interior, N, s))


def _relative(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    denom = np.maximum(np.abs(a), np.abs(b))
    return np.where(denom > 0, np.abs(a - b) / np.where(denom > 0, denom, 1.0), 0.0)


def verify_kelvin_identity(gamma, N, s, sample_radii=(0.5, 1.0, 2.0), route="analytic", grid=None, tol=None):
    """Max relative mismatch in (-Delta)^s u#(r) = r^{-2s-N} ((-Delta)^s u)(1/r) for u = r^{-gamma}.

    ``route="analytic"`` evaluates both sides from closed forms.
    ``route="quadrature"`` evaluates both sides with the discrete operator, the
    left on the transformed function, with a
    weight exponent (N - 2s)/2 that does not match the power.  If ``tol`` is given, a larger mismatch
    raises.
    """
    if not (-2 * s < gamma < N):
        raise ParameterError(f"gamma={gamma} puts the spectral arguments outside (-N, 2s)")
    radii = np.asarray(sample_radii, dtype=float)
    if route == "analytic":
        lhs = spectral_constant(N, s, 2 * s - N + gamma) * radii ** (gamma - N)
        rhs = radii ** (-2 * s - N) * spectral_constant(N, s, -gamma) * (1 / radii) ** (-gamma - 2 * s)
    elif route == "quadrature":
        # 48 cells per octave on [2^-20, 2^10]: 1/2, 1 and 2 are nodes
        grid = RadialGrid.log_uniform(1439, 2.0**-20, 2.0**10) if grid is None else grid
        # a weight that does not match the power, so the spline model is exercised
        u = RadialFunction(grid, grid.nodes ** (-gamma), (N - 2 * s) / 2, PowerTail(1.0, gamma))
        v = kelvin_transform(u, N, s)
        lhs = np.array([apply_frac_laplacian(v, r, N, s) for r in radii])
        rhs = np.array([r ** (-2 * s - N) * apply_frac_laplacian(u, 1 / r, N, s) for r in radii])
    else:
        raise ParameterError(f"unknown route {route!r}")
    mismatch = float(np.max(_relative(lhs, rhs)))
    if tol is not None and mismatch > tol:
        raise ParameterError(f"Kelvin identity mismatch {mismatch:.3e} exceeds {tol:.1e}")
    return mismatch


def exterior_to_interior(params):
    """Interior parameters (N, s, theta*, p) for the exterior problem with weight theta~ = params.theta."""
    N, s, tt, p = params.N, params.s, params.theta, params.p
    if not tt > -2 * s:
        raise ParameterError(f"exterior weight {tt} must exceed -2s = {-2 * s}")
    ts = theta_star(N, s, tt, p)
    if not ts > -2 * s:
        raise ParameterError(
            f"theta* = {ts} is not above -2s = {-2 * s}; need p > (N + theta~)/(N - 2s) = {(N + tt) / (N - 2 * s)}"
        )
    return ProblemParams(N, s, ts, p, unrestricted=params.unrestricted)


def exterior_decay(params):
    """Decay rate (2s + theta~)/(p - 1) of the exterior singular profile."""
    return (2 * params.s + params.theta) / (params.p - 1)
