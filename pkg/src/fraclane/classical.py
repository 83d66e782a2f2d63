"""The s = 1 radial Lane-Emden equation -u'' - (N-1)u'/r = r^theta u^p.

Shooting works in Emden-Fowler variables: with x = log r and u = r^{-b} y,
b = (2 + theta)/(p - 1), the equation becomes autonomous,

    y'' + (N - 2 - 2b) y' - b (N - 2 - b) y + y^p = 0,

and the singular profile c r^{-b} is the fixed point y = c.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .constants import ParameterError, classical_coefficient
from .diagnostics import FitResult, _loglog_fit


class Termination(enum.Enum):
    REACHED_BOUNDARY = "ReachedBoundary"
    BLOWUP = "Blowup"
    UNDERFLOW = "Underflow"


@dataclass(frozen=True, eq=False)
class OdeTrajectory:
    radii: np.ndarray
    values: np.ndarray
    derivatives: np.ndarray
    termination: Termination
    terminal_radius: float
    params: tuple = ()
    dense: object = None

    def __post_init__(self):
        for name in ("radii", "values", "derivatives"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)


def classical_rate(theta, p):
    return (2 + theta) / (p - 1)


def _check_classical(N, theta, p):
    if N < 3 or int(N) != N:
        raise ParameterError(f"need an integer dimension N >= 3, got {N}")
    if not theta > -2:
        raise ParameterError(f"need theta > -2, got {theta}")
    serrin = (N + theta) / (N - 2)
    if not p >= serrin:
        raise ParameterError(f"p={p} is below (N + theta)/(N - 2) = {serrin}; no positive singular profile")


def verify_classical_profile(N, theta, p, radii=None):
    """sup over radii of |-u'' - (N-1)u'/r - r^theta u^p| / (r^theta u^p) for u = c r^{-b}.

    At p = (N + theta)/(N - 2) the coefficient vanishes and the residual is 0.
    """
    _check_classical(N, theta, p)
    c = classical_coefficient(N, theta, p)
    if c == 0.0:
        return 0.0
    b = classical_rate(theta, p)
    r = np.geomspace(1e-6, 1.0, 100) if radii is None else np.asarray(radii, dtype=float)
    u = c * r ** (-b)
    du = -b * c * r ** (-b - 1)
    d2u = b * (b + 1) * c * r ** (-b - 2)
    source = r**theta * u**p
    return float(np.max(np.abs(-d2u - (N - 1) * du / r - source) / source))


def shoot_singular(N, theta, p, r0=1e-6, delta=0.0, r_end=1.0, blowup=1e12, rtol=1e-10, atol=1e-14):
    """Integrate outward from r0 with u = (1 + delta) c r^{-b} and the matching slope.

    Stops at r_end, when r^b u exceeds ``blowup`` times c, or when u reaches 0.
    """
    _check_classical(N, theta, p)
    if not (1e-8 <= r0 <= 1e-4):
        raise ParameterError(f"r0={r0} must lie in [1e-8, 1e-4]")
    if abs(delta) > 0.1:
        raise ParameterError(f"|delta|={abs(delta)} exceeds 0.1")
    if not r_end > r0:
        raise ParameterError("r_end must exceed r0")
    c = classical_coefficient(N, theta, p)
    if c == 0.0:
        raise ParameterError("the singular profile vanishes at this p")
    b = classical_rate(theta, p)
    a = N - 2 - 2 * b
    k = b * (N - 2 - b)

    def rhs(x, z):
        y, dy = z
        return [dy, -a * dy + k * y - np.abs(y) ** p]

    def hit_zero(x, z):
        return z[0]

    def hit_cap(x, z):
        return z[0] - blowup * c

    hit_zero.terminal = hit_cap.terminal = True
    hit_zero.direction, hit_cap.direction = -1, 1
    # u' = r^{-b-1}(y' - b y); matching the profile slope means y' = 0
    y0 = (1 + delta) * c
    sol = solve_ivp(
        rhs,
        (math.log(r0), math.log(r_end)),
        [y0, 0.0],
        method="DOP853",
        rtol=rtol,
        atol=atol,
        events=(hit_zero, hit_cap),
        dense_output=True,
    )
    if sol.status == -1:
        raise ParameterError(f"integration failed: {sol.message}")
    x = sol.t
    y, dy = sol.y
    if sol.status == 1 and sol.t_events[0].size:
        term = Termination.UNDERFLOW
    elif sol.status == 1:
        term = Termination.BLOWUP
    else:
        term = Termination.REACHED_BOUNDARY
    r = np.exp(x)
    values = r ** (-b) * y
    derivs = r ** (-b - 1) * (dy - b * y)
    interp = sol.sol

    def dense(radius):
        # u at any radius inside the trajectory, from the integrator's interpolant
        xr = np.log(np.asarray(radius, dtype=float))
        return np.exp(-b * xr) * interp(xr)[0]

    return OdeTrajectory(r, values, derivs, term, float(r[-1]), (N, theta, p, delta), dense)


def classical_asymptotics(traj, window):
    """Log-log fit of the trajectory values over ``window`` (exponent is the decay rate)."""
    ra, rb = window
    if not (traj.radii[0] * (1 - 1e-12) <= ra < rb <= traj.radii[-1] * (1 + 1e-12)):
        raise ParameterError(f"window {window} is outside the trajectory")
    r = np.geomspace(ra, rb, 64)
    if traj.dense is not None:
        v = traj.dense(r)
    else:
        # fall back to log-log interpolation between the stored steps
        v = np.exp(np.interp(np.log(r), np.log(traj.radii), np.log(np.maximum(traj.values, 1e-300))))
    return _loglog_fit(r, v, (ra, rb), decay=True)


__all__ = [
    "FitResult",
    "OdeTrajectory",
    "Termination",
    "classical_asymptotics",
    "classical_rate",
    "shoot_singular",
    "verify_classical_profile",
]
