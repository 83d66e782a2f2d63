"""Rate, Harnack-ratio and integral-bound measurements on computed radial functions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import ParameterError, sphere_area
from .fracop import _legendre, _spline_model


class NonIntegrableError(ParameterError):
    """The weighted integral of u^p diverges at the origin."""


@dataclass(frozen=True)
class FitResult:
    """Least-squares line through (log r, log y) over ``window``.

    For profiles ``exponent`` is the decay rate (minus the slope); for growing
    quantities such as the integral bound it is the slope itself.
    """

    exponent: float
    coefficient: float
    window: tuple
    max_residual: float
    sample_count: int


@dataclass(frozen=True)
class MonotonicityResult:
    nonincreasing: bool
    first_violation: int | None


def _loglog_fit(r, y, window, decay):
    if np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise ParameterError("values must be positive and finite on the fit window")
    if r.size < 8:
        raise ParameterError(f"only {r.size} samples in window {window}; need at least 8")
    x, z = np.log(r), np.log(y)
    slope, intercept = np.polyfit(x, z, 1)
    resid = float(np.max(np.abs(z - (slope * x + intercept))))
    return FitResult(-slope if decay else slope, math.exp(intercept), tuple(window), resid, int(r.size))


def _check_window(u, window):
    ra, rb = window
    if not (ra < rb):
        raise ParameterError(f"empty window {window}")
    if ra < u.grid.nodes[0] * (1 - 1e-12) or rb > u.grid.nodes[-1] * (1 + 1e-12):
        raise ParameterError(f"window {window} leaves the grid [{u.grid.nodes[0]:.3g}, {u.grid.nodes[-1]:.3g}]")


def fit_asymptotics(u, window=(1e-4, 1e-2)):
    """Fit u ~ coefficient * r^{-exponent} on the nodes inside ``window``."""
    _check_window(u, window)
    r = u.grid.nodes
    mask = (r >= window[0]) & (r <= window[1])
    return _loglog_fit(r[mask], u.values[mask], window, decay=True)


def harnack_ratio(u, r):
    """sup u / inf u over [r, 2r], from the endpoints and the nodes in between."""
    _check_window(u, (r, 2 * r))
    nodes = u.grid.nodes
    vals = np.concatenate([u(np.array([r, 2 * r])), u.values[(nodes > r) & (nodes < 2 * r)]])
    if np.any(vals <= 0):
        raise ParameterError(f"u must be positive on [{r}, {2 * r}]")
    return float(np.max(vals) / np.min(vals))


def max_harnack_ratio(u, window=(1e-4, 0.25)):
    """Largest dyadic-annulus ratio over [r, 2r] for r = r_a 2^k, 2r <= r_b."""
    ra, rb = window
    count = int(math.floor(math.log2(rb / ra) + 1e-12))
    if count < 1:
        raise ParameterError(f"window {window} holds no dyadic annulus")
    return max(harnack_ratio(u, ra * 2.0**k) for k in range(count))


def coefficient_sandwich(fit, K, C):
    """Whether the fitted coefficient lies in [K / C, C K]."""
    return K / C <= fit.coefficient <= C * K


def weighted_integral(u, params, radii, n_gauss=16):
    """I(r) = |S^{N-1}| int_0^r rho^{N-1+theta} u(rho)^p d rho at each radius.

    Below the first node the model is r^{-beta_w} w_0, integrated in closed form;
    above it the integrand is integrated cell by cell in t = log rho.
    """
    N, theta, p = params.N, params.theta, params.p
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    g = u.grid
    if np.any(radii <= g.nodes[0]) or np.any(radii >= g.r_max):
        raise ParameterError("sample radii must lie between the first node and r_max")
    w0 = float(u.weighted[0])
    if w0 < 0:
        raise ParameterError("u must be nonnegative")
    rate = N + theta - p * u.beta_w
    if not rate > 0 and w0 != 0:
        raise NonIntegrableError(f"integrand behaves like rho^{rate - 1:.4g} at the origin")
    t_first = g.log_nodes[0]
    head = w0**p * math.exp(rate * t_first) / rate if w0 != 0 else 0.0
    x, wx = _legendre(n_gauss)
    model = _spline_model(g)
    out = np.empty(radii.size)
    for i, rr in enumerate(radii):
        edges = np.concatenate([g.log_nodes[g.log_nodes < math.log(rr)], [math.log(rr)]])
        a, b = edges[:-1], edges[1:]
        half = 0.5 * (b - a)
        t = (0.5 * (a + b))[:, None] + half[:, None] * x[None, :]
        vals = model.evaluate(t.ravel(), u.weighted, u.end_weighted).reshape(t.shape) * np.exp(-u.beta_w * t)
        if np.any(vals < -1e-14 * np.max(np.abs(vals))):
            raise ParameterError("u must be nonnegative")
        integrand = np.exp((N + theta) * t) * np.maximum(vals, 0.0) ** p
        out[i] = head + float(np.sum(half[:, None] * wx[None, :] * integrand))
    return sphere_area(N - 1) * out


def integral_bound_exponent(u, params, r_samples=None):
    """Growth exponent of I(r), expected N - (theta + 2 s p)/(p - 1) for singular solutions."""
    if r_samples is None:
        lo = max(1e-4, u.grid.nodes[1])
        hi = min(0.25, u.grid.nodes[-1])
        r_samples = np.geomspace(lo, hi, 24)
    r = np.asarray(r_samples, dtype=float)
    I = weighted_integral(u, params, r)
    return _loglog_fit(r, I, (float(r[0]), float(r[-1])), decay=False)


def expected_integral_exponent(params):
    return params.N - (params.theta + 2 * params.s * params.p) / (params.p - 1)


def monotonicity_check(u, rtol=1e-12):
    """Whether nodal values are nonincreasing in r, and the first node that rises."""
    v = u.values
    rise = v[1:] - v[:-1] > rtol * np.maximum(np.abs(v[1:]), np.abs(v[:-1]))
    if np.any(rise):
        return MonotonicityResult(False, int(np.argmax(rise)) + 1)
    return MonotonicityResult(True, None)
