"""Closed-form constants, Hardy exponents and regime classification.

All functions take the spatial dimension ``N`` and the fractional order ``s``
explicitly.  The central object is the multiplier

    C_s(tau) = 2^{2s} G((N+tau)/2) G((2s-tau)/2) / (G(-tau/2) G((N-2s+tau)/2)),

for which ``(-Delta)^s |x|^tau = C_s(tau) |x|^{tau-2s}`` away from the origin.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special
from scipy.integrate import tanhsinh


class ParameterError(ValueError):
    """Raised when parameters leave the admissible range of an operation."""


class QuadratureError(RuntimeError):
    """Raised when an adaptive quadrature misses its tolerance."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


def _check_order(N, s):
    if not 0.0 < s < 1.0:
        raise ParameterError(f"fractional order s={s} must lie in (0, 1)")
    if N < 1 or int(N) != N:
        raise ParameterError(f"dimension N={N} must be a positive integer")


def sphere_area(n):
    """Surface measure of the unit sphere S^n in R^{n+1} (|S^0| = 2)."""
    return 2.0 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)


def normalization_constant(N, s):
    """C_{N,s} = 2^{2s} pi^{-N/2} s Gamma((N+2s)/2) / Gamma(1-s)."""
    _check_order(N, s)
    return 2.0 ** (2 * s) * math.pi ** (-N / 2) * s * math.gamma((N + 2 * s) / 2) / math.gamma(1 - s)


def spectral_constant(N, s, tau):
    """Multiplier C_s(tau) of the fractional Laplacian on |x|^tau.

    ``tau`` may be a scalar or an array; every entry must lie in (-N, 2s).
    The two denominator Gammas enter through ``rgamma`` so that the zeros at
    tau = 0 and tau = 2s - N come out as exact zeros.
    """
    _check_order(N, s)
    t = np.asarray(tau, dtype=float)
    if np.any(t <= -N) or np.any(t >= 2 * s) or not np.all(np.isfinite(t)):
        raise ParameterError(f"tau must lie in (-N, 2s) = ({-N}, {2 * s})")
    val = (
        2.0 ** (2 * s)
        * special.gamma((N + t) / 2)
        * special.gamma((2 * s - t) / 2)
        * special.rgamma(-t / 2)
        * special.rgamma((N - 2 * s + t) / 2)
    )
    if val.ndim == 0:
        return float(val)
    return val


def spectral_sign(N, s, tau):
    """Sign of C_s(tau) predicted from the position of tau: +1, 0 or -1."""
    if tau == 0 or tau == 2 * s - N:
        return 0
    lo, hi = sorted((0.0, 2 * s - N))
    return 1 if lo < tau < hi else -1


SERIES_RADIUS = 1e-3


def _small_rho_series(N, tau, rho):
    # sphere moments E[c^2] = 1/N, E[c^4] = 3/(N(N+2)) of c = w . e1
    a = 0.5 * tau
    b2 = a * (a - 1) / 2
    b3 = b2 * (a - 2) / 3
    b4 = b3 * (a - 3) / 4
    c2 = a + 4 * b2 / N
    c4 = b2 + 12 * b3 / N + 48 * b4 / (N * (N + 2))
    r2 = rho * rho
    return r2 * (c2 + c4 * r2)


def _log_cosh(v):
    return v + np.log1p(np.exp(-2 * v)) - math.log(2.0)


def _sphere_average_minus_one(N, tau, rho, delta, rtol):
    """Mean of |e1 - rho w|^tau - 1 over the unit sphere, for 0 < rho < 1.

    ``delta`` is 1 - rho, passed separately so that radii within rounding of
    the unit sphere keep their distance to it.  With x = sin(phi/2) and
    x = delta/(2 sqrt(rho)) sinh(v) one has |e1 - rho w| = delta cosh(v), so
    the peak at phi = 0 is stretched to unit width in v; the rest of the
    angular range, phi > pi/3, is smooth and integrated directly.  Below rho = 1e-3
    the small-rho expansion through rho^4 replaces the quadrature, which would
    only be cancelling O(rho) terms.
    """
    rho = np.asarray(rho, dtype=float)
    delta = np.asarray(delta, dtype=float)
    shape = rho.shape
    rho = rho.ravel()
    delta = np.broadcast_to(delta, shape).ravel()
    out = _small_rho_series(N, tau, rho)
    err = np.abs(out) * rho**4
    big = rho >= SERIES_RADIUS
    if not np.any(big):
        return out.reshape(shape), err.reshape(shape)
    if N == 1:
        rb = rho[big]
        out[big] = 0.5 * (np.expm1(tau * np.log1p(rb)) + np.expm1(tau * np.log(delta[big])))
        err[big] = 0.0
        return out.reshape(shape), err.reshape(shape)
    rb, db = rho[big], delta[big]
    c = db / (2 * np.sqrt(rb))
    norm = math.sqrt(math.pi) * math.gamma((N - 1) / 2) / math.gamma(N / 2)

    def peak(v, c, log_d):
        # phi in [0, pi/3], i.e. x = sin(phi/2) in [0, 1/2]
        x = c * np.sinh(v)
        core = np.expm1(tau * (log_d + _log_cosh(v)))
        return core * (2 * x) ** (N - 2) * (1 - x * x) ** ((N - 3) / 2) * 2 * c * np.cosh(v)

    def bulk(phi, r, d):
        u = d * d + 4 * r * np.sin(0.5 * phi) ** 2
        return np.expm1(0.5 * tau * np.log(u)) * np.sin(phi) ** (N - 2)

    r1 = tanhsinh(peak, 0.0, np.arcsinh(0.5 / c), args=(c, np.log(db)), rtol=rtol, atol=1e-300, maxlevel=10)
    r2 = tanhsinh(bulk, math.pi / 3, math.pi, args=(rb, db), rtol=rtol, atol=1e-300, maxlevel=10)
    out[big] = (r1.integral + r2.integral) / norm
    err[big] = (r1.error + r2.error) / norm
    return out.reshape(shape), err.reshape(shape)


def spectral_constant_integral(N, s, tau, tol=1e-8):
    """C_s(tau) from its integral representation.

    Evaluates -(C_{N,s}/2) int (|e1+z|^tau + |e1-z|^tau - 2) |z|^{-N-2s} dz in
    polar coordinates.  The shell |z| = rho > 1 is folded onto 1/rho using
    mean|e1 - rho w|^tau = rho^tau mean|e1 - w/rho|^tau, so only radii in (0, 1)
    are integrated and there is no truncation of the outer domain.  The radial
    integral is split at 1/2 and the upper half is integrated in 1 - rho.
    Raises :class:`QuadratureError` when the estimated relative error exceeds
    ``tol``.
    """
    _check_order(N, s)
    if not -N < tau < 2 * s:
        raise ParameterError(f"tau must lie in (-N, 2s) = ({-N}, {2 * s})")
    if tol <= 0:
        raise ParameterError("tol must be positive")
    if tau == 0:
        return 0.0
    inner_rtol = max(tol * 1e-3, 1e-13)

    def radial(rho, delta):
        am1, _ = _sphere_average_minus_one(N, tau, rho, delta, inner_rtol)
        near = 2.0 * rho ** (-1 - 2 * s) * am1
        far = 2.0 * rho ** (2 * s - 1) * np.expm1(-tau * np.log(rho) + np.log1p(am1))
        return near + far

    pieces = [
        tanhsinh(lambda r: radial(r, 1 - r), 0.0, SERIES_RADIUS, rtol=tol * 1e-2, atol=0.0, maxlevel=10),
        tanhsinh(lambda r: radial(r, 1 - r), SERIES_RADIUS, 0.5, rtol=tol * 1e-2, atol=0.0, maxlevel=10),
        tanhsinh(lambda d: radial(1 - d, d), 0.0, 0.5, rtol=tol * 1e-2, atol=0.0, maxlevel=10),
    ]
    scale = -0.5 * normalization_constant(N, s) * sphere_area(N - 1)
    value = scale * float(sum(p.integral for p in pieces))
    estimate = abs(scale) * float(sum(p.error for p in pieces)) + inner_rtol * abs(value)
    if not all(p.success for p in pieces) or estimate > tol * max(abs(value), 1e-300):
        raise QuadratureError(
            f"integral representation did not reach tol={tol} (estimate {estimate:.3e})", estimate
        )
    return value


def mu_zero(N, s):
    """Critical Hardy coefficient -2^{2s} Gamma^2((N+2s)/4) / Gamma^2((N-2s)/4)."""
    _check_order(N, s)
    if N <= 2 * s:
        raise ParameterError("mu_zero requires N > 2s")
    return -(2.0 ** (2 * s)) * (math.gamma((N + 2 * s) / 4) / math.gamma((N - 2 * s) / 4)) ** 2


@dataclass(frozen=True)
class HardyExponents:
    mu: float
    tau_minus: float
    tau_plus: float


def _bisect(f, lo, hi, max_steps=200):
    # runs to float resolution, well below the 1e-12 target, so that
    # C_s(tau) + mu stays small even where C_s is steep
    flo = f(lo)
    for _ in range(max_steps):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def hardy_exponents(N, s, mu):
    """Roots tau_- <= tau_+ of C_s(tau) + mu = 0.

    C_s is strictly concave with its maximum at (2s-N)/2, so tau_+ is
    bracketed to the right of the maximum and found by bisection.  tau_- is
    its mirror image under C_s(tau) = C_s(2s-N-tau); near mu_0 the roots are
    ill-conditioned individually but the mirror keeps their sum exact.
    """
    m0 = mu_zero(N, s)
    center = (2 * s - N) / 2
    if mu < m0 - 1e-14 * abs(m0):
        raise ParameterError(f"mu={mu} is below mu_0={m0}; C_s(tau) + mu has no real root")
    if mu <= m0:
        return HardyExponents(mu, center, center)
    if mu == 0:
        return HardyExponents(0.0, 2 * s - N, 0.0)

    def f(t):
        return spectral_constant(N, s, t) + mu

    eps = 0.1
    while f(2 * s - eps) >= 0:
        eps *= 0.1
        if eps < 1e-300:
            raise ParameterError(f"could not bracket tau_+ for mu={mu}")
    tau_plus = _bisect(f, center, 2 * s - eps)
    return HardyExponents(mu, (2 * s - N) - tau_plus, tau_plus)


class RegimeTag(enum.Enum):
    SERRIN_SUBCRITICAL = "SerrinSubcritical"
    SOBOLEV_SUBCRITICAL = "SerrinSupercritical_SobolevSub"
    SOBOLEV_CRITICAL = "SobolevCritical"
    SOBOLEV_SUPERCRITICAL = "SobolevSupercritical"


@dataclass(frozen=True)
class Regime:
    tag: RegimeTag
    serrin: float
    sobolev: float
    sobolev_unweighted: float


def _serrin(N, s, theta):
    return (N + theta) / (N - 2 * s)


def _sobolev(N, s, theta):
    return (N + 2 * s + 2 * theta) / (N - 2 * s)


@dataclass(frozen=True)
class ProblemParams:
    """The tuple (N, s, theta, p) for (-Delta)^s u = |x|^theta u^p in B_1 minus the origin.

    Construction rejects p at or below the Serrin exponent (N+theta)/(N-2s)
    unless ``unrestricted`` is set.
    """

    N: int
    s: float
    theta: float
    p: float
    unrestricted: bool = field(default=False, compare=False)

    def __post_init__(self):
        _check_order(self.N, self.s)
        if self.N <= 2 * self.s:
            raise ParameterError(f"need N > 2s, got N={self.N}, 2s={2 * self.s}")
        if self.theta <= -2 * self.s:
            raise ParameterError(f"need theta > -2s = {-2 * self.s}, got theta={self.theta}")
        if not self.unrestricted:
            serrin = _serrin(self.N, self.s, self.theta)
            if not self.p > serrin:
                raise ParameterError(
                    f"p={self.p} is not above the Serrin exponent (N+theta)/(N-2s)={serrin!r}"
                )

    @property
    def beta(self):
        """Singular decay rate (2s+theta)/(p-1)."""
        return (2 * self.s + self.theta) / (self.p - 1)


def regime_classify(params):
    N, s, theta, p = params.N, params.s, params.theta, params.p
    serrin = _serrin(N, s, theta)
    sobolev = _sobolev(N, s, theta)
    if p <= serrin:
        tag = RegimeTag.SERRIN_SUBCRITICAL
    elif math.isclose(p, sobolev, rel_tol=1e-14, abs_tol=0.0):
        tag = RegimeTag.SOBOLEV_CRITICAL
    elif p < sobolev:
        tag = RegimeTag.SOBOLEV_SUBCRITICAL
    else:
        tag = RegimeTag.SOBOLEV_SUPERCRITICAL
    return Regime(tag, serrin, sobolev, (N + 2 * s) / (N - 2 * s))


def in_classification_regime(params):
    """True when (theta = 0, p >= Sobolev) or (theta in (-2s, 0), p > Serrin)."""
    if params.theta == 0:
        return params.p >= _sobolev(params.N, params.s, 0.0) * (1 - 1e-14)
    return -2 * params.s < params.theta < 0 and params.p > _serrin(params.N, params.s, params.theta)


def kappa(params):
    """Singular prefactor C_s(-(2s+theta)/(p-1))^{1/(p-1)}."""
    N, s = params.N, params.s
    arg = -params.beta
    if not 2 * s - N < arg < 0:
        raise ParameterError(
            f"-(2s+theta)/(p-1)={arg} leaves (2s-N, 0); kappa is undefined for these parameters"
        )
    return spectral_constant(N, s, arg) ** (1.0 / (params.p - 1))


def classical_coefficient(N, theta, p):
    """c_{p,theta} = ((2+theta)/(p-1) * (N-2-(2+theta)/(p-1)))^{1/(p-1)} for the s = 1 problem."""
    if N < 3 or theta <= -2:
        raise ParameterError(f"need N >= 3 and theta > -2, got N={N}, theta={theta}")
    b = (2 + theta) / (p - 1) if p > 1 else math.inf
    threshold = (N + theta) / (N - 2)
    if p < threshold and not math.isclose(p, threshold, rel_tol=1e-14):
        raise ParameterError(f"p={p} is below (N+theta)/(N-2)={threshold}")
    base = b * (N - 2 - b)
    if base < 0:
        # only reachable by rounding at the threshold itself
        base = 0.0
    return base ** (1.0 / (p - 1))


def theta_star(N, s, theta_tilde, p):
    """Weight exponent of the Kelvin-transformed problem: p(N-2s) - N - 2s - theta_tilde."""
    return p * (N - 2 * s) - N - 2 * s - theta_tilde
