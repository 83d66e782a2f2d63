"""Fractional Laplacian of radial functions.

For radial ``u`` and ``x = r0 e1`` the N-dimensional principal value reduces to

    (-Delta)^s u(r0) = C_{N,s} r0^{-2s} p.v. int (u(r0) - u(r0 e^t)) kappa(t) dt,

with the log-radial kernel ``kappa(t) = e^{Nt} K(1, e^t)`` and ``K(r0, r)``
the sphere integral of |r0 e1 - r w|^{-N-2s}.  ``kappa`` is evaluated from
its hypergeometric closed form; :func:`angular_kernel` is the independent
quadrature route used to check it.

Radial functions are stored as nodal values on a grid together with a
singular weight exponent ``beta_w``: the weighted function r^beta_w u is a
cubic spline in log r with zero slope at the first node, continued as a
constant below it (so u ~ r^-beta_w near the origin, joined C^1).  The spline
has one more knot at ``r_max``, pinned to the tail's limit there with a
natural end condition, so the model is continuous across ``r_max`` (for
Dirichlet data it vanishes at the boundary).  Outside ``r_max`` the function
is given by a tail model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import special
from scipy.integrate import tanhsinh
from scipy.interpolate import CubicSpline

from .constants import ParameterError, QuadratureError, normalization_constant, sphere_area

# ---------------------------------------------------------------------------
# grids and radial functions


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Strictly increasing nodes inside (r_min, r_max)."""

    nodes: np.ndarray
    r_min: float
    r_max: float
    spacing: str = "custom"

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 4:
            raise ParameterError("a grid needs at least four nodes")
        if np.any(np.diff(nodes) <= 0) or nodes[0] <= 0:
            raise ParameterError("grid nodes must be positive and strictly increasing")
        if not (self.r_min < nodes[0] and nodes[-1] < self.r_max):
            raise ParameterError("grid nodes must lie strictly inside (r_min, r_max)")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def n(self):
        return self.nodes.size

    @property
    def log_nodes(self):
        return np.log(self.nodes)

    @classmethod
    def log_uniform(cls, n=400, r_min=1e-6, r_max=1.0):
        """n nodes r_min q^k, k = 1..n, with r_max = r_min q^{n+1}."""
        t = np.linspace(math.log(r_min), math.log(r_max), n + 2)[1:-1]
        return cls(np.exp(t), r_min, r_max, "log")

    @classmethod
    def boundary_graded(cls, n_inner=100, n_boundary=100, r_min=1e-4, r_max=1.0, gap=1e-5, r_split=0.5):
        """Log-uniform below ``r_split``; geometric in the distance to ``r_max`` above it.

        The last node sits at distance ``gap * r_max`` from ``r_max``.
        """
        inner = np.exp(np.linspace(math.log(r_min), math.log(r_split), n_inner + 1)[1:])
        dist = np.geomspace((r_max - r_split), gap * r_max, n_boundary + 1)[1:]
        return cls(np.concatenate([inner, r_max - dist]), r_min, r_max, "graded")

    def is_log_uniform(self, rtol=1e-12):
        t = np.concatenate([[math.log(self.r_min)], self.log_nodes, [math.log(self.r_max)]])
        h = np.diff(t)
        return bool(np.all(np.abs(h - h[0]) <= rtol * max(abs(h[0]), 1.0) * 10))

    def reflected(self):
        """Grid under r -> 1/r."""
        return RadialGrid(1.0 / self.nodes[::-1], 1.0 / self.r_max, 1.0 / self.r_min, self.spacing)

    def scaled(self, lam):
        """Grid under r -> lam r."""
        return RadialGrid(lam * self.nodes, lam * self.r_min, lam * self.r_max, self.spacing)


@dataclass(frozen=True)
class ZeroTail:
    def value(self, r):
        return np.zeros_like(np.asarray(r, dtype=float))


@dataclass(frozen=True)
class PowerTail:
    """u(r) = amplitude * r^{-decay} beyond the grid."""

    amplitude: float
    decay: float

    def value(self, r):
        return self.amplitude * np.asarray(r, dtype=float) ** (-self.decay)


@dataclass(frozen=True)
class ConstantThenZero:
    """u = value on r_max < r < outer_radius, zero beyond."""

    value_: float
    outer_radius: float = 2.0

    def value(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r < self.outer_radius, self.value_, 0.0)


def end_value(tail, r_max, beta_w=0.0):
    """Weighted limit r_max^beta_w u(r_max+) of a tail model."""
    return float(tail.value(r_max)) * r_max**beta_w


def _check_tail(tail, s):
    if isinstance(tail, PowerTail) and not tail.decay > -2 * s:
        raise ParameterError(
            f"PowerTail decay {tail.decay} must exceed -2s = {-2 * s} for the tail to be in L^1_s"
        )
    if not isinstance(tail, (ZeroTail, PowerTail, ConstantThenZero)):
        raise ParameterError(f"unknown tail model {tail!r}")


@dataclass(frozen=True, eq=False)
class RadialFunction:
    grid: RadialGrid
    values: np.ndarray
    beta_w: float = 0.0
    tail: object = field(default_factory=ZeroTail)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.grid.nodes.shape:
            raise ParameterError("values must match the grid")
        if not np.all(np.isfinite(v)):
            raise ParameterError("values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def weighted(self):
        return self.grid.nodes**self.beta_w * self.values

    @property
    def end_weighted(self):
        """Weighted value at r_max, fixed by the tail."""
        return end_value(self.tail, self.grid.r_max, self.beta_w)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        inside = r < self.grid.r_max
        out = np.empty_like(r)
        if np.any(inside):
            model = _spline_model(self.grid)
            out[inside] = model.evaluate(np.log(r[inside]), self.weighted, self.end_weighted) * r[inside] ** (
                -self.beta_w
            )
        if np.any(~inside):
            out[~inside] = self.tail.value(r[~inside])
        return out

    def with_values(self, values):
        return RadialFunction(self.grid, values, self.beta_w, self.tail)

    def dilated(self, lam):
        """The function r -> u(lam r)."""
        tail = self.tail
        if isinstance(tail, PowerTail):
            tail = PowerTail(tail.amplitude * lam ** (-tail.decay), tail.decay)
        elif isinstance(tail, ConstantThenZero):
            tail = ConstantThenZero(tail.value_, tail.outer_radius / lam)
        return RadialFunction(self.grid.scaled(1.0 / lam), self.values, self.beta_w, tail)


def power_function(grid, tau, amplitude=1.0):
    """amplitude * r^tau sampled on ``grid`` with the matching weight and tail.

    With beta_w = -tau the weighted function is constant, so the model is exact
    everywhere.
    """
    return RadialFunction(grid, amplitude * grid.nodes**tau, -tau, PowerTail(amplitude, -tau))


# ---------------------------------------------------------------------------
# kernels


def angular_kernel(N, s, r0, r, tol=1e-10):
    """Sphere integral of |r0 e1 - r w|^{-N-2s} over w in S^{N-1}, by quadrature.

    For N >= 2 this is |S^{N-2}| int_0^pi sin^{N-2}(phi) (r0^2 + r^2 - 2 r0 r cos phi)^{-(N+2s)/2} dphi.
    The integrand peaks at phi = 0 with width |r - r0|; the substitution
    sin(phi/2) = |r - r0| / (2 sqrt(r0 r)) sinh(v) flattens the peak.  The
    kernel is not integrable for r = r0, which is rejected.
    """
    if r0 <= 0 or r <= 0:
        raise ParameterError("radii must be positive")
    if r == r0:
        raise ParameterError("the kernel diverges at r = r0; use the principal-value scheme")
    a = -(N + 2 * s) / 2
    if N == 1:
        return abs(r0 - r) ** (2 * a) + (r0 + r) ** (2 * a)
    d = abs(r0 - r)
    rr = r0 * r
    c = d / (2 * math.sqrt(rr))

    def peak(v):
        x = c * np.sinh(v)
        u = d * d * np.cosh(v) ** 2
        return u**a * (2 * x) ** (N - 2) * (1 - x * x) ** ((N - 3) / 2) * 2 * c * np.cosh(v)

    def bulk(phi):
        u = d * d + 4 * rr * np.sin(0.5 * phi) ** 2
        return u**a * np.sin(phi) ** (N - 2)

    r1 = tanhsinh(peak, 0.0, math.asinh(0.5 / c), rtol=tol, atol=0.0, maxlevel=12)
    r2 = tanhsinh(bulk, math.pi / 3, math.pi, rtol=tol, atol=0.0, maxlevel=12)
    value = float(r1.integral + r2.integral)
    estimate = float(r1.error + r2.error)
    if not (r1.success and r2.success) and estimate > tol * abs(value):
        raise QuadratureError(f"angular kernel missed tol={tol} (estimate {estimate:.3e})", estimate)
    return sphere_area(N - 2) * value


def angular_kernel_closed(N, s, r0, r):
    """Closed form of :func:`angular_kernel` through 2F1(-s, N/2-1-s; N/2; .)."""
    lo, hi = min(r0, r), max(r0, r)
    x = lo / hi
    return hi ** (-N - 2 * s) * sphere_area(N - 1) * (1 - x * x) ** (-1 - 2 * s) * special.hyp2f1(
        -s, N / 2 - 1 - s, N / 2, x * x
    )


def log_kernel(N, s, t, shift=0.0):
    """kappa(t) e^{shift t}, with kappa(t) = e^{Nt} K(1, e^t) the kernel in t = log(r/r0)."""
    t = np.asarray(t, dtype=float)
    return np.abs(t) ** (-1 - 2 * s) * log_kernel_regular(N, s, t, shift)


def log_kernel_regular(N, s, t, shift=0.0):
    """|t|^{1+2s} kappa(t) e^{shift t}, which is smooth and positive through t = 0."""
    t = np.asarray(t, dtype=float)
    m = -np.abs(t)
    z = np.exp(2 * m)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(m == 0, 0.5, np.abs(m) / -np.expm1(2 * m))
    # kappa(-t) = kappa(t) e^{(2s-N) t}; combine the exponentials to avoid overflow
    expo = np.where(t > 0, -2 * s * np.abs(t), N * m) + shift * t
    return sphere_area(N - 1) * np.exp(expo) * ratio ** (1 + 2 * s) * special.hyp2f1(-s, N / 2 - 1 - s, N / 2, z)


# ---------------------------------------------------------------------------
# quadrature rules


@lru_cache(maxsize=None)
def _legendre(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


@lru_cache(maxsize=None)
def _jacobi(n, gamma):
    # weight y^gamma on [0, 1]
    x, w = special.roots_jacobi(n, 0.0, gamma)
    return 0.5 * (1 + x), w * 0.5 ** (gamma + 1)


@lru_cache(maxsize=None)
def _laguerre(n):
    return special.roots_laguerre(n)


def _panels(a, b, t0):
    """Split [a, b] (t0 outside) into panels no wider than their distance to t0."""
    if b <= a:
        return []
    if t0 >= b:
        return [(2 * t0 - q, 2 * t0 - p) for (p, q) in reversed(_panels(2 * t0 - b, 2 * t0 - a, t0))]
    d = a - t0
    out, x = [], a
    while x < b:
        w = max(x - t0, d)
        out.append((x, min(x + w, b)))
        x = out[-1][1]
    return out


def _gauss_points(intervals, n):
    x, w = _legendre(n)
    if not intervals:
        return np.empty(0), np.empty(0)
    iv = np.asarray(intervals, dtype=float)
    half = 0.5 * (iv[:, 1] - iv[:, 0])
    mid = 0.5 * (iv[:, 1] + iv[:, 0])
    pts = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wts = (half[:, None] * w[None, :]).ravel()
    return pts, wts


def _phi_functions(z):
    """phi_j(z) = (e^z - sum_{i<j} z^i/i!) / z^j for j = 0..3."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 0.5
    out = np.empty((4,) + z.shape)
    ez = np.exp(z)
    zs = np.where(small, 1.0, z)
    out[0] = ez
    out[1] = np.expm1(zs) / zs
    out[2] = (out[1] - 1) / zs
    out[3] = (out[2] - 0.5) / zs
    if np.any(small):
        zz = z[small]
        for j in (1, 2, 3):
            acc = np.zeros_like(zz)
            term = np.full_like(zz, 1.0 / math.factorial(j))
            for k in range(25):
                acc += term
                term = term * zz / (k + j + 1)
            out[j][small] = acc
    return out


# ---------------------------------------------------------------------------
# the spline model


class _SplineModel:
    """Cubic pieces of the weighted function as linear maps of the knot values.

    The knots are the n nodes plus log r_max; the last of the n + 1 columns is
    the pinned end value.  Piece k covers [lo_k, hi_k] and reads
    w(t) = sum_d coef[k, d, :] @ w_knots * (t - anchor_k)^d.  Piece 0 is the
    constant continuation (-inf, t_0]; piece n runs from the last node to log r_max.
    """

    def __init__(self, grid):
        t = grid.log_nodes
        n = t.size
        knots = np.append(t, math.log(grid.r_max))
        m = n + 1
        spl = CubicSpline(knots, np.eye(m), bc_type=((1, np.zeros(m)), (2, np.zeros(m))))
        c = spl.c  # (4, n, m), highest power first
        cells = np.transpose(c[::-1], (1, 0, 2))  # (n, 4, m)
        first = np.zeros((1, 4, m))
        first[0, 0, 0] = 1.0
        self.t = t
        self.n = n
        self.coef = np.concatenate([first, cells], axis=0)
        self.coef_flat = np.ascontiguousarray(self.coef.reshape(4 * m, m))
        self.anchor = np.concatenate([[t[0]], t])
        self.lo = np.concatenate([[-np.inf], t])
        self.hi = knots.copy()

    def piece_index(self, t0):
        return min(int(np.searchsorted(self.t, t0, side="right")), self.n)

    def evaluate(self, tt, w, w_end=0.0):
        tt = np.atleast_1d(np.asarray(tt, dtype=float))
        k = np.minimum(np.searchsorted(self.t, tt, side="right"), self.n)
        dx = tt - self.anchor[k]
        c = (self.coef_flat @ np.append(w, w_end)).reshape(self.n + 1, 4)[k]
        return ((c[:, 3] * dx + c[:, 2]) * dx + c[:, 1]) * dx + c[:, 0]

    def taylor(self, k, t0):
        """Coefficient vectors a_m with w(t0 + h) = sum_m a_m h^m on piece k."""
        c = self.coef[k]
        d = t0 - self.anchor[k]
        a0 = c[0] + c[1] * d + c[2] * d**2 + c[3] * d**3
        a1 = c[1] + 2 * c[2] * d + 3 * c[3] * d**2
        a2 = c[2] + 3 * c[3] * d
        a3 = c[3]
        return np.array([a0, a1, a2, a3])


_MODEL_CACHE = {}


def _spline_model(grid):
    key = id(grid)
    hit = _MODEL_CACHE.get(key)
    if hit is not None and hit[0] is grid:
        return hit[1]
    model = _SplineModel(grid)
    if len(_MODEL_CACHE) > 32:
        _MODEL_CACHE.clear()
    _MODEL_CACHE[key] = (grid, model)
    return model


# ---------------------------------------------------------------------------
# the principal-value functional


def _semi_infinite_points(start, t0, direction, rate, n_gauss, n_laguerre=40):
    """Nodes and weights for int over [start, +-inf) of e^{-rate |t - start|} x smooth.

    Geometric panels take care of the kernel peak at t0; beyond |t - t0| = 12
    the rest is left to Gauss-Laguerre.  The returned weights
    include the factor needed so that sum w f(x) approximates int f.
    """
    d = abs(start - t0)
    pts, wts = [], []
    x = 0.0
    # the kernel is a pure exponential only once |t - t0| is large
    while d + x < 12.0:
        w = min(d + x, 2.0)
        p, q = _gauss_points([(x, x + w)], n_gauss)
        pts.append(p)
        wts.append(q)
        x += w
    lx, lw = _laguerre(n_laguerre)
    pts.append(x + lx / rate)
    wts.append(lw * np.exp(lx) / rate)
    off = np.concatenate(pts)
    w = np.concatenate(wts)
    return start + direction * off, w


def _row_functional(grid, model, N, s, beta, t0, n_gauss=16, n_jacobi=20):
    """Linear functional of (-Delta)^s at r0 = e^{t0}.

    Returns (coefficients on the n weighted nodal values and the pinned end
    value, collocation point snapped to a node when within roundoff) for
    p.v. int (v(t0) - v(t)) kappa(t - t0) dt over t < log r_max, without the
    C_{N,s} r0^{-2s} prefactor.  The exterior region is added by the caller,
    which knows the tail.
    """
    n = model.n
    t_nodes = model.t
    t_max = math.log(grid.r_max)
    if not (t0 < t_max):
        raise ParameterError("evaluation radius must lie below r_max")
    if beta >= N:
        raise ParameterError(f"weight exponent {beta} must be below N={N} for integrability at the origin")

    # locate the collocation point and its two windows
    j = int(np.searchsorted(t_nodes, t0))
    if j == n or (j > 0 and t0 - t_nodes[j - 1] < t_nodes[j] - t0):
        j -= 1
    at_node = abs(t_nodes[j] - t0) <= 1e-13 * max(1.0, abs(t0))
    if at_node:
        t0 = t_nodes[j]
        k_right = j + 1
        right = (t0, model.hi[j + 1])
        k_left = j
        left = (t_nodes[j - 1], t0) if j > 0 else (t0 - (t_nodes[1] - t_nodes[0]), t0)
    else:
        k = model.piece_index(t0)
        k_left = k_right = k
        lo = model.lo[k] if k > 0 else t0 - (t_nodes[1] - t_nodes[0])
        left = (lo, t0)
        right = (t0, model.hi[k])
    hL = left[1] - left[0]
    hR = right[1] - right[0]

    # Taylor data: a0, a1 shared; a2, a3 per side (the model is only C^1 at the first node)
    aR = model.taylor(k_right, t0)
    aL = model.taylor(k_left, t0)
    a0, a1 = aR[0], aR[1]
    aL = np.array([a0, a1, aL[2], aL[3]])
    ebt = math.exp(-beta * t0)
    b1 = a1 - beta * a0
    b2R = aR[2] - beta * a1 + 0.5 * beta**2 * a0
    b2L = aL[2] - beta * a1 + 0.5 * beta**2 * a0

    gam = 1 - 2 * s
    yj, wj = _jacobi(n_jacobi, gam)
    hmin = min(hL, hR)
    y = hmin * yj
    wy = wj * hmin ** (gam + 1)
    W1 = np.sum(wy * log_kernel_regular(N, s, -y) * np.expm1((N - 2 * s) * y) / y)
    if hR > hL:
        p, w = _gauss_points(_panels(t0 + hL, t0 + hR, t0), n_gauss)
        W1 += np.sum(w * (p - t0) * log_kernel(N, s, p - t0))
    elif hL > hR:
        p, w = _gauss_points(_panels(t0 - hL, t0 - hR, t0), n_gauss)
        W1 += np.sum(w * (p - t0) * log_kernel(N, s, p - t0))
    yR = hR * yj
    yL = hL * yj
    W2R = np.sum(wj * hR ** (gam + 1) * log_kernel_regular(N, s, yR))
    W2L = np.sum(wj * hL ** (gam + 1) * log_kernel_regular(N, s, -yL))

    # remainder integrals with weight |t'|^{2-2s}
    gam3 = 2 - 2 * s
    y3, w3 = _jacobi(n_jacobi, gam3)
    coeffs = -(b1 * W1 + b2R * W2R + b2L * W2L)
    for side, h, a in ((1.0, hR, aR), (-1.0, hL, aL)):
        yy = h * y3
        ww = w3 * h ** (gam3 + 1) * log_kernel_regular(N, s, side * yy)
        phis = _phi_functions(-beta * side * yy)
        # q_m(t') = (-beta)^{3-m} phi_{3-m}(-beta t'); t'^3 = side * y^3
        acc = np.zeros(n + 1)
        for m in range(4):
            acc += np.sum(ww * (-beta) ** (3 - m) * phis[3 - m]) * a[m]
        coeffs -= side * acc
    coeffs = coeffs * ebt

    # far field: every finite piece minus the two windows
    win_lo, win_hi = left[0], right[1]
    seg_a, seg_b, seg_k = [], [], []
    for k in range(1, n + 1):
        lo, hi = model.lo[k], model.hi[k]
        if lo < win_lo:
            seg_a.append(lo)
            seg_b.append(min(hi, win_lo))
            seg_k.append(k)
        if hi > win_hi:
            seg_a.append(max(lo, win_hi))
            seg_b.append(hi)
            seg_k.append(k)
    pts, wts, idx = [], [], []
    if seg_a:
        sa, sb, sk = np.array(seg_a), np.array(seg_b), np.array(seg_k)
        dist = np.where(sa >= t0, sa - t0, t0 - sb)
        simple = (sb - sa) <= dist
        p, w = _gauss_points(list(zip(sa[simple], sb[simple])), n_gauss)
        pts.append(p)
        wts.append(w)
        idx.append(np.repeat(sk[simple], n_gauss))
        for a_, b_, k in zip(sa[~simple], sb[~simple], sk[~simple]):
            pan = _panels(a_, b_, t0)
            p, w = _gauss_points(pan, n_gauss)
            pts.append(p)
            wts.append(w)
            idx.append(np.full(p.size, k))
    mass = 0.0
    if pts:
        p = np.concatenate(pts)
        w = np.concatenate(wts)
        kk = np.concatenate(idx)
        kap = w * log_kernel(N, s, p - t0)
        mass += kap.sum()
        vw = kap * np.exp(-beta * p)
        dx = p - model.anchor[kk]
        moments = np.stack([np.bincount(kk, vw * dx**d, minlength=n + 1) for d in range(4)], axis=1)
        coeffs -= moments.reshape(-1) @ model.coef_flat

    # left semi-infinite region, where the model is constant in t
    start = min(t_nodes[0], win_lo)
    p, w = _semi_infinite_points(start, t0, -1.0, float(N), n_gauss)
    mass += np.sum(w * log_kernel(N, s, p - t0))
    p, w = _semi_infinite_points(start, t0, -1.0, N - beta, n_gauss)
    vw = w * log_kernel(N, s, p - t0, -beta) * math.exp(-beta * t0)
    dx = p - model.anchor[0]
    coeffs -= model.coef[0, 0] * np.sum(vw) + model.coef[0, 1] * np.sum(vw * dx)

    v0 = ebt * a0
    coeffs = coeffs + mass * v0
    return coeffs, t0


def _exterior_terms(N, s, t0, t_max, tail, n_gauss=16):
    """(kappa mass of [t_max, inf), int over [t_max, inf) of u_tail(e^t) kappa(t - t0) dt)."""
    p, w = _semi_infinite_points(t_max, t0, 1.0, 2 * s, n_gauss)
    kap = w * log_kernel(N, s, p - t0)
    mass = kap.sum()
    if isinstance(tail, ZeroTail):
        return mass, 0.0
    if isinstance(tail, PowerTail):
        rate = tail.decay + 2 * s
        p2, w2 = _semi_infinite_points(t_max, t0, 1.0, rate, n_gauss)
        val = tail.amplitude * math.exp(-tail.decay * t0) * np.sum(w2 * log_kernel(N, s, p2 - t0, -tail.decay))
        return mass, float(val)
    if isinstance(tail, ConstantThenZero):
        t_out = math.log(tail.outer_radius)
        if t_out <= t_max:
            return mass, 0.0
        p2, w2 = _gauss_points(_panels(t_max, t_out, t0), n_gauss)
        return mass, float(tail.value_ * np.sum(w2 * log_kernel(N, s, p2 - t0)))
    raise ParameterError(f"unknown tail model {tail!r}")


def _row_parts(grid, N, s, beta_w, tail, r0, tol):
    """(coefficients on nodal u, tail integral term, coefficient on the pinned end value)."""
    _check_tail(tail, s)
    n_gauss = 16 if tol >= 1e-8 else 24
    model = _spline_model(grid)
    t0 = math.log(r0)
    if not (math.log(grid.r_min) < t0 < math.log(grid.r_max)):
        raise ParameterError(f"r0={r0} outside the grid range ({grid.r_min}, {grid.r_max})")
    coeffs, t0 = _row_functional(grid, model, N, s, beta_w, t0, n_gauss=n_gauss)
    mass, ext = _exterior_terms(N, s, t0, math.log(grid.r_max), tail, n_gauss=n_gauss)
    # v0 * mass of the exterior region, v0 = e^{-beta t0} w(t0)
    k = model.piece_index(t0)
    v0 = math.exp(-beta_w * t0) * model.taylor(k, t0)[0]
    coeffs = coeffs + mass * v0
    scale = normalization_constant(N, s) * math.exp(-2 * s * t0)
    # convert from weighted values to u values
    return scale * coeffs[:-1] * grid.nodes**beta_w, -scale * ext, scale * coeffs[-1]


def operator_row(grid, N, s, beta_w, tail, r0, tol=1e-9):
    """(coefficients on nodal u values, exterior constant) of (-Delta)^s u at r0."""
    row, ext, end = _row_parts(grid, N, s, beta_w, tail, r0, tol)
    # the pinned end value is data, so its column joins the exterior constant
    return row, ext + end * end_value(tail, grid.r_max, beta_w)


def apply_frac_laplacian(u, r0, N, s, tol=1e-9):
    """(-Delta)^s u at radius r0 for a :class:`RadialFunction` in dimension N."""
    row, ext = operator_row(u.grid, N, s, u.beta_w, u.tail, r0, tol)
    return float(row @ u.values + ext)


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Collocation matrix A and exterior vector e with (-Delta)^s u ~ A u + e at the nodes.

    ``end_column`` holds each row's coefficient on the weighted value at r_max,
    so the exterior vector can be rebuilt for other tails.
    """

    entries: np.ndarray
    exterior_vector: np.ndarray
    grid: RadialGrid
    N: int
    s: float
    beta_w: float
    tail: object
    end_column: np.ndarray = None

    def apply(self, values):
        return self.entries @ values + self.exterior_vector


def assemble_operator(grid, N, s, tail=None, beta_w=0.0, tol=1e-9):
    tail = ZeroTail() if tail is None else tail
    n = grid.n
    A = np.empty((n, n))
    e = np.empty(n)
    end = np.empty(n)
    for i, r in enumerate(grid.nodes):
        try:
            A[i], e[i], end[i] = _row_parts(grid, N, s, beta_w, tail, r, tol)
        except (ParameterError, QuadratureError) as exc:
            raise type(exc)(f"row {i}: {exc}") from exc
    e = e + end * end_value(tail, grid.r_max, beta_w)
    for a in (A, e, end):
        a.setflags(write=False)
    return OperatorMatrix(A, e, grid, N, s, beta_w, tail, end)


def exterior_vector(grid, N, s, tail, beta_w=0.0, tol=1e-9, operator=None):
    """Exterior contribution alone, for re-use of an assembled matrix with new data.

    Pass the assembled ``operator`` to reuse its end column; otherwise the
    column is recomputed, which costs as much as an assembly.
    """
    _check_tail(tail, s)
    n_gauss = 16 if tol >= 1e-8 else 24
    out = np.empty(grid.n)
    t_max = math.log(grid.r_max)
    for i, t0 in enumerate(grid.log_nodes):
        _, ext = _exterior_terms(N, s, t0, t_max, tail, n_gauss)
        out[i] = -normalization_constant(N, s) * math.exp(-2 * s * t0) * ext
    w_end = end_value(tail, grid.r_max, beta_w)
    if w_end == 0.0:
        return out
    if operator is not None and operator.grid is grid and operator.beta_w == beta_w:
        end = operator.end_column
    else:
        end = np.array([_row_parts(grid, N, s, beta_w, tail, r, tol)[2] for r in grid.nodes])
    return out + end * w_end
