"""Radial Dirichlet problems in the unit ball.

All solvers work on nodal values of a :class:`RadialFunction` whose grid lies
inside (0, 1); the exterior of the ball is described by the tail model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize

from .constants import ParameterError, kappa
from .fracop import (
    ConstantThenZero,
    PowerTail,
    RadialFunction,
    RadialGrid,
    ZeroTail,
    assemble_operator,
    exterior_vector,
)


class SolverError(RuntimeError):
    """A linear solve or an iteration failed; ``condition`` holds the estimate when known."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class ConvergenceError(SolverError):
    pass


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    residual_sup: float
    converged: bool
    monotone: bool | None = None
    cap_exceeded: bool = False
    negative_clamped: bool = False
    residual_history: tuple = ()
    quadratic_constant: float | None = None
    method: str = ""


@dataclass(frozen=True)
class EigenPair:
    lambda1: float
    xi1: RadialFunction
    iterations: int
    residual: float


def default_ball_grid(n=200, r_min=1e-4):
    """Graded grid on (r_min, 1): log-uniform inside, refined toward the boundary."""
    return RadialGrid.boundary_graded(n_inner=n // 2, n_boundary=n - n // 2, r_min=r_min, r_max=1.0)


def _factor(A):
    lu = linalg.lu_factor(A, check_finite=True)
    anorm = np.linalg.norm(A, 1)
    rcond, info = linalg.lapack.dgecon(lu[0], anorm, norm="1")
    condition = math.inf if rcond == 0 else 1.0 / rcond
    if not np.isfinite(condition) or condition > 1e14:
        raise SolverError(f"operator matrix is singular to working precision (condition ~ {condition:.3e})", condition)
    return lu, condition


def _check_ball(grid):
    if grid.r_max != 1.0:
        raise ParameterError(f"ball problems need r_max = 1, got {grid.r_max}")


def solve_linear_dirichlet(grid, rhs, tail, N, s, beta_w=0.0, operator=None):
    """Nodal u with A u = rhs - exterior_vector, by LU with partial pivoting."""
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != grid.nodes.shape or not np.all(np.isfinite(rhs)):
        raise ParameterError("rhs must be finite nodal values on the grid")
    op = operator if operator is not None else assemble_operator(grid, N, s, ZeroTail(), beta_w)
    ext = exterior_vector(grid, N, s, tail, beta_w, operator=op)
    lu, _ = _factor(op.entries)
    u = linalg.lu_solve(lu, rhs - ext)
    return RadialFunction(grid, u, beta_w, tail)


def picard_minimal_solution(params, b, grid=None, tol=1e-10, max_iter=500, cap=1e6, outer_radius=2.0):
    """Monotone iteration from the s-harmonic extension of the exterior data.

    The data is ``b`` on 1 < |x| < outer_radius and zero beyond.
    """
    if b < 0:
        raise ParameterError("exterior data b must be nonnegative")
    grid = default_ball_grid() if grid is None else grid
    _check_ball(grid)
    N, s = params.N, params.s
    tail = ConstantThenZero(b, outer_radius)
    op = assemble_operator(grid, N, s, ZeroTail())
    A = op.entries
    ext = exterior_vector(grid, N, s, tail, operator=op)
    lu, _ = _factor(A)
    weight = grid.nodes**params.theta
    v = linalg.lu_solve(lu, -ext)
    monotone = True
    history = []
    converged = cap_exceeded = False
    it = 0
    for it in range(1, max_iter + 1):
        new = linalg.lu_solve(lu, weight * np.maximum(v, 0.0) ** params.p - ext)
        if np.any(new < v - 1e-12):
            monotone = False
        change = float(np.max(np.abs(new - v)))
        history.append(change)
        v = new
        if not np.all(np.isfinite(v)) or np.max(v) > cap:
            cap_exceeded = True
            break
        if change <= tol:
            converged = True
            break
    if cap_exceeded:
        v = np.where(np.isfinite(v), v, cap)
    residual = A @ v + ext - weight * np.maximum(v, 0.0) ** params.p
    report = SolveReport(
        iterations=it,
        residual_sup=float(np.max(np.abs(residual))),
        converged=converged,
        monotone=monotone,
        cap_exceeded=cap_exceeded,
        negative_clamped=bool(np.any(v < 0)),
        residual_history=tuple(history),
    )
    return RadialFunction(grid, v, 0.0, tail), report


def newton_singular_solution(params, grid=None, tail=None, delta=0.1, tol=1e-9, max_iter=50):
    """Damped Newton for A u + e - r^theta u^p = 0 near the singular profile.

    The seed is (1 + delta) K r^{-beta} and the weight exponent is beta.  The
    residual is measured as r^{beta + 2s} times the nodal residual, which is
    scale free: the exact profile has residual terms of order K^p.

    Newton steps are damped by step halving (up to 20 times).  When the
    linearization is below the Hardy threshold the Jacobian has near-null
    modes that oscillate in log r, and halving can stall; the iteration then
    restarts from the seed with Levenberg-Marquardt damping (also when the
    halving steps use up ``max_iter``) and finishes with
    full Newton steps.  ``report.method`` records which path was taken.
    """
    if abs(delta) > 0.2:
        raise ParameterError(f"seed perturbation {delta} exceeds 0.2")
    grid = RadialGrid.log_uniform(400, 1e-6, 1.0) if grid is None else grid
    N, s, theta, p = params.N, params.s, params.theta, params.p
    K = kappa(params)
    beta = params.beta
    if K == 0.0:
        raise ParameterError("the singular profile vanishes (p at the Serrin exponent)")
    tail = PowerTail(K, beta) if tail is None else tail
    op = assemble_operator(grid, N, s, tail, beta)
    A, ext = op.entries, op.exterior_vector
    r = grid.nodes
    weight = r**theta
    scale = r ** (beta + 2 * s)
    colscale = r ** (-beta)

    # everything below works in the weighted unknowns w = r^beta u with scale-free rows
    def residual(w):
        u = colscale * w
        return scale * (A @ u + ext - weight * np.maximum(u, 0.0) ** p)

    def jacobian(w):
        u = colscale * w
        J = A - np.diag(p * weight * np.maximum(u, 0.0) ** (p - 1))
        return scale[:, None] * J * colscale[None, :]

    def newton_step(w, F, it):
        try:
            lu, _ = _factor(jacobian(w))
        except SolverError as exc:
            raise SolverError(f"Newton Jacobian singular at iteration {it}: {exc}", exc.condition) from exc
        return linalg.lu_solve(lu, -F)

    w = np.full(grid.n, (1 + delta) * K)
    F = residual(w)
    res = float(np.max(np.abs(F)))
    history = [res]
    negative = False
    method = "newton"
    it = 0
    while res > tol and it < max_iter:
        it += 1
        step = newton_step(w, F, it)
        lam = 1.0
        for _ in range(21):
            trial = w + lam * step
            Ft = residual(trial)
            rt = float(np.max(np.abs(Ft)))
            if rt < res:
                break
            lam *= 0.5
        else:
            break
        negative |= bool(np.any(trial < 0))
        w, F, res = trial, Ft, rt
        history.append(res)

    if res > tol:
        # halving stalled or crept along without converging; restart from the
        # seed, since the last iterate is usually far off
        method = "newton+levenberg-marquardt"
        fit = optimize.least_squares(
            residual, np.full(grid.n, (1 + delta) * K), jac=jacobian, method="lm", xtol=1e-10, ftol=1e-10, gtol=1e-10, max_nfev=100 * grid.n
        )
        w, F = fit.x, residual(fit.x)
        res = float(np.max(np.abs(F)))
        history.append(res)
        negative |= bool(np.any(w < 0))
        it += int(fit.nfev)
        polish = 0
        while res > tol and polish < 10:
            polish += 1
            it += 1
            trial = w + newton_step(w, F, it)
            Ft = residual(trial)
            rt = float(np.max(np.abs(Ft)))
            if not rt < res:
                break
            w, F, res = trial, Ft, rt
            history.append(res)
            negative |= bool(np.any(w < 0))

    if not res <= tol:
        raise ConvergenceError(f"Newton did not converge in {it} iterations (residual {res:.3e})")
    constants = [b / a**2 for a, b in zip(history[:-1], history[1:]) if a < 1e-3 and b > 0]
    report = SolveReport(
        iterations=it,
        residual_sup=res,
        converged=True,
        negative_clamped=negative,
        residual_history=tuple(history),
        quadratic_constant=max(constants) if constants else None,
        method=method,
    )
    return RadialFunction(grid, colscale * w, beta, tail), report


def eigenpair(grid, N, s, tol=1e-12, max_iter=1000):
    """Principal Dirichlet eigenpair of the discrete operator by inverse power iteration.

    Stops on the backward error |A x - lam x| <= tol ||A|| for sup-normalized x.
    """
    _check_ball(grid)
    A = assemble_operator(grid, N, s, ZeroTail()).entries
    lu, _ = _factor(A)
    anorm = float(np.max(np.abs(A).sum(axis=1)))
    x = np.ones(grid.n)
    lam = math.nan
    for it in range(1, max_iter + 1):
        y = linalg.lu_solve(lu, x)
        k = int(np.argmax(np.abs(y)))
        y = y / y[k]
        Ay = A @ y
        lam = float(y @ Ay / (y @ y))
        res = float(np.max(np.abs(Ay - lam * y)))
        x = y
        if res <= tol * anorm:
            break
    else:
        raise ConvergenceError(f"inverse iteration did not converge (residual {res:.3e})")
    if not (lam > 0 and np.all(x > 0)):
        raise ConvergenceError("principal eigenpair is not positive; the discretization is suspect")
    return EigenPair(lam, RadialFunction(grid, x, 0.0, ZeroTail()), it, res / anorm)
