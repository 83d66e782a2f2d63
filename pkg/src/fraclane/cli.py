"""Command-line driver.

Every command writes ``<prefix>.json`` with top-level keys config, results,
diagnostics, timing and version; tabular commands add a ``<prefix>.csv`` twin
and fits add two-column ``<prefix>_fit_<name>.dat`` files (log10 r, log10 u).
The output directory defaults to $FRACLANE_OUTPUT_DIR, else the working
directory.

Exit status: 0 success, 1 invalid parameters, 2 non-convergence, 64 usage.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import enum
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .constants import (
    ParameterError,
    ProblemParams,
    hardy_exponents,
    kappa,
    mu_zero,
    regime_classify,
    spectral_constant,
    spectral_constant_integral,
    theta_star,
)
from .fracop import RadialGrid, apply_frac_laplacian, power_function

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGED, EXIT_USAGE = 0, 1, 2, 64
OUTPUT_ENV = "FRACLANE_OUTPUT_DIR"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


# ---------------------------------------------------------------------------
# deterministic JSON


def _plain(value):
    if isinstance(value, enum.Enum):
        return value.value
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: _plain(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        return float(value)
    if value is None or isinstance(value, str):
        return value
    return str(value)


def _dump(value, indent=0):
    pad = "  " * (indent + 1)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f'{pad}{_dump(k)}: {_dump(v, indent + 1)}' for k, v in value.items()]
        return "{\n" + ",\n".join(items) + "\n" + "  " * indent + "}"
    if isinstance(value, list):
        if not value:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in value):
            return "[" + ", ".join(_dump(v) for v in value) + "]"
        return "[\n" + ",\n".join(pad + _dump(v, indent + 1) for v in value) + "\n" + "  " * indent + "]"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            return "null"
        return "%.17g" % value
    if value is None:
        return "null"
    s = str(value)
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def to_json(document):
    return _dump(_plain(document)) + "\n"


# ---------------------------------------------------------------------------
# argument parsing


def _add_params(p, N=3, s=0.5, theta=0.0, power=3.0):
    p.add_argument("--N", type=int, default=N, help="dimension")
    p.add_argument("--s", type=float, default=s, help="fractional order in (0, 1)")
    p.add_argument("--theta", type=float, default=theta, help="weight exponent")
    p.add_argument("--p", type=float, default=power, help="nonlinearity exponent")


def _add_grid(p, n, r_min, r_max=1.0):
    p.add_argument("--n", type=int, default=n, help="number of grid nodes")
    p.add_argument("--r-min", type=float, default=r_min)
    p.add_argument("--r-max", type=float, default=r_max)


def build_parser():
    parser = _Parser(prog="fraclane", description="Radial fractional Lane-Emden toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    common = _Parser(add_help=False)
    common.add_argument("--out-dir", default=None, help=f"output directory (default ${OUTPUT_ENV} or .)")
    common.add_argument("--prefix", default=None, help="output file stem (default: the command name)")
    common.add_argument("--timing", action="store_true", help="record wall-clock time in the output")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)

    p = sub.add_parser("constants", parents=[common], help="spectral constants, regime and Hardy data")
    _add_params(p)

    p = sub.add_parser("check-op", parents=[common], help="operator identity on r^tau")
    p.add_argument("--N", type=int, default=3)
    p.add_argument("--s", type=float, default=0.5)
    p.add_argument("--tau", type=float, default=-1.0)
    p.add_argument("--tol", type=float, default=1e-9)
    _add_grid(p, 200, 1e-6, 1e3)

    p = sub.add_parser("solve", parents=[common], help="Newton solve near the singular profile")
    _add_params(p)
    _add_grid(p, 400, 1e-6)
    p.add_argument("--delta", type=float, default=0.1, help="seed perturbation")
    p.add_argument("--tol", type=float, default=1e-9)

    p = sub.add_parser("picard", parents=[common], help="minimal solution by monotone iteration")
    _add_params(p)
    p.add_argument("--b", type=float, default=0.05, help="exterior data on 1 < r < outer radius")
    p.add_argument("--outer-radius", type=float, default=2.0)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--r-min", type=float, default=1e-4)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--cap", type=float, default=1e6)

    p = sub.add_parser("asymptotics", parents=[common], help="rate, Harnack and integral diagnostics")
    _add_params(p)
    _add_grid(p, 400, 1e-6)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--window", type=float, nargs=2, default=(1e-4, 0.25), metavar=("R_A", "R_B"))

    p = sub.add_parser("kelvin", parents=[common], help="Kelvin identity and exterior-to-interior map")
    _add_params(p, power=1.8)
    p.add_argument("--gamma", type=float, default=0.5, help="power u = r^{-gamma}")

    p = sub.add_parser("classical", parents=[common], help="s = 1 profile check and shooting")
    p.add_argument("--N", type=int, default=3)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--p", type=float, default=7.0)
    p.add_argument("--r0", type=float, default=1e-6)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--window", type=float, nargs=2, default=(1e-4, 0.25), metavar=("R_A", "R_B"))

    p = sub.add_parser("eigen", parents=[common], help="principal Dirichlet eigenpair")
    p.add_argument("--N", type=int, default=3)
    p.add_argument("--s", type=float, default=0.5)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--r-min", type=float, default=1e-4)

    p = sub.add_parser("report", parents=[common], help="run a check suite")
    p.add_argument("--suite", choices=["acceptance"], default="acceptance")
    return parser


# ---------------------------------------------------------------------------
# commands: each returns (results, diagnostics, table, fits)


def _params(a):
    return ProblemParams(a.N, a.s, a.theta, a.p)


def cmd_constants(a):
    params = ProblemParams(a.N, a.s, a.theta, a.p, unrestricted=True)
    regime = regime_classify(params)
    beta = params.beta
    results = {
        "beta": beta,
        "tau": -beta,
        "spectral_constant_at_tau": spectral_constant(a.N, a.s, -beta) if -a.N < -beta < 2 * a.s else None,
        "kappa": kappa(params),
        "regime": regime.tag.value,
        "serrin_exponent": regime.serrin,
        "sobolev_exponent": regime.sobolev,
        "mu_zero": mu_zero(a.N, a.s),
        "peak_tau": (2 * a.s - a.N) / 2,
    }
    mu_lin = -a.p * spectral_constant(a.N, a.s, -beta) if -a.N < -beta < 2 * a.s else None
    diagnostics = {"linearized_hardy_coefficient": mu_lin}
    if mu_lin is not None and mu_lin >= mu_zero(a.N, a.s):
        h = hardy_exponents(a.N, a.s, mu_lin)
        diagnostics["linearized_tau_minus"], diagnostics["linearized_tau_plus"] = h.tau_minus, h.tau_plus
    else:
        diagnostics["linearized_tau_minus"] = diagnostics["linearized_tau_plus"] = None
    return results, diagnostics, None, {}


def cmd_check_op(a):
    closed = spectral_constant(a.N, a.s, a.tau)
    integral = spectral_constant_integral(a.N, a.s, a.tau)
    grid = RadialGrid.log_uniform(a.n, a.r_min, a.r_max)
    u = power_function(grid, a.tau)
    rows = []
    for r0 in (0.1, 1.0, 10.0):
        if not a.r_min < r0 < a.r_max:
            continue
        value = apply_frac_laplacian(u, r0, a.N, a.s, tol=a.tol)
        exact = closed * r0 ** (a.tau - 2 * a.s)
        rows.append({"r0": r0, "quadrature": value, "exact": exact, "relative_error": abs(value / exact - 1)})
    results = {
        "closed_form": closed,
        "integral_form": integral,
        "closed_vs_integral": abs(closed - integral) / (1 + abs(closed)),
        "identity_max_error": max((r["relative_error"] for r in rows), default=None),
    }
    return results, {"samples": rows}, rows, {}


def _solution_rows(u):
    return [{"r": r, "u": v} for r, v in zip(u.grid.nodes.tolist(), u.values.tolist())]


def _newton(a):
    from .solver import newton_singular_solution

    params = _params(a)
    grid = RadialGrid.log_uniform(a.n, a.r_min, a.r_max)
    return params, newton_singular_solution(params, grid=grid, delta=a.delta, tol=getattr(a, "tol", 1e-9))


def cmd_solve(a):
    from .diagnostics import fit_asymptotics

    params, (u, report) = _newton(a)
    fit = fit_asymptotics(u, (max(1e-4, u.grid.nodes[0]), 0.25))
    results = {"report": report, "fit": fit, "beta": params.beta, "kappa": kappa(params)}
    return results, {"method": report.method}, _solution_rows(u), {"solution": u}


def cmd_picard(a):
    from .solver import default_ball_grid, picard_minimal_solution
    from .diagnostics import monotonicity_check

    params = _params(a)
    grid = default_ball_grid(a.n, a.r_min)
    u, report = picard_minimal_solution(params, a.b, grid=grid, tol=a.tol, cap=a.cap, outer_radius=a.outer_radius)
    mono = monotonicity_check(u)
    results = {"report": report, "min": float(np.min(u.values)), "max": float(np.max(u.values))}
    return results, {"monotonicity": mono}, _solution_rows(u), {}


def cmd_asymptotics(a):
    from .diagnostics import (
        expected_integral_exponent,
        fit_asymptotics,
        integral_bound_exponent,
        max_harnack_ratio,
    )

    params, (u, report) = _newton(a)
    window = tuple(a.window)
    fit = fit_asymptotics(u, window)
    harnack = max_harnack_ratio(u, window)
    integral = integral_bound_exponent(u, params, np.geomspace(window[0], window[1], 24))
    results = {
        "fit": fit,
        "expected_exponent": params.beta,
        "expected_coefficient": kappa(params),
        "harnack_ratio": harnack,
        "harnack_bound": 1.1 * 2**params.beta,
        "integral_fit": integral,
        "expected_integral_exponent": expected_integral_exponent(params),
    }
    return results, {"newton": report}, _solution_rows(u), {"solution": u}


def cmd_kelvin(a):
    from .kelvin import exterior_decay, exterior_to_interior, verify_kelvin_identity

    exterior = ProblemParams(a.N, a.s, a.theta, a.p, unrestricted=True)
    results = {
        "analytic_mismatch": verify_kelvin_identity(a.gamma, a.N, a.s),
        "quadrature_mismatch": verify_kelvin_identity(a.gamma, a.N, a.s, route="quadrature"),
        "theta_star": theta_star(a.N, a.s, a.theta, a.p),
    }
    interior = exterior_to_interior(exterior)
    results["interior_rate"] = interior.beta
    results["exterior_decay"] = exterior_decay(exterior)
    return results, {}, None, {}


def cmd_classical(a):
    from .classical import classical_asymptotics, classical_rate, shoot_singular, verify_classical_profile
    from .constants import classical_coefficient

    residual = verify_classical_profile(a.N, a.theta, a.p)
    traj = shoot_singular(a.N, a.theta, a.p, r0=a.r0, delta=a.delta)
    fit = classical_asymptotics(traj, tuple(a.window))
    results = {
        "profile_residual": residual,
        "termination": traj.termination,
        "fit": fit,
        "expected_exponent": classical_rate(a.theta, a.p),
        "expected_coefficient": classical_coefficient(a.N, a.theta, a.p),
    }
    rows = [{"r": r, "u": v, "du": d} for r, v, d in zip(traj.radii.tolist(), traj.values.tolist(), traj.derivatives.tolist())]
    return results, {"steps": int(traj.radii.size)}, rows, {"trajectory": (traj.radii, traj.values)}


def cmd_eigen(a):
    from .acceptance import boundary_exponent
    from .solver import default_ball_grid, eigenpair

    pair = eigenpair(default_ball_grid(a.n, a.r_min), a.N, a.s)
    results = {
        "lambda1": pair.lambda1,
        "iterations": pair.iterations,
        "backward_error": pair.residual,
        "boundary_exponent": boundary_exponent(pair.xi1),
        "positive": bool(np.all(pair.xi1.values > 0)),
    }
    return results, {}, _solution_rows(pair.xi1), {}


def cmd_report(a):
    from .acceptance import run_all

    outcomes = run_all()
    rows = [
        {"criterion": r.number, "title": r.title, "passed": r.passed, "failures": "; ".join(r.failures)}
        for r in outcomes
    ]
    results = {"suite": a.suite, "passed": sum(r.passed for r in outcomes), "total": len(outcomes), "criteria": rows}
    diagnostics = {str(r.number): r.checks for r in outcomes}
    for r in outcomes:
        print(r.line())
    return results, diagnostics, rows, {}


COMMANDS = {
    "constants": cmd_constants,
    "check-op": cmd_check_op,
    "solve": cmd_solve,
    "picard": cmd_picard,
    "asymptotics": cmd_asymptotics,
    "kelvin": cmd_kelvin,
    "classical": cmd_classical,
    "eigen": cmd_eigen,
    "report": cmd_report,
}


# ---------------------------------------------------------------------------
# output


def _write_csv(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("%.17g" % v if isinstance(v, float) else v) for k, v in row.items()})


def _write_fit(path, radii, values):
    mask = values > 0
    with open(path, "w") as fh:
        for r, v in zip(np.log10(radii[mask]), np.log10(values[mask])):
            fh.write("%.17g %.17g\n" % (r, v))


def run(argv=None):
    """Parse, execute and write outputs; returns the exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    if args.command is None:
        print(parser.format_usage(), file=sys.stderr, end="")
        return EXIT_USAGE
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("out_dir", "prefix", "timing")}
    out_dir = Path(args.out_dir or os.environ.get(OUTPUT_ENV) or ".")
    prefix = args.prefix or args.command
    from .solver import SolverError

    start = time.perf_counter()
    status = EXIT_OK
    try:
        results, diagnostics, table, fits = COMMANDS[args.command](args)
    except ParameterError as exc:
        print(f"invalid parameters: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SolverError as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    elapsed = time.perf_counter() - start
    if args.command == "report" and results["passed"] != results["total"]:
        status = EXIT_INVALID
    report = results.get("report")
    if report is not None and not getattr(report, "converged", True):
        # artifacts are still written so a capped Picard run can be inspected
        print(f"no convergence: {args.command} stopped after {report.iterations} iterations", file=sys.stderr)
        status = EXIT_NONCONVERGED
    out_dir.mkdir(parents=True, exist_ok=True)
    document = {
        "config": config,
        "results": results,
        "diagnostics": diagnostics,
        "timing": {"seconds": elapsed} if args.timing else {},
        "version": __version__,
    }
    (out_dir / f"{prefix}.json").write_text(to_json(document))
    if table:
        _write_csv(out_dir / f"{prefix}.csv", table)
    for name, obj in fits.items():
        radii, values = (obj.grid.nodes, obj.values) if hasattr(obj, "grid") else obj
        _write_fit(out_dir / f"{prefix}_fit_{name}.dat", np.asarray(radii), np.asarray(values))
    return status


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
