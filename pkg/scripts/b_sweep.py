"""Sweep the exterior constant b for the Picard minimal-solution iteration.

Records, for each b (and optionally several annulus radii R_h), whether the
iteration converged or exceeded the cap. This is a numerical observation;
no critical threshold is inferred. Writes b_sweep.csv to --out-dir.
"""

import argparse
import csv
from pathlib import Path

import numpy as np

from fraclane.constants import ProblemParams
from fraclane.solver import default_ball_grid, picard_minimal_solution


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=3)
    ap.add_argument("--s", type=float, default=0.5)
    ap.add_argument("--theta", type=float, default=0.0)
    ap.add_argument("--p", type=float, default=3.0)
    ap.add_argument("--b", type=float, nargs="+", default=list(np.round(np.geomspace(0.01, 10, 13), 6)))
    ap.add_argument("--outer-radius", type=float, nargs="+", default=[2.0])
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--out-dir", default=".")
    args = ap.parse_args()
    params = ProblemParams(args.N, args.s, args.theta, args.p)
    grid = default_ball_grid(args.n)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "b_sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["outer_radius", "b", "converged", "cap_exceeded", "monotone", "iterations", "max_u", "residual_sup"])
        for R in args.outer_radius:
            for b in args.b:
                u, rep = picard_minimal_solution(params, b, grid=grid, outer_radius=R)
                top = float(np.max(u.values))
                w.writerow([R, b, rep.converged, rep.cap_exceeded, rep.monotone, rep.iterations,
                            "%.6e" % top, "%.3e" % rep.residual_sup])
                state = "converged" if rep.converged else ("cap_exceeded" if rep.cap_exceeded else "stalled")
                print(f"R_h={R} b={b:g}: {state} after {rep.iterations} iterations, max u {top:.4g}")


if __name__ == "__main__":
    main()
