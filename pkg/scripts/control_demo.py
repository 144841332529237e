#!/usr/bin/env python3
"""Drive both systems to rest with one boundary control and print the outcome.

    python scripts/control_demo.py --cells 400 --crossings 3
"""

import argparse
import csv
import time

from acoustic_hum import grid as g
from acoustic_hum.cli import slowest_crossing_time
from acoustic_hum.coefficients import MediumCoefficients
from acoustic_hum.hum import HUMVector, solve_control
from acoustic_hum.observability import smooth_bump
from acoustic_hum.solver import AcousticSolver, make_gradient_initial_data


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--cells", type=int, default=400)
    ap.add_argument("--crossings", type=float, default=3.0, help="horizon in slowest round trips")
    ap.add_argument("--tol", type=float, default=1e-8)
    ap.add_argument("--max-iter", type=int, default=300)
    ap.add_argument("--csv", help="write the control Q(t) at S0 here")
    args = ap.parse_args()

    coeffs = MediumCoefficients((1.0, 1.0), (1.0, 4.0), (2.0, 2.0), (0.5, 2.0))
    grid = g.build_layered_grid(g.GeometrySpec(1, (0.0, 0.5, 1.0), 1.0 / args.cells))
    T = args.crossings * slowest_crossing_time(grid, coeffs)
    fa = make_gradient_initial_data(grid, smooth_bump([0.25], 0.2, 0.1), smooth_bump([0.7], 0.15), "A")
    fb = make_gradient_initial_data(grid, smooth_bump([0.75], 0.2, -0.1), smooth_bump([0.3], 0.15), "B")
    target = HUMVector.from_fields(AcousticSolver(grid, coeffs, "A").layout, fa, fb)

    t0 = time.perf_counter()
    rep = solve_control(target, T, coeffs, grid, tol=args.tol, max_iter=args.max_iter, raise_on_failure=False)
    print(f"T = {T:.4f}  dt = {rep.dt:.3e}  steps = {rep.n_steps}")
    print(f"CG: {rep.cg_iterations} iterations, converged = {rep.cg_converged}")
    for tag in ("A", "B"):
        print(f"system {tag}: E(0) = {rep.initial_energy[tag]:.4e}  E(T)/E(0) = {rep.energy_ratio[tag]:.3e}")
    for w in rep.warnings:
        print("warning:", w)
    print(f"wall time {time.perf_counter() - t0:.1f} s")
    if args.csv and rep.control is not None:
        c = rep.control
        with open(args.csv, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t", "Q", "P"])
            for n in range(len(c.Q_int)):
                wr.writerow([n * c.dt, c.Q_int[n, 0], c.P_int[n, 0]])


if __name__ == "__main__":
    main()
