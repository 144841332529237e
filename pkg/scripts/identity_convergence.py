#!/usr/bin/env python3
"""Refinement study of the 3D multiplier identity residual on a cube shell."""

import argparse

from acoustic_hum import grid as g
from acoustic_hum.coefficients import MediumCoefficients
from acoustic_hum.multiplier import build_h
from acoustic_hum.observability import multiplier_identity_residual, smooth_bump
from acoustic_hum.solver import AcousticSolver, make_gradient_initial_data


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cells", type=int, nargs="+", default=[24, 48])
    ap.add_argument("--hole", type=float, default=1 / 12, help="half-width of the hole")
    ap.add_argument("--T", type=float, default=0.3)
    args = ap.parse_args()

    coeffs = MediumCoefficients.uniform(1)
    prev = None
    for n in args.cells:
        grid = g.build_layered_grid(g.GeometrySpec(3, (args.hole, 1.0), 2.0 / n))
        bump = smooth_bump((0.55, 0.0, 0.0), 0.44)
        st = make_gradient_initial_data(grid, lambda *X: 0.1 * bump(*X), bump, "A")
        md = build_h(grid, None, grid.center)
        rep = multiplier_identity_residual(AcousticSolver(grid, coeffs, "A"), st, args.T, md)
        rate = "" if prev is None else f"  ratio {prev / rep.residual_l2:.3f}"
        print(f"{n}^3: residual {rep.residual_l2:.4e}  |J| {rep.J_l2:.1e}  "
              f"relative {rep.relative_residual:.3e}{rate}")
        prev = rep.residual_l2


if __name__ == "__main__":
    main()
