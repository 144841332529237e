"""Command-line front end: ``acoustic-hum <subcommand> --config FILE``.

Every run writes ``summary.kv`` (flat ``key=value`` lines) and CSV data
files into the output directory.  Exit codes: 0 ok, 2 configuration
error, 3 violated hypothesis, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from . import grid as g
from .coefficients import all_wave_speeds, validate_all
from .config import ExperimentConfig, dump_config, load_config
from .errors import ArtifactError, DimensionError, NoConvergence
from .hum import HUMVector, solve_control
from .multiplier import (build_h, check_geometry, export_phi_csv, laplacian_residual, neumann_rhs,
                         solve_phi)
from .observability import (GradientDataSampler, export_quotient_csv, interface_flux_check,
                            multiplier_identity_residual, observability_quotient, paper_constants,
                            smooth_bump)
from .solver import (AcousticField, AcousticSolver, export_snapshots_csv, export_traces_csv,
                     make_gradient_initial_data)

log = logging.getLogger("acoustic_hum")

SUBCOMMANDS = ("validate", "simulate", "observability", "identity", "control")


# ---------------------------------------------------------------------------
# shared plumbing


def write_summary(path: Path, items: dict):
    with open(path, "w") as fh:
        for k, v in items.items():
            if isinstance(v, (float, np.floating)):
                v = repr(float(v))
            elif isinstance(v, (bool, np.bool_)):
                v = "true" if v else "false"
            fh.write(f"{k}={v}\n")


def read_summary(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k] = v
    return out


def slowest_crossing_time(grid: g.LayeredGrid, coeffs) -> float:
    return max(g.layer_crossing_time(grid, all_wave_speeds(coeffs, s)) for s in ("A", "B"))


def horizon(cfg: ExperimentConfig, grid: g.LayeredGrid) -> float:
    if cfg.run.horizon is not None:
        return cfg.run.horizon
    n = cfg.run.horizon_crossings if cfg.run.horizon_crossings is not None else 3.0
    return n * slowest_crossing_time(grid, cfg.coefficients)


def default_x0(grid: g.LayeredGrid) -> tuple:
    if grid.dimension == 1:
        return (float(grid.layer_bounds[0]),)
    return tuple(float(c) for c in grid.center)


def multiplier_data(cfg: ExperimentConfig, grid: g.LayeredGrid):
    mb = cfg.multiplier
    x0 = mb.x0 if mb.x0 is not None else default_x0(grid)
    phi = solve_phi(grid) if mb.delta0 > 0 else None
    return build_h(grid, phi, x0, mb.delta0, strict=mb.strict)


def _bump_field(bumps):
    if not bumps:
        return None
    fs = [smooth_bump(b.center, b.radius, b.amplitude) for b in bumps]
    return lambda *X: sum(f(*X) for f in fs)


def initial_fields(cfg: ExperimentConfig, grid: g.LayeredGrid, seed: int) -> tuple:
    ini = cfg.initial
    if ini.mode == "zero":
        return AcousticField.zeros(grid, "A"), AcousticField.zeros(grid, "B")
    if ini.mode == "random":
        return GradientDataSampler(grid, seed=seed, support=cfg.run.support).sample()
    fa = make_gradient_initial_data(grid, _bump_field(ini.a_potential), _bump_field(ini.a_pressure), "A")
    fb = make_gradient_initial_data(grid, _bump_field(ini.b_potential), _bump_field(ini.b_pressure), "B")
    return fa, fb


def _grid_summary(grid: g.LayeredGrid) -> dict:
    return dict(dimension=grid.dimension, layers=grid.num_layers, spacing=grid.spacing,
                cells=int(np.count_nonzero(grid.active)), s0_faces=len(grid.s0_faces),
                s1_faces=len(grid.s1_faces),
                interface_faces=sum(len(f) for f in grid.interface_faces.values()))


# ---------------------------------------------------------------------------
# subcommands


def cmd_validate(cfg, grid, out: Path, seed: int, threads: int) -> tuple:
    hyp = validate_all(cfg.coefficients)
    s = dict(_grid_summary(grid))
    s.update(monotone_ab=hyp.monotone_ab, monotone_gt=hyp.monotone_gt, compatible=hyp.compatible,
             compat_residual_product=hyp.residual_product, compat_residual_ratio=hyp.residual_ratio,
             crossing_time=slowest_crossing_time(grid, cfg.coefficients))
    _, compat = neumann_rhs(grid)
    phi = solve_phi(grid)
    export_phi_csv(out / "phi.csv", grid, phi)
    s.update(phi_compatibility=compat, phi_residual=laplacian_residual(grid, phi))
    md = multiplier_data(cfg, grid)
    geo = check_geometry(md, grid)
    s.update({f"geometry_{k}": v for k, v in geo.as_dict().items()})
    s.update(mu=md.mu, grad_h_max=md.grad_h_max)
    pc = paper_constants(cfg.coefficients, md, grid, horizon(cfg, grid), C2=cfg.multiplier.c2)
    s.update({f"paper_{k}": v for k, v in pc.as_dict().items()})
    ok = bool(hyp.monotone_ab and hyp.monotone_gt and hyp.compatible and geo.all_ok)
    s["all_ok"] = ok
    return s, 0 if ok else 3


def cmd_simulate(cfg, grid, out: Path, seed: int, threads: int) -> tuple:
    T = horizon(cfg, grid)
    fa, fb = initial_fields(cfg, grid, seed)
    o = cfg.output
    solA = AcousticSolver(grid, cfg.coefficients, "A", cfg.run.cfl)
    solB = AcousticSolver(grid, cfg.coefficients, "B", cfg.run.cfl)
    ra = solA.evolve(fa, T, energy_every=max(o.energy_every, 1), snapshot_every=o.snapshot_every)
    rb = solB.evolve(fb, T, dt=ra.dt, energy_every=max(o.energy_every, 1), snapshot_every=o.snapshot_every)
    with open(out / "energy.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "E_A", "E_A_modified", "E_B", "E_B_modified"])
        for a, b in zip(ra.energies, rb.energies):
            w.writerow([repr(float(a[0])), repr(float(a[1])), repr(float(a[2])), repr(float(b[1])),
                        repr(float(b[2]))])
    export_traces_csv(out / "traces.csv", ra.traces, rb.traces)
    if o.snapshot_every:
        export_snapshots_csv(out / "snapshots_A.csv", grid, ra.snapshots)
        export_snapshots_csv(out / "snapshots_B.csv", grid, rb.snapshots)

    def drift(e):
        ref = abs(e[0, 2])
        return float(np.max(np.abs(e[:, 2] - e[0, 2])) / ref) if ref > 0 else float(np.max(np.abs(e[:, 2])))

    s = dict(_grid_summary(grid), T=T, dt=ra.dt, n_steps=ra.n_steps,
             E0_A=ra.energies[0, 1], ET_A=ra.energies[-1, 1], E0_B=rb.energies[0, 1], ET_B=rb.energies[-1, 1],
             energy_drift_A=drift(ra.energies), energy_drift_B=drift(rb.energies))
    return s, 0


def cmd_observability(cfg, grid, out: Path, seed: int, threads: int) -> tuple:
    T = horizon(cfg, grid)
    md = multiplier_data(cfg, grid)
    rep = observability_quotient(grid, cfg.coefficients, md, T, trials=cfg.run.trials, seed=seed,
                                 support=cfg.run.support, separated=cfg.run.form == "separated",
                                 cfl=cfg.run.cfl, T0_threshold=cfg.run.t0_threshold, workers=threads)
    rep.paper_constants = paper_constants(cfg.coefficients, md, grid, T, C2=cfg.multiplier.c2)
    export_quotient_csv(out / "quotient.csv", rep, stride=max(cfg.output.trace_stride, 1))
    s = dict(_grid_summary(grid), crossing_time=slowest_crossing_time(grid, cfg.coefficients))
    s.update(rep.summary())
    for i, q in enumerate(rep.trial_quotients):
        s[f"trial_{i}_quotient"] = q
    return s, 0


def cmd_identity(cfg, grid, out: Path, seed: int, threads: int) -> tuple:
    T = horizon(cfg, grid)
    md = multiplier_data(cfg, grid)
    fa, _ = initial_fields(cfg, grid, seed)
    solver = AcousticSolver(grid, cfg.coefficients, "A", cfg.run.cfl)
    if grid.dimension != 3:
        raise DimensionError("the identity subcommand needs a 3D geometry")
    s = dict(_grid_summary(grid), T=T)
    if grid.num_layers > 1:
        fr = interface_flux_check(solver, fa, T, md)
        with open(out / "interface_flux.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["interface", "max_discrepancy", "relative_discrepancy", "max_rhs", "min_rhs", "sign_ok"])
            for k, v in fr.per_interface.items():
                w.writerow([k, repr(v["max_discrepancy"]), repr(v["relative_discrepancy"]), repr(v["max_rhs"]),
                            repr(v["min_rhs"]), v["sign_ok"]])
        s.update(interface_max_discrepancy=fr.max_discrepancy, interface_sign_ok=fr.sign_ok)
    rep = multiplier_identity_residual(solver, fa, T, md)
    s.update({f"identity_{k}": v for k, v in rep.as_dict().items()})
    return s, 0


def cmd_control(cfg, grid, out: Path, seed: int, threads: int) -> tuple:
    T = horizon(cfg, grid)
    fa, fb = initial_fields(cfg, grid, seed)
    md = multiplier_data(cfg, grid)
    pc = paper_constants(cfg.coefficients, md, grid, T, C2=cfg.multiplier.c2)
    solver = AcousticSolver(grid, cfg.coefficients, "A", cfg.run.cfl)
    target = HUMVector.from_fields(solver.layout, fa, fb)
    code = 0
    try:
        rep = solve_control(target, T, cfg.coefficients, grid, tol=cfg.run.tol, max_iter=cfg.run.max_iter,
                            T0_paper=pc.T0, cfl=cfg.run.cfl, filter_cutoff=cfg.run.filter_cutoff)
    except NoConvergence as exc:
        rep, code = exc.report, 4
        log.error("%s", exc)
    with open(out / "cg_history.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "residual", "hum_functional"])
        hist = rep.hum_functional_history
        for i, r in enumerate(rep.cg_residual_history):
            w.writerow([i, repr(float(r)), repr(float(hist[i])) if i < len(hist) else ""])
    if rep.control is not None:
        export_traces_csv(out / "controls.csv", None, None, rep.control)
    s = dict(_grid_summary(grid), crossing_time=slowest_crossing_time(grid, cfg.coefficients),
             paper_T0=pc.T0)
    s.update(rep.summary())
    s["expected_failure"] = code != 0
    for i, wmsg in enumerate(rep.warnings):
        s[f"warning_{i}"] = wmsg
    return s, code


COMMANDS = dict(validate=cmd_validate, simulate=cmd_simulate, observability=cmd_observability,
                identity=cmd_identity, control=cmd_control)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="acoustic-hum", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", required=True, help="INI experiment file")
    ap.add_argument("--out", help="output directory (overrides [output] directory)")
    ap.add_argument("--seed", type=int, help="overrides [run] seed")
    ap.add_argument("--threads", type=int, default=1, help="worker threads for independent trials")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = None
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, run=replace(cfg.run, seed=args.seed))
        out = Path(args.out or cfg.output.directory)
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.ini").write_text(dump_config(cfg))
        grid = g.build_layered_grid(cfg.geometry.spec())
        t0 = time.perf_counter()
        summary, code = COMMANDS[args.subcommand](cfg, grid, out, cfg.run.seed, max(args.threads, 1))
        head = dict(subcommand=args.subcommand, status="ok" if code == 0 else "failed",
                    exit_code=code, seed=cfg.run.seed, wall_seconds=time.perf_counter() - t0)
        write_summary(out / "summary.kv", {**head, **summary})
        return code
    except ArtifactError as exc:
        log.error("%s: %s", exc.category, exc)
        if out is not None:
            write_summary(out / "summary.kv", dict(subcommand=args.subcommand, status="error",
                                                   exit_code=exc.exit_code, error_category=exc.category,
                                                   error_type=type(exc).__name__, message=str(exc)))
        else:
            print(f"error[{exc.category}]: {exc}", file=sys.stderr)
        return exc.exit_code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
