"""Acceptance criteria, one test each.

Every test prints a single ``CRITERION n: PASS|FAIL ...`` line (visible
with or without ``-s``) before asserting, so the log reads as a checklist.
"""

import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from acoustic_hum import grid as g
from acoustic_hum.cli import initial_fields, multiplier_data, slowest_crossing_time
from acoustic_hum.coefficients import MediumCoefficients
from acoustic_hum.config import load_config
from acoustic_hum.errors import NoConvergence
from acoustic_hum.hum import HUMController, HUMVector, solve_control
from acoustic_hum.multiplier import build_h, estimate_mu, laplacian_residual, neumann_rhs, solve_phi
from acoustic_hum.observability import GradientDataSampler, multiplier_identity_residual, observability_quotient
from acoustic_hum.oracles import measure_eigenfrequency, measure_reflection
from acoustic_hum.solver import AcousticSolver

from conftest import TWO_LAYER, interval

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture
def verdict(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, detail
    return emit


def test_criterion_1_energy_conservation(verdict):
    gr = interval(400, (0.0, 0.5, 1.0))
    solver = AcousticSolver(gr, MediumCoefficients((1, 1), (1, 4), (1, 1), (1, 1)), "A")
    fa, _ = GradientDataSampler(gr, seed=1).sample()
    dt = solver.default_dt()
    t0 = time.perf_counter()
    res = solver.evolve(fa, 10_000 * dt, dt=dt, record_traces=False, energy_every=10)
    wall = time.perf_counter() - t0
    E = np.array(res.energies)
    drift = float(np.max(np.abs(E[:, 2] - E[0, 2])) / E[0, 2])
    raw = float(np.max(np.abs(E[:, 1] - E[0, 1])) / E[0, 1])
    ok = res.n_steps == 10_000 and drift <= 1e-8 and wall < 5.0
    verdict(1, ok, f"steps={res.n_steps} drift={drift:.2e} (<=1e-8, staggered-level energy; "
                   f"raw same-level energy oscillation {raw:.1e}) wall={wall:.2f}s (<5s)")


def test_criterion_2_reflection(verdict):
    t0 = time.perf_counter()
    m = measure_reflection(2000, (1.0, 1.0), (1.0, 4.0))
    wall = time.perf_counter() - t0
    ok = abs(m.analytic + 1 / 3) < 1e-15 and m.relative_error <= 0.02 and wall < 10.0
    verdict(2, ok, f"R={m.measured:.6f} analytic={m.analytic:.6f} rel_err={m.relative_error:.2e} "
                   f"(<=2%) wall={wall:.2f}s (<10s)")


def test_criterion_3_eigenfrequency(verdict):
    m = measure_eigenfrequency(400, n=1)
    ok = m.analytic == pytest.approx(3 * np.pi / 2) and m.relative_error <= 0.005
    verdict(3, ok, f"omega={m.measured:.6f} analytic={m.analytic:.6f} rel_err={m.relative_error:.2e} (<=0.5%)")


def test_criterion_4_multiplier_identity(verdict):
    cfg = load_config(CONFIGS / "shell3d_identity.ini")
    assert cfg.multiplier.delta0 == 0
    t0 = time.perf_counter()
    reps = []
    for n in (24, 48):
        geo = replace(cfg.geometry, spacing=2.0 / n)
        gr = g.build_layered_grid(geo.spec())
        assert gr.shape == (n, n, n)
        fa, _ = initial_fields(replace(cfg, geometry=geo), gr, 0)
        md = multiplier_data(cfg, gr)
        reps.append(multiplier_identity_residual(AcousticSolver(gr, cfg.coefficients, "A"), fa,
                                                 cfg.run.horizon, md))
    wall = time.perf_counter() - t0
    J = max(r.J_l2 for r in reps)
    ratio = reps[0].residual_l2 / reps[1].residual_l2
    ok = J <= 1e-10 and ratio >= 3.0 and wall < 300
    verdict(4, ok, f"|J|={J:.1e} (<=1e-10) residual 24^3={reps[0].residual_l2:.3e} "
                   f"48^3={reps[1].residual_l2:.3e} ratio={ratio:.3f} (>=3) wall={wall:.1f}s (<300s)")


def test_criterion_5_mu_bound(verdict):
    mus = {}
    for bounds, dx in (((0.25, 0.5, 1.0), 1 / 12), ((0.25, 1.0), 1 / 12), ((0.5, 1.0), 1 / 16)):
        gr = g.build_layered_grid(g.GeometrySpec(3, bounds, dx))
        mus[bounds] = estimate_mu(solve_phi(gr), gr)
    worst = max(mus.values())
    ok = worst <= 2 / 3 + 1e-6
    verdict(5, ok, "mu=" + ", ".join(f"{b}:{m:.4f}" for b, m in mus.items()) + " (<=2/3+1e-6)")


@pytest.fixture(scope="module")
def control_setup():
    cfg = load_config(CONFIGS / "two_layer_control.ini")
    assert cfg.coefficients == TWO_LAYER
    gr = g.build_layered_grid(cfg.geometry.spec())
    assert gr.shape == (400,)
    return cfg, gr, slowest_crossing_time(gr, cfg.coefficients)


def test_criterion_6_gramian_structure(verdict, control_setup):
    cfg, gr, tc = control_setup
    ctl = HUMController(gr, cfg.coefficients, 3 * tc)
    sym, con = [], []
    for i in range(10):
        a = ctl._clean(HUMVector.from_fields(ctl.layout, *GradientDataSampler(gr, seed=100 + i).sample()))
        b = ctl._clean(HUMVector.from_fields(ctl.layout, *GradientDataSampler(gr, seed=200 + i).sample()))
        La, Lb = ctl.apply_gramian(a), ctl.apply_gramian(b)
        s1, s2 = ctl.x_inner(La, b), ctl.x_inner(Lb, a)
        scale = np.sqrt(ctl.x_inner(La, a) * ctl.x_inner(Lb, b))
        sym.append(abs(s1 - s2) / scale)
        yy = ctl.y_inner(a, a)
        con.append(abs(ctl.x_inner(La, a) - yy) / yy)
    ok = max(sym) <= 1e-8 and max(con) <= 1e-8
    verdict(6, ok, f"10 pairs: symmetry={max(sym):.1e} consistency={max(con):.1e} (<=1e-8 relative)")


def test_criterion_7_simultaneous_control(verdict, control_setup):
    cfg, gr, tc = control_setup
    T = 3 * tc
    fa, fb = initial_fields(cfg, gr, 0)
    target = HUMVector.from_fields(AcousticSolver(gr, cfg.coefficients, "A").layout, fa, fb)
    t0 = time.perf_counter()
    rep = solve_control(target, T, cfg.coefficients, gr, tol=1e-8, max_iter=cfg.run.max_iter,
                        raise_on_failure=False)
    wall = time.perf_counter() - t0
    # single stored signal, P derived from it
    c = rep.control
    structural = np.allclose(c.P_int, -c.beta_over_gamma * c.Q_int, rtol=0, atol=0)
    rA, rB = rep.energy_ratio["A"], rep.energy_ratio["B"]
    ok = rep.cg_converged and rA <= 1e-3 and rB <= 1e-3 and structural and wall < 120
    verdict(7, ok, f"T={T:.3f} iters={rep.cg_iterations} E(T)/E(0): A={rA:.2e} B={rB:.2e} (<=1e-3) "
                   f"P=-(beta/gamma)Q structural={structural} wall={wall:.1f}s (<120s)")


def test_criterion_8_finite_speed_obstruction(verdict, control_setup):
    cfg, gr, tc = control_setup
    T = 0.2 * tc
    fa, fb = initial_fields(cfg, gr, 0)
    target = HUMVector.from_fields(AcousticSolver(gr, cfg.coefficients, "A").layout, fa, fb)
    try:
        rep = solve_control(target, T, cfg.coefficients, gr, tol=1e-8, max_iter=cfg.run.max_iter)
        observed = rep.max_energy_ratio >= 0.5
        detail = f"converged, energy_ratio={rep.max_energy_ratio:.2e} (>=0.5 expected)"
    except NoConvergence as exc:
        observed = True
        detail = f"CG did not converge in {exc.report.cg_iterations} iterations"
    verdict(8, observed, f"T={T:.3f} expected failure observed: {detail}")


def test_criterion_9_observability(verdict, control_setup):
    cfg, _, _ = control_setup
    q = {}
    for n in (200, 400):
        gr = interval(n, (0.0, 0.5, 1.0))
        tc = slowest_crossing_time(gr, cfg.coefficients)
        md = build_h(gr, None, (0.0,))
        q[n] = observability_quotient(gr, cfg.coefficients, md, 3 * tc, trials=4, seed=7).quotient
    gr = interval(400, (0.0, 0.5, 1.0))
    md = build_h(gr, None, (0.0,))
    short = observability_quotient(gr, cfg.coefficients, md, 0.1 * tc, trials=4, seed=7,
                                   support="near_s1").quotient
    stable = abs(q[400] / q[200] - 1) <= 0.2
    ok = q[200] > 0 and q[400] > 0 and stable and short * 10 <= q[400]
    verdict(9, ok, f"quotient N=200 {q[200]:.4f} N=400 {q[400]:.4f} (within 20%: {stable}); "
                   f"near-S1 at T={0.1 * tc:.3f}: {short:.3e} (<= {q[400] / 10:.3e})")


def test_criterion_10_phi_solver(verdict):
    gr = interval(400)
    phi = solve_phi(gr)
    _, compat = neumann_rhs(gr)
    x = gr.cell_centers[0]
    diff = phi - (x ** 2 / 2 + x)
    err = float(np.max(np.abs(diff - diff.mean())))
    gr3 = g.build_layered_grid(g.GeometrySpec(3, (0.25, 1.0), 1 / 12))
    _, compat3 = neumann_rhs(gr3)
    res = laplacian_residual(gr, phi)
    ok = compat <= 1e-10 and compat3 <= 1e-10 and err <= 1e-10
    verdict(10, ok, f"compatibility 1D={compat:.1e} 3D={compat3:.1e} (<=1e-10) closed-form error={err:.1e} "
                    f"(<=1e-10) discrete residual={res:.1e}")
