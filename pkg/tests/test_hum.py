import numpy as np
import pytest
from hypothesis import given, strategies as st

from acoustic_hum.coefficients import MediumCoefficients
from acoustic_hum.errors import IncompatibleCoefficients, NoConvergence
from acoustic_hum.hum import HUMController, HUMVector, duality_integrand, solve_control
from acoustic_hum.observability import GradientDataSampler
from acoustic_hum.solver import half_to_int, make_gradient_initial_data

from conftest import TWO_LAYER, bump, interval


@pytest.fixture(scope="module")
def small():
    gr = interval(100, (0.0, 0.5, 1.0))
    return gr, HUMController(gr, TWO_LAYER, 4.5)


def random_vector(ctl, seed):
    fa, fb = GradientDataSampler(ctl.grid, seed=seed).sample()
    return ctl._clean(HUMVector.from_fields(ctl.layout, fa, fb))


def test_y_inner_zero_and_symmetry(small):
    _, ctl = small
    a, b = random_vector(ctl, 1), random_vector(ctl, 2)
    assert ctl.y_inner(ctl.zeros(), a) == 0.0
    ab, ba = ctl.y_inner(a, b), ctl.y_inner(b, a)
    scale = np.sqrt(ctl.y_inner(a, a) * ctl.y_inner(b, b))
    assert abs(ab - ba) <= 1e-14 * scale * 10
    assert ab ** 2 <= ctl.y_inner(a, a) * ctl.y_inner(b, b) * (1 + 1e-12)


def test_controls_from_zero_and_dropped_term(small):
    _, ctl = small
    c = ctl.synthesize_controls(ctl.zeros())
    assert not np.any(c.Q_half) and not np.any(c.P_int)
    G = random_vector(ctl, 3)
    G.pB[:] = 0.0
    G.uB[:] = 0.0
    tr = ctl.traces(G)
    c = ctl.synthesize_controls(tr)
    a, b, gm = ctl.alpha, ctl.beta, ctl.gamma
    np.testing.assert_allclose(c.Q_half, a / b * tr.k_half, rtol=1e-14, atol=1e-300)
    np.testing.assert_allclose(c.P_int, -a / gm * half_to_int(tr.k_half), rtol=1e-13, atol=1e-300)


f = st.floats(-10, 10)
p = st.floats(0.1, 5)


@given(p, p, p, p, f, f, f, f)
def test_duality_integrand_algebra(al, be, ga, ta, k, m, kt, mt):
    Q = (al * k - ta * m) / be
    P = -(be / ga) * Q
    lhs = duality_integrand(al, be, ga, ta, Q, P, kt, mt)
    rhs = (al * k - ta * m) * (al * kt - ta * mt)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-9)


def test_gramian_zero_symmetry_consistency(small):
    _, ctl = small
    z = ctl.apply_gramian(ctl.zeros())
    assert not np.any(z.pA) and not np.any(z.uB)
    for s in range(3):
        a, b = random_vector(ctl, 10 + s), random_vector(ctl, 20 + s)
        La, Lb = ctl.apply_gramian(a), ctl.apply_gramian(b)
        s1, s2 = ctl.x_inner(La, b), ctl.x_inner(Lb, a)
        scale = np.sqrt(ctl.x_inner(La, a) * ctl.x_inner(Lb, b))
        assert abs(s1 - s2) <= 1e-8 * scale
        yaa = ctl.y_inner(a, a)
        assert abs(ctl.x_inner(La, a) - yaa) <= 1e-8 * yaa
        assert ctl.x_inner(La, a) >= -1e-12 * scale


def test_incompatible_media_rejected():
    gr = interval(50, (0.0, 0.5, 1.0))
    with pytest.raises(IncompatibleCoefficients):
        HUMController(gr, MediumCoefficients((1, 1), (1, 2), (1, 1), (1, 1)), 3.0)


def test_zero_target(small):
    _, ctl = small
    rep = ctl.solve(ctl.zeros())
    assert rep.cg_iterations == 0 and rep.max_energy_ratio == 0.0
    assert not np.any(rep.control.Q_half)


def test_scaling_equivariance(small):
    _, ctl = small
    t = random_vector(ctl, 5)
    r1 = ctl.solve(t, tol=1e-8, max_iter=100, raise_on_failure=False)
    r2 = ctl.solve(t * 2.0, tol=1e-8, max_iter=100, raise_on_failure=False)
    assert r1.cg_iterations == r2.cg_iterations
    q1, q2 = r1.control.Q_half, r2.control.Q_half
    assert np.max(np.abs(q2 - 2 * q1)) <= 1e-8 * np.max(np.abs(2 * q1))


def test_hum_functional_monotone(small):
    _, ctl = small
    rep = ctl.solve(random_vector(ctl, 6), tol=1e-8, max_iter=100, raise_on_failure=False)
    h = rep.hum_functional_history
    assert all(b <= a + 1e-12 * abs(a) for a, b in zip(h, h[1:]))


def test_single_layer_control_closed_loop():
    gr = interval(400)
    c = MediumCoefficients.uniform(1)
    fa = make_gradient_initial_data(gr, lambda x: 0.1 * bump(x, 0.4, 0.25), lambda x: bump(x, 0.6, 0.2), "A")
    fb = make_gradient_initial_data(gr, lambda x: -0.1 * bump(x, 0.6, 0.25), lambda x: bump(x, 0.3, 0.2), "B")
    ctl = HUMController(gr, c, 4.0)
    rep = ctl.solve(HUMVector.from_fields(ctl.layout, fa, fb), tol=1e-8, max_iter=200)
    assert rep.cg_converged
    assert rep.energy_ratio["A"] <= 1e-3 and rep.energy_ratio["B"] <= 1e-3


def test_short_horizon_fails_as_expected():
    gr = interval(100)
    c = MediumCoefficients.uniform(1)
    fa = make_gradient_initial_data(gr, None, lambda x: bump(x, 0.5, 0.2), "A")
    fb = make_gradient_initial_data(gr, None, lambda x: bump(x, 0.4, 0.2), "B")
    ctl = HUMController(gr, c, 0.5)
    try:
        rep = ctl.solve(HUMVector.from_fields(ctl.layout, fa, fb), tol=1e-8, max_iter=150)
    except NoConvergence as exc:
        assert exc.report is not None and not exc.report.cg_converged
    else:
        assert rep.max_energy_ratio >= 0.5


def test_functional_front_end_warns_below_T0(two_layer_grid, caplog):
    gr = interval(100, (0.0, 0.5, 1.0))
    ctl = HUMController(gr, TWO_LAYER, 4.5)
    rep = solve_control(ctl.zeros(), 4.5, TWO_LAYER, gr, T0_paper=30.0)
    assert any("T0_paper" in w for w in rep.warnings)
