import numpy as np
import pytest

from acoustic_hum import grid as g
from acoustic_hum.coefficients import MediumCoefficients
from acoustic_hum.errors import DimensionError, LengthMismatch, MissingC2
from acoustic_hum.multiplier import build_h
from acoustic_hum.observability import (GradientDataSampler, cumulative_observation, empirical_T0,
                                        interface_flux_check, multiplier_identity_residual,
                                        observability_quotient, observation_functional, paper_constants,
                                        weighted_energy)
from acoustic_hum.solver import AcousticField, AcousticSolver, make_gradient_initial_data

from conftest import TWO_LAYER, bump, interval

ONE = MediumCoefficients.uniform(1)


def pulse(gr, tag="A", c=0.3, r=0.15):
    return make_gradient_initial_data(gr, None, lambda x: bump(x, c, r), tag)


def test_functional_zero_and_missing_traces():
    gr = interval(100)
    md = build_h(gr, None, (0.0,))
    sol = AcousticSolver(gr, ONE, "A")
    ra = sol.evolve(AcousticField.zeros(gr, "A"), 1.0)
    assert observation_functional(ra.traces, None, md, ONE).combined == 0.0
    ra = sol.evolve(pulse(gr, c=0.7), 1.0)
    solB = AcousticSolver(gr, ONE, "B")
    rb = solB.evolve(AcousticField.zeros(gr, "B"), 1.0, dt=ra.dt)
    full = observation_functional(ra.traces, rb.traces, md, ONE, T=1.0)
    only = observation_functional(ra.traces, None, md, ONE)
    assert full.combined == pytest.approx(only.combined, rel=1e-14)
    assert full.combined > 0
    # with m = 0 both forms integrate alpha^2 k^2 vs alpha k^2 (alpha = 1 here)
    assert full.separated == pytest.approx(full.combined, rel=1e-14)
    with pytest.raises(LengthMismatch):
        observation_functional(ra.traces, None, md, ONE, T=0.5)
    short = solB.evolve(AcousticField.zeros(gr, "B"), 0.5, dt=ra.dt)
    with pytest.raises(LengthMismatch):
        observation_functional(ra.traces, short.traces, md, ONE)


def test_cumulative_is_monotone_and_matches_total():
    gr = interval(100)
    md = build_h(gr, None, (0.0,))
    ra = AcousticSolver(gr, ONE, "A").evolve(pulse(gr), 2.0)
    cum = cumulative_observation(ra.traces, None, md, ONE)
    assert np.all(np.diff(cum) >= -1e-15)
    assert cum[-1] == pytest.approx(observation_functional(ra.traces, None, md, ONE).combined, rel=1e-12)


def test_paper_constants_hand_values():
    gr = interval(50)
    md = build_h(gr, None, (0.0,))
    T = 2.0
    c2 = 1 / np.pi ** 2
    pc = paper_constants(ONE, md, gr, T, C2=c2)
    gh = md.grad_h_max
    assert pc.C1 == pytest.approx(gh)
    assert pc.C3 == pytest.approx(c2)
    assert pc.C4 == pytest.approx(1.0)
    assert pc.C5 == pytest.approx(c2 + (2 * gh + 1) * T)
    assert pc.C6 == pytest.approx(pc.C5)
    assert pc.theta == 1.0 and pc.C7 == 4.0
    assert pc.T0 == pytest.approx(max(1.0, 2 * pc.C5))
    assert pc.C8 == 1.0 and pc.C9 == 1.0
    assert pc.C2_source == "user"
    with pytest.raises(MissingC2):
        paper_constants(ONE, md, gr, T, estimate_C2=False)
    assert paper_constants(ONE, md, gr, T).C2 == pytest.approx(c2, rel=1e-2)


def test_empirical_T0_synthetic():
    t = np.linspace(0, 2, 2001)
    curve = np.clip(t - 0.5, 0, None)        # final value 1.5, 10% level at t = 0.65
    assert empirical_T0(t, curve, 0.1) == pytest.approx(0.65, abs=1e-12)
    assert empirical_T0(t, np.zeros_like(t)) is None


def test_interface_lemma_exact_in_1d():
    gr = interval(200, (0.0, 0.5, 1.0))
    md = build_h(gr, None, (0.0,))
    rep = interface_flux_check(AcousticSolver(gr, TWO_LAYER, "A"), pulse(gr), 0.8, md)
    assert not rep.empty
    for v in rep.per_interface.values():
        assert v["relative_discrepancy"] <= 1e-12


def test_interface_lemma_sign_under_monotone_coefficients():
    gr = interval(200, (0.0, 0.5, 1.0))
    md = build_h(gr, None, (0.0,))
    dec = MediumCoefficients((2.0, 1.0), (4.0, 1.0), (1.0, 1.0), (1.0, 1.0))
    rep = interface_flux_check(AcousticSolver(gr, TWO_LAYER, "A"), pulse(gr), 0.8, md)
    assert rep.sign_ok and all(v["max_rhs"] <= 1e-10 for v in rep.per_interface.values())
    assert min(v["min_rhs"] for v in rep.per_interface.values()) < 0
    rep = interface_flux_check(AcousticSolver(gr, dec, "A"), pulse(gr), 0.8, md)
    assert not rep.sign_ok and rep.max_rhs > 0


def test_interface_lemma_empty_for_single_layer():
    gr = interval(100)
    md = build_h(gr, None, (0.0,))
    assert interface_flux_check(AcousticSolver(gr, ONE, "A"), pulse(gr), 0.3, md).empty


def test_identity_needs_three_dimensions():
    gr = interval(50)
    md = build_h(gr, None, (0.0,))
    with pytest.raises(DimensionError):
        multiplier_identity_residual(AcousticSolver(gr, ONE, "A"), pulse(gr), 0.1, md)


@pytest.fixture(scope="module")
def shell3d():
    gr = g.build_layered_grid(g.GeometrySpec(3, (0.25, 1.0), 0.125))
    return gr, build_h(gr, None, gr.center)


def test_identity_zero_trajectory(shell3d):
    gr, md = shell3d
    rep = multiplier_identity_residual(AcousticSolver(gr, ONE, "A"), AcousticField.zeros(gr, "A"), 0.1, md)
    assert rep.residual_l2 == 0.0 and rep.J_l2 == 0.0


def test_identity_J_vanishes_without_phi(shell3d):
    gr, md = shell3d
    st = make_gradient_initial_data(gr, None, lambda x, y, z: bump(np.sqrt(x**2 + y**2 + z**2), 0.6, 0.3), "A")
    rep = multiplier_identity_residual(AcousticSolver(gr, ONE, "A"), st, 0.2, md)
    assert rep.J_l2 <= 1e-10
    assert rep.dAdt_l2 > 0 and rep.interior_cells > 0


def test_weighted_energy_is_twice_energy():
    gr = interval(100)
    st = pulse(gr)
    from acoustic_hum.solver import energy
    assert weighted_energy(st, None, ONE, gr) == pytest.approx(2 * energy(st, ONE, gr))
    assert weighted_energy(st, st.copy(), ONE, gr) == pytest.approx(4 * energy(st, ONE, gr))


def test_quotient_reproducible_across_workers():
    gr = interval(100, (0.0, 0.5, 1.0))
    md = build_h(gr, None, (0.0,))
    r1 = observability_quotient(gr, TWO_LAYER, md, 1.5, trials=3, seed=4)
    r2 = observability_quotient(gr, TWO_LAYER, md, 1.5, trials=3, seed=4, workers=3)
    assert r1.trial_quotients == r2.trial_quotients
    assert r1.quotient == min(r1.trial_quotients) > 0
    np.testing.assert_array_equal(r1.quotient_curve, r2.quotient_curve)


def test_sampler_is_seeded_and_rejects_bad_support():
    gr = interval(100, (0.0, 0.5, 1.0))
    a = GradientDataSampler(gr, seed=9).sample()[0]
    b = GradientDataSampler(gr, seed=9).sample()[0]
    np.testing.assert_array_equal(a.p, b.p)
    with pytest.raises(ValueError):
        GradientDataSampler(gr, support="middle")


def test_interface_lemma_equal_coefficients():
    gr = interval(200, (0.0, 0.5, 1.0))
    md = build_h(gr, None, (0.0,))
    rep = interface_flux_check(AcousticSolver(gr, MediumCoefficients((1, 1), (1, 1), (1, 1), (1, 1)), "A"),
                               pulse(gr), 0.8, md)
    v = next(iter(rep.per_interface.values()))
    assert v["max_rhs"] == 0.0 and v["min_rhs"] == 0.0
    assert abs(v["max_lhs"]) <= 1e-12
