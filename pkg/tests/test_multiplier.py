from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from acoustic_hum import grid as g
from acoustic_hum.errors import X0PlacementError
from acoustic_hum.multiplier import (build_h, check_geometry, estimate_mu, hessian, laplacian_residual,
                                     neumann_rhs, poincare_constant, solve_phi)

from conftest import interval


def box(d, bounds, dx):
    return g.build_layered_grid(g.GeometrySpec(d, bounds, dx))


def test_phi_1d_closed_form():
    gr = interval(200)
    phi = solve_phi(gr)
    x = gr.cell_centers[0]
    exact = x ** 2 / 2 + x
    diff = phi - exact
    assert np.max(np.abs(diff - diff.mean())) <= 1e-10
    assert abs(phi.mean()) < 1e-12        # zero-mean gauge
    assert abs(neumann_rhs(gr)[1]) <= 1e-10


def test_phi_2d_refinement():
    def restrict(f):
        return 0.25 * (f[0::2, 0::2] + f[1::2, 0::2] + f[0::2, 1::2] + f[1::2, 1::2])

    sols = [(box(2, (0.25, 0.5, 1.0), 2 / n), None) for n in (16, 32, 64)]
    sols = [(gr, solve_phi(gr)) for gr, _ in sols]
    errs = []
    for (ga, a), (_, b) in zip(sols, sols[1:]):
        d = (a - restrict(b))[ga.active]
        errs.append(np.sqrt(np.mean((d - d.mean()) ** 2)))
    assert errs[0] / errs[1] > 3.0
    gr, phi = sols[0]
    assert abs(neumann_rhs(gr)[1]) <= 1e-10
    assert laplacian_residual(gr, phi) < 1e-9


def test_h_normal_derivatives_1d():
    gr = interval(100)
    md = build_h(gr, None, (0.0,), 0.0)
    assert md.dh_dn["S0"][0] == pytest.approx(1.0)
    md = build_h(gr, solve_phi(gr), (0.0,), 0.1)
    assert md.dh_dn["S0"][0] == pytest.approx(1.2, abs=1e-12)
    assert md.mu == pytest.approx(2.0, abs=1e-8)


@pytest.mark.parametrize("d", [2, 3])
def test_laplacian_of_quadratic_h(d):
    gr = box(d, (0.25, 1.0), 1 / 8)
    md = build_h(gr, None, (0.0,) * d, 0.0)
    H, interior = hessian(gr, md.h)
    lap = np.trace(H, axis1=-2, axis2=-1)[interior]
    np.testing.assert_allclose(lap, d, atol=1e-10)


def test_mu_bound_3d():
    gr = box(3, (0.25, 1.0), 1 / 8)
    assert estimate_mu(solve_phi(gr), gr) <= 2 / 3 + 1e-6


def test_geometry_centre_passes_and_displaced_fails():
    gr = box(2, (0.25, 0.5, 1.0), 1 / 16)
    rep = check_geometry(build_h(gr, None, (0.0, 0.0), 0.0), gr)
    assert rep.all_ok
    with pytest.raises(X0PlacementError):
        build_h(gr, None, (0.4, 0.0), 0.0)
    rep = check_geometry(build_h(gr, None, (0.4, 0.0), 0.0, strict=False), gr)
    assert not rep.ok_s1 and len(rep.violations["S1"]) > 0
    md = replace(build_h(gr, None, (0.0, 0.0), 0.0), mu=-1.0, delta0=0.6)
    assert not check_geometry(md, gr).ok_delta


def test_poincare_constant_1d():
    assert poincare_constant(interval(200)) == pytest.approx(1 / np.pi ** 2, rel=1e-4)


@given(st.floats(0.0, 0.5), st.integers(2, 5))
def test_dh_dn_matches_linear_part(delta0, k):
    gr = interval(10 * k)
    md = build_h(gr, solve_phi(gr) if delta0 else None, (0.0,), delta0)
    # dPhi/deta = 2 Vol/area(S0) on S0 and -Vol/area(S1) on S1
    assert md.dh_dn["S0"][0] == pytest.approx(1.0 + 2 * delta0)
    assert md.dh_dn["S1"][0] == pytest.approx(-delta0)
