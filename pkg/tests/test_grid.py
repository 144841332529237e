import numpy as np
import pytest
from hypothesis import given, strategies as st

from acoustic_hum import grid as g
from acoustic_hum.errors import GeometryError, ResolutionError

from conftest import interval


def test_single_layer_interval():
    gr = interval(100)
    assert gr.shape == (100,)
    assert gr.num_layers == 1
    assert gr.interface_faces == {}
    np.testing.assert_allclose(gr.s1_faces.center[:, 0], [0.0])
    np.testing.assert_allclose(gr.s0_faces.center[:, 0], [1.0])
    assert gr.s1_faces.normal[0, 0] == -1 and gr.s0_faces.normal[0, 0] == 1


def test_two_layer_interface_position_and_normal():
    gr = interval(200, (0.0, 0.5, 1.0))
    f = gr.interface_faces[1]
    assert len(f) == 1
    assert f.center[0, 0] == pytest.approx(0.5)
    assert f.normal[0, 0] == 1


def test_2d_layer_counts_match_point_classification():
    gr = g.build_layered_grid(g.GeometrySpec(2, (0.25, 0.5, 1.0), 1 / 64))
    X, Y = gr.cell_centers
    rho = np.maximum(np.abs(X), np.abs(Y))
    brute = [np.sum((rho > a) & (rho < b)) for a, b in [(0.25, 0.5), (0.5, 1.0)]]
    assert list(gr.layer_cell_counts()) == brute
    assert np.sum(rho < 0.25) == np.sum(~gr.active)


@pytest.mark.parametrize("d", [2, 3])
def test_normals_unit_and_outward(d):
    gr = g.build_layered_grid(g.GeometrySpec(d, (0.25, 0.5, 1.0), 1 / 8))
    for fs in [gr.s0_faces, gr.s1_faces, *gr.interface_faces.values()]:
        np.testing.assert_allclose(np.linalg.norm(fs.normal, axis=1), 1.0)
    # S0 normals point away from the centre, S1 and interface normals are radial too
    assert np.all(np.einsum("ij,ij->i", gr.s0_faces.center, gr.s0_faces.normal) > 0)
    assert np.all(np.einsum("ij,ij->i", gr.s1_faces.center, gr.s1_faces.normal) < 0)
    f = gr.interface_faces[1]
    assert np.all(np.einsum("ij,ij->i", f.center, f.normal) > 0)


def test_face_roles_are_exclusive():
    gr = g.build_layered_grid(g.GeometrySpec(3, (0.25, 0.5, 1.0), 1 / 8))
    seen = set()
    for fs in [gr.s0_faces, gr.s1_faces, *gr.interface_faces.values()]:
        keys = {(int(a), *map(int, ix)) for a, ix in zip(fs.axis, fs.index)}
        assert len(keys) == len(fs)
        assert not (keys & seen)
        seen |= keys


def test_surface_measures_examples():
    assert g.surface_measures(interval(10)) == pytest.approx((1.0, 1.0, 1.0))
    gr = g.build_layered_grid(g.GeometrySpec(2, (0.25, 1.0), 1 / 8))
    assert g.surface_measures(gr) == pytest.approx((3.75, 8.0, 2.0))
    gr = g.build_layered_grid(g.GeometrySpec(3, (0.125, 0.5), 1 / 16))
    vol, _, _ = g.surface_measures(gr)
    assert vol == pytest.approx(1 - 0.015625)


def test_refinement_scales_counts():
    a = g.build_layered_grid(g.GeometrySpec(2, (0.25, 0.5, 1.0), 1 / 8))
    b = a.refine()
    assert np.count_nonzero(b.active) == 4 * np.count_nonzero(a.active)
    assert len(b.s0_faces) == 2 * len(a.s0_faces)
    assert len(b.interface_faces[1]) == 2 * len(a.interface_faces[1])


def test_errors():
    with pytest.raises(GeometryError):
        g.build_layered_grid(g.GeometrySpec(1, (0.0, 0.6, 0.5), 0.1))
    with pytest.raises(ResolutionError):
        g.build_layered_grid(g.GeometrySpec(1, (0.0, 0.55, 1.0), 0.1))
    with pytest.raises(GeometryError):
        g.build_layered_grid(g.GeometrySpec(2, (0.0, 1.0), 0.1))


def test_crossing_time_is_round_trip():
    gr = interval(10, (0.0, 0.5, 1.0))
    assert g.layer_crossing_time(gr, (1.0, 2.0)) == pytest.approx(1.5)


@given(st.lists(st.integers(1, 6), min_size=1, max_size=4), st.integers(1, 3))
def test_partition_property(widths, refine):
    dx = 1.0 / (4 * refine)
    bounds = np.concatenate([[0.0], np.cumsum(widths) * 0.25])
    gr = g.build_layered_grid(g.GeometrySpec(1, tuple(bounds), dx))
    counts = gr.layer_cell_counts()
    assert counts.sum() == gr.shape[0]
    np.testing.assert_array_equal(counts, np.round(np.diff(bounds) / dx).astype(int))
    assert len(gr.interface_faces) == len(widths) - 1
