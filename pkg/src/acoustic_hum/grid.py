"""Nested multilayer domains on a uniform Cartesian staggered grid.

Two geometry families are supported:

* ``d = 1``: an interval ``[x_0, x_{m+1}]`` cut into layers at the
  partition points.  The left end plays the inner boundary S1, the right
  end the outer boundary S0.
* ``d = 2, 3``: concentric axis-aligned boxes.  ``layer_bounds`` holds
  half-widths ``r_0 < r_1 < ... < r_{m+1}``; the hole ``|x - c|_inf < r_0``
  is excluded and its boundary is S1, the outer box boundary is S0.

Pressures live at cell centres, velocity components on the faces normal
to each axis.  Face arrays for axis ``a`` have one extra entry along ``a``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import GeometryError, ResolutionError

# face kinds
INACTIVE, INTERIOR, INTERFACE, S0, S1 = 0, 1, 2, 3, 4

_COMMENSURATE_TOL = 1e-9


@dataclass(frozen=True)
class GeometrySpec:
    dimension: int
    layer_bounds: tuple
    spacing: float
    center: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "layer_bounds", tuple(float(b) for b in self.layer_bounds))
        if self.center is not None:
            object.__setattr__(self, "center", tuple(float(c) for c in self.center))


@dataclass(frozen=True)
class FaceSet:
    """A flat list of faces with their geometry.

    ``axis[i]`` is the axis the face is normal to, ``index[i]`` its
    multi-index in the face array of that axis, ``cell[i]`` the adjacent
    active cell (for interfaces: the cell in the outer layer ``k``),
    ``normal[i]`` the unit normal and ``sign[i]`` its component along the
    axis.
    """

    axis: np.ndarray
    index: np.ndarray
    cell: np.ndarray
    sign: np.ndarray
    normal: np.ndarray
    center: np.ndarray
    layer: np.ndarray

    def __len__(self):
        return len(self.axis)


@dataclass(frozen=True, eq=False)
class LayeredGrid:
    dimension: int
    num_layers: int
    layer_bounds: tuple
    spacing: float
    center: tuple
    shape: tuple
    origin: tuple
    cell_layer: np.ndarray
    face_kind: tuple
    face_sign: tuple
    face_layer: tuple = field(repr=False)

    # ---- basic geometry -------------------------------------------------
    @property
    def active(self) -> np.ndarray:
        return self.cell_layer >= 0

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dimension

    @property
    def face_area(self) -> float:
        return self.spacing ** (self.dimension - 1)

    def axis_coords(self, axis: int, staggered: bool = False) -> np.ndarray:
        n = self.shape[axis]
        if staggered:
            return self.origin[axis] + self.spacing * np.arange(n + 1)
        return self.origin[axis] + self.spacing * (np.arange(n) + 0.5)

    @cached_property
    def cell_centers(self) -> tuple:
        axes = [self.axis_coords(a) for a in range(self.dimension)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def face_centers(self, axis: int) -> tuple:
        axes = [self.axis_coords(a, staggered=(a == axis)) for a in range(self.dimension)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def face_shape(self, axis: int) -> tuple:
        s = list(self.shape)
        s[axis] += 1
        return tuple(s)

    # ---- face lists -----------------------------------------------------
    def _faces(self, kind: int, layer: int | None = None) -> FaceSet:
        d = self.dimension
        axes, idx, cells, signs, centers, layers = [], [], [], [], [], []
        for a in range(d):
            mask = self.face_kind[a] == kind
            if layer is not None:
                mask &= self.face_layer[a] == layer
            where = np.argwhere(mask)
            if len(where) == 0:
                continue
            sgn = self.face_sign[a][mask].astype(int)
            lay = self.face_layer[a][mask].astype(int)
            cell = where.copy()
            if kind == INTERFACE:
                # outer-layer cell sits on the side the normal points to
                cell[:, a] -= (sgn < 0).astype(int)
            else:
                # inside cell is opposite to the outward normal
                cell[:, a] -= (sgn > 0).astype(int)
            fc = self.face_centers(a)
            centers.append(np.stack([c[mask] for c in fc], axis=1))
            axes.append(np.full(len(where), a))
            idx.append(where)
            cells.append(cell)
            signs.append(sgn)
            layers.append(lay)
        if not axes:
            empty_i = np.zeros((0, d), dtype=int)
            return FaceSet(np.zeros(0, int), empty_i, empty_i, np.zeros(0, int),
                           np.zeros((0, d)), np.zeros((0, d)), np.zeros(0, int))
        axis = np.concatenate(axes)
        sign = np.concatenate(signs)
        normal = np.zeros((len(axis), d))
        normal[np.arange(len(axis)), axis] = sign
        return FaceSet(axis, np.concatenate(idx), np.concatenate(cells), sign,
                       normal, np.concatenate(centers), np.concatenate(layers))

    @cached_property
    def s0_faces(self) -> FaceSet:
        return self._faces(S0)

    @cached_property
    def s1_faces(self) -> FaceSet:
        return self._faces(S1)

    @cached_property
    def interface_faces(self) -> dict:
        """Faces of each interface Gamma_k, k = 1..m, normal from k-1 into k."""
        return {k: self._faces(INTERFACE, layer=k) for k in range(1, self.num_layers)}

    def layer_cell_counts(self) -> np.ndarray:
        return np.bincount(self.cell_layer[self.active], minlength=self.num_layers)

    def refine(self, factor: int = 2) -> "LayeredGrid":
        return build_layered_grid(GeometrySpec(self.dimension, self.layer_bounds,
                                               self.spacing / factor, self.center))


def _check_commensurate(length: float, dx: float, what: str) -> int:
    n = length / dx
    k = int(round(n))
    if abs(n - k) > _COMMENSURATE_TOL * max(1.0, abs(n)):
        raise ResolutionError(f"spacing {dx} does not divide {what} ({length})")
    return k


def build_layered_grid(spec: GeometrySpec) -> LayeredGrid:
    d = int(spec.dimension)
    bounds = np.asarray(spec.layer_bounds, dtype=float)
    dx = float(spec.spacing)
    if d not in (1, 2, 3):
        raise GeometryError(f"dimension must be 1, 2 or 3, got {d}")
    if len(bounds) < 2:
        raise GeometryError("need at least one layer (two bounds)")
    if not np.all(np.diff(bounds) > 0):
        raise GeometryError(f"layer bounds must be strictly increasing: {bounds.tolist()}")
    if not dx > 0:
        raise ResolutionError("spacing must be positive")
    m1 = len(bounds) - 1

    if d == 1:
        return _build_interval(bounds, dx, m1)
    if bounds[0] <= 0:
        raise GeometryError("box geometries need a hole half-width r_0 > 0 (S1 must be non-empty)")
    center = np.zeros(d) if spec.center is None else np.asarray(spec.center, dtype=float)
    if center.shape != (d,):
        raise GeometryError("center must have one coordinate per dimension")
    return _build_boxes(d, bounds, dx, m1, center)


def _build_interval(bounds, dx, m1):
    n = _check_commensurate(bounds[-1] - bounds[0], dx, "the interval length")
    for b in bounds[1:-1]:
        _check_commensurate(b - bounds[0], dx, f"partition point {b}")
    xc = bounds[0] + dx * (np.arange(n) + 0.5)
    layer = np.searchsorted(bounds, xc) - 1

    kind = np.full(n + 1, INTERIOR, dtype=np.int8)
    sign = np.zeros(n + 1, dtype=np.int8)
    flayer = np.zeros(n + 1, dtype=np.int16)
    flayer[1:-1] = np.maximum(layer[:-1], layer[1:])
    jump = layer[1:] != layer[:-1]
    kind[1:-1][jump] = INTERFACE
    sign[1:-1][jump] = 1
    kind[0], sign[0], flayer[0] = S1, -1, layer[0]
    kind[-1], sign[-1], flayer[-1] = S0, 1, layer[-1]
    return LayeredGrid(1, m1, tuple(bounds.tolist()), dx, (0.0,), (n,), (float(bounds[0]),),
                       layer.astype(np.int16), (kind,), (sign,), (flayer,))


def _build_boxes(d, bounds, dx, m1, center):
    R = bounds[-1]
    n = _check_commensurate(2 * R, dx, "the outer box width")
    for r in bounds[:-1]:
        _check_commensurate(R - r, dx, f"half-width {r}")
    origin = center - R
    axes = [origin[a] + dx * (np.arange(n) + 0.5) for a in range(d)]
    grids = np.meshgrid(*axes, indexing="ij")
    rho = np.max([np.abs(g - c) for g, c in zip(grids, center)], axis=0)
    layer = np.searchsorted(bounds, rho) - 1  # -1 inside the hole
    layer = layer.astype(np.int16)

    OUT, HOLE = -2, -1
    kinds, signs, flayers = [], [], []
    for a in range(d):
        pad = [(0, 0)] * d
        pad[a] = (1, 1)
        lp = np.pad(layer, pad, constant_values=OUT)
        lo = np.take(lp, np.arange(0, n + 1), axis=a)
        hi = np.take(lp, np.arange(1, n + 2), axis=a)
        fshape = lo.shape
        kind = np.full(fshape, INACTIVE, dtype=np.int8)
        sign = np.zeros(fshape, dtype=np.int8)
        flayer = np.zeros(fshape, dtype=np.int16)

        both = (lo >= 0) & (hi >= 0)
        same = both & (lo == hi)
        diff = both & (lo != hi)
        if np.any(np.abs(lo[diff] - hi[diff]) != 1):
            raise GeometryError("layers thinner than one cell break the nesting")
        kind[same] = INTERIOR
        flayer[same] = lo[same]
        kind[diff] = INTERFACE
        flayer[diff] = np.maximum(lo[diff], hi[diff])
        sign[diff] = np.where(hi[diff] > lo[diff], 1, -1)

        for other, k in ((HOLE, S1), (OUT, S0)):
            m_lo = (lo >= 0) & (hi == other)   # active cell below, normal +axis
            m_hi = (hi >= 0) & (lo == other)   # active cell above, normal -axis
            kind[m_lo] = k
            sign[m_lo] = 1
            flayer[m_lo] = lo[m_lo]
            kind[m_hi] = k
            sign[m_hi] = -1
            flayer[m_hi] = hi[m_hi]
        kinds.append(kind)
        signs.append(sign)
        flayers.append(flayer)

    return LayeredGrid(d, m1, tuple(bounds.tolist()), dx, tuple(center.tolist()), (n,) * d,
                       tuple(origin.tolist()), layer, tuple(kinds), tuple(signs), tuple(flayers))


def surface_measures(grid: LayeredGrid) -> tuple:
    """Discrete ``(Vol(Omega), area(S0), area(S1))``."""
    vol = np.count_nonzero(grid.active) * grid.cell_volume
    area_s0 = len(grid.s0_faces) * grid.face_area
    area_s1 = len(grid.s1_faces) * grid.face_area
    return float(vol), float(area_s0), float(area_s1)


def layer_crossing_time(grid: LayeredGrid, speeds: Sequence[float]) -> float:
    """Round-trip travel time S0 -> S1 -> S0 through the layer stack."""
    b = np.asarray(grid.layer_bounds)
    return float(2.0 * np.sum(np.diff(b) / np.asarray(speeds, dtype=float)))
