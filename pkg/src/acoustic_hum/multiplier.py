"""The auxiliary function ``h(x) = |x - x0|^2 / 2 + delta0 * Phi(x)``.

``Phi`` solves the pure Neumann problem ``Lap Phi = 1`` with normal
derivative ``2 Vol/area(S0)`` on S0 and ``-Vol/area(S1)`` on S1.  The
discrete problem is the cell-centred five/seven-point Laplacian with ghost
cells carrying the Neumann data, solved by CG in the zero-mean subspace.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import grid as g
from .errors import CompatibilityError, X0PlacementError
from .linalg import conjugate_gradient, smallest_nonzero_eigenvalue
from .stencil import cell_average, cell_diff, face_diff, shift

COMPAT_RTOL = 1e-10


def _conducting(grid, axis):
    k = grid.face_kind[axis]
    return (k == g.INTERIOR) | (k == g.INTERFACE)


def neumann_laplacian(grid: g.LayeredGrid):
    """Return ``apply(phi) = -Lap_h phi`` restricted to active cells (SPSD)."""
    d, dx = grid.dimension, grid.spacing
    masks = [_conducting(grid, a) for a in range(d)]
    active = grid.active

    def apply(phi):
        out = np.zeros_like(phi)
        for a in range(d):
            flux = face_diff(phi, a, d) * masks[a]
            out -= cell_diff(flux, a, d)
        out /= dx * dx
        out[..., ~active] = 0.0
        return out

    return apply


def _zero_mean(grid):
    active = grid.active
    n = np.count_nonzero(active)

    def project(x):
        y = np.where(active, x, 0.0)
        y[active] -= y[active].sum() / n
        return y

    return project


def neumann_rhs(grid: g.LayeredGrid) -> tuple:
    """Right-hand side of ``-Lap_h Phi = rhs`` and the relative compatibility residual."""
    vol, a0, a1 = g.surface_measures(grid)
    rhs = np.where(grid.active, -1.0, 0.0)
    for faces, data in ((grid.s0_faces, 2.0 * vol / a0), (grid.s1_faces, -vol / a1)):
        np.add.at(rhs, tuple(faces.cell.T), data / grid.spacing)
    compat = abs(rhs[grid.active].sum() * grid.cell_volume) / vol
    return rhs, compat


def solve_phi(grid: g.LayeredGrid, tol: float = 1e-13, max_iter: int | None = None) -> np.ndarray:
    rhs, compat = neumann_rhs(grid)
    if compat > COMPAT_RTOL:
        raise CompatibilityError(f"Neumann data incompatible: relative residual {compat:.3e}")
    apply = neumann_laplacian(grid)
    project = _zero_mean(grid)
    if max_iter is None:
        max_iter = 20 * max(grid.shape) ** 1 * grid.dimension + 200
    res = conjugate_gradient(apply, rhs, tol=tol, max_iter=max_iter, project=project)
    return project(res.x)


def laplacian_residual(grid: g.LayeredGrid, phi: np.ndarray) -> float:
    """``max |Lap_h Phi - 1|`` over active cells, Neumann data included."""
    rhs, _ = neumann_rhs(grid)
    r = neumann_laplacian(grid)(phi) - rhs
    return float(np.max(np.abs(r[grid.active])))


def poincare_constant(grid: g.LayeredGrid, tol: float = 1e-10) -> float:
    """``1 / lambda_1`` of the Neumann Laplacian (smallest nonzero eigenvalue)."""
    apply = neumann_laplacian(grid)
    project = _zero_mean(grid)
    max_iter = 20 * max(grid.shape) * grid.dimension + 200

    def solve(b):
        return conjugate_gradient(apply, b, tol=tol, max_iter=max_iter, project=project).x

    x0 = np.cos(np.pi * (grid.cell_centers[0] - grid.origin[0]) / (grid.spacing * grid.shape[0]))
    x0 = np.where(grid.active, x0, 0.0)
    lam = smallest_nonzero_eigenvalue(apply, solve, x0, project=project)
    return 1.0 / lam


# ---------------------------------------------------------------------------


@dataclass
class MultiplierData:
    x0: tuple
    delta0: float
    phi: np.ndarray
    h: np.ndarray
    grad_h: tuple                     # normal component of grad h on faces, per axis
    dh_dn: dict                       # 'S0', 'S1', k -> per-face values
    dphi_dn: dict
    mu: float
    grad_h_max: float
    hessian_h: np.ndarray = field(repr=False, default=None)   # (..., d, d) at cells
    laplacian_h: np.ndarray = field(repr=False, default=None)


def _inside_hole(grid, x0) -> bool:
    x0 = np.asarray(x0, dtype=float)
    if grid.dimension == 1:
        return bool(x0[0] <= grid.layer_bounds[0] + 1e-12)
    rho = np.max(np.abs(x0 - np.asarray(grid.center)))
    return bool(rho <= grid.layer_bounds[0] + 1e-12)


def _in_domain(grid, x0) -> bool:
    x0 = np.asarray(x0, dtype=float)
    if grid.dimension == 1:
        return grid.layer_bounds[0] < x0[0] < grid.layer_bounds[-1]
    rho = np.max(np.abs(x0 - np.asarray(grid.center)))
    return grid.layer_bounds[0] < rho < grid.layer_bounds[-1]


def hessian(grid: g.LayeredGrid, f: np.ndarray) -> tuple:
    """Central-difference Hessian at cells and the mask of cells whose full
    ``3^d`` neighbourhood is active (the others use one-sided data)."""
    d, dx = grid.dimension, grid.spacing
    H = np.zeros(f.shape + (d, d))
    for a in range(d):
        H[..., a, a] = (shift(f, a, 1, d) - 2 * f + shift(f, a, -1, d)) / dx**2
        for b in range(a + 1, d):
            pp = shift(shift(f, a, 1, d), b, 1, d)
            pm = shift(shift(f, a, 1, d), b, -1, d)
            mp = shift(shift(f, a, -1, d), b, 1, d)
            mm = shift(shift(f, a, -1, d), b, -1, d)
            H[..., a, b] = H[..., b, a] = (pp - pm - mp + mm) / (4 * dx**2)
    # separable erosion over the axes gives the full 3^d box neighbourhood
    nb = grid.active.astype(float)
    for a in range(d):
        nb = np.minimum(nb, np.minimum(shift(nb, a, 1, d), shift(nb, a, -1, d)))
    return H, nb > 0.5


def estimate_mu(phi: np.ndarray, grid: g.LayeredGrid, return_boundary: bool = False):
    """``min_x lambda_min(2 Hess Phi)`` over cells with a full interior stencil."""
    H, interior = hessian(grid, phi)
    eig = np.linalg.eigvalsh(2.0 * H[interior])[:, 0]
    mu = float(eig.min()) if len(eig) else float("nan")
    if not return_boundary:
        return mu
    edge = grid.active & ~interior
    eb = np.linalg.eigvalsh(2.0 * H[edge])[:, 0] if np.any(edge) else np.array([np.nan])
    return mu, float(eb.min())


def _face_normal_derivative(grid, f, faces, boundary_value=None):
    """``df/deta`` on a face list; boundary faces use ``boundary_value``."""
    if boundary_value is not None:
        return np.full(len(faces), float(boundary_value))
    out = np.empty(len(faces))
    for a in range(grid.dimension):
        sel = faces.axis == a
        if not np.any(sel):
            continue
        fd = face_diff(f, a, grid.dimension) / grid.spacing
        out[sel] = fd[tuple(faces.index[sel].T)] * faces.sign[sel]
    return out


def build_h(grid: g.LayeredGrid, phi: np.ndarray | None, x0, delta0: float = 0.0,
            strict: bool = True) -> MultiplierData:
    """Assemble ``h`` and its derivatives.

    ``phi`` may be ``None`` when ``delta0 == 0``.  With ``strict`` the centre
    ``x0`` must lie in the hole (1D: at or left of the left end).
    """
    d, dx = grid.dimension, grid.spacing
    x0 = tuple(float(v) for v in np.atleast_1d(x0))
    if len(x0) != d:
        raise X0PlacementError(f"x0 must have {d} coordinates")
    if delta0 < 0:
        raise X0PlacementError("delta0 must be non-negative")
    if strict and _in_domain(grid, x0):
        raise X0PlacementError(f"x0={x0} lies inside Omega; it must sit in the inner hole")
    if phi is None:
        if delta0 != 0:
            raise ValueError("phi is required when delta0 > 0")
        phi = np.zeros(grid.shape)
    vol, a0, a1 = g.surface_measures(grid)
    X = grid.cell_centers
    quad = 0.5 * sum((X[a] - x0[a]) ** 2 for a in range(d))
    h = np.where(grid.active, quad + delta0 * phi, 0.0)

    # normal components of grad h on faces
    grad_h = []
    data = {g.S0: 2.0 * vol / a0, g.S1: -vol / a1}
    for a in range(d):
        fc = grid.face_centers(a)
        lin = fc[a] - x0[a]
        gphi = face_diff(phi, a, d) / dx
        kind, sign = grid.face_kind[a], grid.face_sign[a]
        for k, val in data.items():
            m = kind == k
            gphi[m] = val * sign[m]
        gphi[kind == g.INACTIVE] = 0.0
        comp = np.where(kind == g.INACTIVE, 0.0, lin + delta0 * gphi)
        grad_h.append(comp)

    dphi_dn, dh_dn = {}, {}
    for key, faces, bval in (("S0", grid.s0_faces, data[g.S0]), ("S1", grid.s1_faces, data[g.S1])):
        dphi_dn[key] = np.full(len(faces), bval)
        dh_dn[key] = np.einsum("ij,ij->i", faces.center - np.array(x0), faces.normal) + delta0 * bval
    for k, faces in grid.interface_faces.items():
        dphi = _face_normal_derivative(grid, phi, faces)
        dphi_dn[k] = dphi
        dh_dn[k] = np.einsum("ij,ij->i", faces.center - np.array(x0), faces.normal) + delta0 * dphi

    Hphi, _ = hessian(grid, phi)
    Hh = np.eye(d) + delta0 * Hphi
    lap_h = np.trace(Hh, axis1=-2, axis2=-1)
    mu = estimate_mu(phi, grid) if delta0 != 0 or np.any(phi) else float("nan")

    return MultiplierData(x0, float(delta0), phi, h, tuple(grad_h), dh_dn, dphi_dn, mu,
                          _grad_h_max(grid, grad_h), Hh, lap_h)


def _grad_h_max(grid, grad_h) -> float:
    """``max |grad h|`` over cell centres and active face centres.

    A face vector combines its staggered normal component with the
    tangential components averaged from the neighbouring cells.
    """
    d = grid.dimension
    gc = [np.where(grid.active, cell_average(grad_h[a], a, d), np.nan) for a in range(d)]
    best = float(np.nanmax(np.sqrt(sum(c**2 for c in gc))))
    for a in range(d):
        sq = grad_h[a] ** 2
        for b in range(d):
            if b != a:
                pad = [(0, 0)] * d
                pad[a] = (1, 1)
                gb = np.pad(gc[b], pad, constant_values=np.nan)
                n = gb.shape[a]
                pair = np.stack([np.take(gb, range(0, n - 1), axis=a), np.take(gb, range(1, n), axis=a)])
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", RuntimeWarning)   # all-NaN columns
                    tang = np.nanmean(pair, axis=0)
                sq = sq + np.nan_to_num(tang) ** 2
        live = grid.face_kind[a] != g.INACTIVE
        best = max(best, float(np.sqrt(sq[live]).max()))
    return best


# ---------------------------------------------------------------------------


@dataclass
class GeometryHypothesisReport:
    margin_delta: float       # 1 - delta0 (1 - mu), must be > 0
    margin_s0: float          # min over S0 of (x-x0).eta + 2 delta0 Vol/area(S0), >= 0
    margin_s1: float          # min over S1 of delta0 Vol/area(S1) - (x-x0).eta, >= 0
    margin_gamma: float       # min over Gamma_k of (x-x0).eta + delta0 dPhi/deta, >= 0
    ok_delta: bool
    ok_s0: bool
    ok_s1: bool
    ok_gamma: bool
    dh_dn_s0_min: float
    dh_dn_s1_max: float
    violations: dict = field(default_factory=dict)

    @property
    def all_ok(self) -> bool:
        return self.ok_delta and self.ok_s0 and self.ok_s1 and self.ok_gamma

    def as_dict(self) -> dict:
        out = {k: v for k, v in self.__dict__.items() if k != "violations"}
        out["all_ok"] = self.all_ok
        out.update({f"violations_{k}": len(v) for k, v in self.violations.items()})
        return out


def check_geometry(md: MultiplierData, grid: g.LayeredGrid, tol: float = 1e-12) -> GeometryHypothesisReport:
    vol, a0, a1 = g.surface_measures(grid)
    x0 = np.array(md.x0)
    mu = md.mu if np.isfinite(md.mu) else 0.0
    m_delta = 1.0 - md.delta0 * (1.0 - mu)

    s0 = grid.s0_faces
    v0 = np.einsum("ij,ij->i", s0.center - x0, s0.normal) + 2 * md.delta0 * vol / a0
    s1 = grid.s1_faces
    v1 = md.delta0 * vol / a1 - np.einsum("ij,ij->i", s1.center - x0, s1.normal)
    vg = [md.dh_dn[k] for k in grid.interface_faces]
    vg = np.concatenate(vg) if vg else np.zeros(0)

    def low(v):
        return float(v.min()) if len(v) else float("inf")

    viol = {"S0": np.flatnonzero(v0 < -tol), "S1": np.flatnonzero(v1 < -tol),
            "Gamma": np.flatnonzero(vg < -tol)}
    return GeometryHypothesisReport(
        m_delta, low(v0), low(v1), low(vg),
        m_delta > 0, low(v0) >= -tol, low(v1) >= -tol, low(vg) >= -tol,
        low(md.dh_dn["S0"]), float(md.dh_dn["S1"].max()) if len(md.dh_dn["S1"]) else float("-inf"),
        viol)


def export_phi_csv(path, grid: g.LayeredGrid, phi: np.ndarray):
    idx = np.argwhere(grid.active)
    X = grid.cell_centers
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cell"] + [f"i{a}" for a in range(grid.dimension)]
                   + [f"x{a}" for a in range(grid.dimension)] + ["phi"])
        for n, ix in enumerate(idx):
            ix = tuple(ix)
            w.writerow([n, *ix, *(repr(float(X[a][ix])) for a in range(grid.dimension)),
                        repr(float(phi[ix]))])
