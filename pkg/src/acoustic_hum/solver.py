"""Staggered-grid leapfrog for the two first-order acoustic systems.

System A evolves ``(u, p)`` with weights ``(alpha, beta)``: the velocity
obeys ``u_t = -grad(alpha p)``, the pressure ``p_t = -div(beta u)``, with
``u.eta = Q`` on S0 and ``p = 0`` on S1.  System B evolves ``(v, q)`` with
``(gamma, tau)`` and Dirichlet data ``q = P`` on S0, ``q = 0`` on S1.

Interfaces are handled through the continuous quantities ``w = a p`` and
``s = b u.eta``.  The velocity update at a face differences ``w`` and the
pressure update reads the face flux ``s = b_f u_f`` with ``b_f`` the
harmonic mean of the two layers, which is what the flux-matching face value
of ``w`` produces.  The semi-discrete operator is then skew-adjoint in the
weighted inner product ``sum V a p p' + sum m_f b_f u u'`` and the energy
telescopes across interfaces exactly as in the continuum.

Internally a state is a pair of flat vectors: pressures on all cells,
normal velocities on all faces (axis-major).  Inactive entries stay zero.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import grid as g
from .coefficients import MediumCoefficients
from .errors import CFLError, DimensionError, LengthMismatch, NonFiniteError, SpecError

DEFAULT_CFL = 0.9
_FINITE_CHECK_EVERY = 64


# ---------------------------------------------------------------------------
# layout


class Layout:
    """Flat indexing of cell and face arrays of a grid."""

    def __init__(self, grid: g.LayeredGrid):
        self.grid = grid
        self.cell_shape = grid.shape
        self.n_cells = int(np.prod(grid.shape))
        self.face_shapes = [grid.face_shape(a) for a in range(grid.dimension)]
        sizes = [int(np.prod(s)) for s in self.face_shapes]
        self.face_offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
        self.n_faces = int(self.face_offsets[-1])

    def cell_index(self, idx):
        return np.ravel_multi_index(tuple(np.asarray(idx).T), self.cell_shape)

    def face_index(self, axis, idx):
        return self.face_offsets[axis] + np.ravel_multi_index(tuple(np.asarray(idx).T),
                                                              self.face_shapes[axis])

    def faceset_index(self, faces: g.FaceSet):
        out = np.empty(len(faces), dtype=int)
        for a in range(self.grid.dimension):
            sel = faces.axis == a
            if np.any(sel):
                out[sel] = self.face_index(a, faces.index[sel])
        return out

    def flat_faces(self, arrays) -> np.ndarray:
        return np.concatenate([np.asarray(x, dtype=float).ravel() for x in arrays])

    def split_faces(self, vec) -> tuple:
        o = self.face_offsets
        return tuple(vec[..., o[a]:o[a + 1]].reshape(vec.shape[:-1] + self.face_shapes[a])
                     for a in range(self.grid.dimension))

    def face_field(self, per_axis) -> np.ndarray:
        return self.flat_faces(per_axis)


# ---------------------------------------------------------------------------
# state


@dataclass
class AcousticField:
    """One system's state: ``p`` on cells, ``u`` as one face array per axis.

    For system B the slots hold ``q`` and ``v``.
    """

    p: np.ndarray
    u: tuple
    t: float = 0.0
    system_tag: str = "A"

    @classmethod
    def zeros(cls, grid: g.LayeredGrid, system_tag: str = "A", t: float = 0.0):
        return cls(np.zeros(grid.shape), tuple(np.zeros(grid.face_shape(a)) for a in range(grid.dimension)),
                   t, system_tag)

    def copy(self) -> "AcousticField":
        return AcousticField(self.p.copy(), tuple(x.copy() for x in self.u), self.t, self.system_tag)

    def check_shapes(self, grid: g.LayeredGrid):
        if self.p.shape != grid.shape or len(self.u) != grid.dimension or any(
                x.shape != grid.face_shape(a) for a, x in enumerate(self.u)):
            raise LengthMismatch("state arrays do not match the grid")

    def flat(self, layout: Layout) -> tuple:
        return self.p.ravel().astype(float).copy(), layout.flat_faces(self.u)

    @classmethod
    def from_flat(cls, layout: Layout, p, u, t=0.0, system_tag="A"):
        return cls(np.array(p, dtype=float).reshape(layout.cell_shape),
                   tuple(x.copy() for x in layout.split_faces(np.asarray(u, dtype=float))), t, system_tag)

    def __add__(self, other):
        return AcousticField(self.p + other.p, tuple(a + b for a, b in zip(self.u, other.u)), self.t,
                             self.system_tag)

    def __sub__(self, other):
        return AcousticField(self.p - other.p, tuple(a - b for a, b in zip(self.u, other.u)), self.t,
                             self.system_tag)

    def __mul__(self, s):
        return AcousticField(self.p * s, tuple(a * s for a in self.u), self.t, self.system_tag)

    __rmul__ = __mul__


# ---------------------------------------------------------------------------
# operators


class SystemOperator:
    """Sparse gradient/divergence pair of one system on one grid.

    ``G`` maps cell pressures to the face update ``grad(a p)`` with
    homogeneous Dirichlet data, ``Bp`` adds the Dirichlet data ``w_b = a P``
    on S0 (system B only), ``D`` maps face velocities to ``div(b u)`` and
    ``Sq`` adds the prescribed normal-velocity flux on S0 (system A only).
    """

    def __init__(self, grid: g.LayeredGrid, coeffs: MediumCoefficients, system: str):
        if coeffs.num_layers != grid.num_layers:
            raise LengthMismatch(f"{coeffs.num_layers} coefficient layers for a {grid.num_layers}-layer grid")
        self.grid, self.coeffs, self.system = grid, coeffs, system
        self.layout = lay = Layout(grid)
        d, dx = grid.dimension, grid.spacing
        a_layer, b_layer = coeffs.system(system)
        act = grid.active
        layer = np.where(act, grid.cell_layer, 0)
        a_cell = np.where(act, a_layer[layer], 0.0).ravel()
        b_cell = np.where(act, b_layer[layer], 0.0).ravel()
        self.a_cell, self.b_cell = a_cell, b_cell
        dirichlet_s0 = system == "B"

        rows_g, cols_g, vals_g = [], [], []
        rows_d, cols_d, vals_d = [], [], []
        b_face = np.zeros(lay.n_faces)
        mass = np.zeros(lay.n_faces)
        unknown = np.zeros(lay.n_faces, dtype=bool)
        vol = grid.cell_volume
        cells = np.arange(lay.n_cells).reshape(grid.shape)
        for ax in range(d):
            kind = grid.face_kind[ax]
            sign = grid.face_sign[ax].astype(int)
            fidx = lay.face_offsets[ax] + np.arange(kind.size).reshape(kind.shape)
            pad = [(0, 0)] * d
            pad[ax] = (1, 1)
            cp = np.pad(cells, pad, constant_values=-1)
            n = cp.shape[ax]
            lo = np.take(cp, range(0, n - 1), axis=ax)   # cell below the face
            hi = np.take(cp, range(1, n), axis=ax)       # cell above

            inner = (kind == g.INTERIOR) | (kind == g.INTERFACE)
            f, L, R = fidx[inner], lo[inner], hi[inner]
            bl, br = b_cell[L], b_cell[R]
            bf = 2.0 * bl * br / (bl + br)
            b_face[f] = bf
            mass[f] = vol
            unknown[f] = True
            rows_g += [f, f]
            cols_g += [R, L]
            vals_g += [a_cell[R] / dx, -a_cell[L] / dx]
            rows_d += [L, R]
            cols_d += [f, f]
            vals_d += [bf / dx, -bf / dx]

            bnd = (kind == g.S1) | ((kind == g.S0) & dirichlet_s0)
            f, s = fidx[bnd], sign[bnd]
            c = np.where(s > 0, lo[bnd], hi[bnd])
            b_face[f] = b_cell[c]
            mass[f] = 0.5 * vol
            unknown[f] = True
            rows_g.append(f)
            cols_g.append(c)
            vals_g.append(-2.0 * s * a_cell[c] / dx)
            rows_d.append(c)
            cols_d.append(f)
            vals_d.append(s * b_cell[c] / dx)

        cat = np.concatenate
        self.G = sp.csr_matrix((cat(vals_g), (cat(rows_g), cat(cols_g))), shape=(lay.n_faces, lay.n_cells))
        self.D = sp.csr_matrix((cat(vals_d), (cat(rows_d), cat(cols_d))), shape=(lay.n_cells, lay.n_faces))
        self.b_face, self.mass, self.unknown = b_face, mass, unknown
        self.wp = vol * a_cell
        self.wu = mass * b_face

        s0 = grid.s0_faces
        self.n_s0 = len(s0)
        self.s0_face = lay.faceset_index(s0)
        self.s0_cell = lay.cell_index(s0.cell)
        self.s0_sign = s0.sign.astype(float)
        j = np.arange(self.n_s0)
        if dirichlet_s0:
            vals = 2.0 * self.s0_sign * a_cell[self.s0_cell] / dx
            self.Bp = sp.csr_matrix((vals, (self.s0_face, j)), shape=(lay.n_faces, self.n_s0))
            self.Sq = None
        else:
            self.Bp = None
            self.Sq = sp.csr_matrix((b_cell[self.s0_cell] / dx, (self.s0_cell, j)),
                                    shape=(lay.n_cells, self.n_s0))
        self.face_area = grid.face_area

    # -- quadratic forms ---------------------------------------------------
    def inner(self, pa, ua, pb, ub) -> float:
        return float(np.dot(self.wp * pa, pb) + np.dot(self.wu * ua, ub))

    def energy(self, p, u) -> float:
        return 0.5 * self.inner(p, u, p, u)

    def modified_energy(self, p, u, dt) -> float:
        """Quadratic invariant of the kick-drift-kick step."""
        gp = self.G @ p
        return self.energy(p, u) - dt * dt / 8.0 * float(np.dot(self.wu * gp, gp))

    def spectral_radius(self, iters: int = 200, seed: int = 0) -> float:
        """Largest frequency of the semi-discrete operator (power iteration on ``D G``)."""
        rng = np.random.default_rng(seed)
        x = rng.standard_normal(self.layout.n_cells) * (self.wp > 0)
        lam = 0.0
        for _ in range(iters):
            y = -(self.D @ (self.G @ x))
            lam_new = float(np.dot(self.wp * x, y) / np.dot(self.wp * x, x))
            nrm = np.linalg.norm(y)
            if nrm == 0:
                return 0.0
            x = y / nrm
            if abs(lam_new - lam) <= 1e-10 * abs(lam_new):
                lam = lam_new
                break
            lam = lam_new
        return float(np.sqrt(max(lam, 0.0)))


class Propagator:
    """Several systems on one grid advanced together (block-diagonal).

    ``Q`` drives every system-A block, ``P`` every system-B block.
    """

    def __init__(self, ops):
        self.ops = tuple(ops)
        self.grid = self.ops[0].grid
        nc, nf = self.ops[0].layout.n_cells, self.ops[0].layout.n_faces
        self.nc, self.nf = nc, nf
        self.G = sp.block_diag([o.G for o in self.ops], format="csr")
        self.D = sp.block_diag([o.D for o in self.ops], format="csr")
        ns0 = self.ops[0].n_s0
        self.n_s0 = ns0
        bp = [o.Bp for o in self.ops]
        sq = [o.Sq for o in self.ops]
        self.Bp = (sp.vstack([m if m is not None else sp.csr_matrix((nf, ns0)) for m in bp], format="csr")
                   if any(m is not None for m in bp) else None)
        self.Sq = (sp.vstack([m if m is not None else sp.csr_matrix((nc, ns0)) for m in sq], format="csr")
                   if any(m is not None for m in sq) else None)
        self.wp = np.concatenate([o.wp for o in self.ops])
        self.wu = np.concatenate([o.wu for o in self.ops])
        # S0 bookkeeping faces of system-A blocks carry u = sign * Q
        a_faces = [i * nf + o.s0_face for i, o in enumerate(self.ops) if o.system == "A"]
        self.q_faces = np.concatenate(a_faces) if a_faces else np.zeros(0, int)
        self.q_sign = np.concatenate([o.s0_sign for o in self.ops if o.system == "A"]) if a_faces else np.zeros(0)
        self.n_a = len(a_faces)
        self.trace_cell = [i * nc + o.s0_cell for i, o in enumerate(self.ops)]
        self.trace_face = [i * nf + o.s0_face for i, o in enumerate(self.ops)]
        self.trace_sign = [o.s0_sign for o in self.ops]

    # -- steps -----------------------------------------------------------
    def _kick(self, p, u, h, P):
        du = self.G @ p
        if P is not None and self.Bp is not None:
            du += self.Bp @ P
        u -= h * du

    def _drift(self, p, u, h, Q):
        dp = self.D @ u
        if Q is not None and self.Sq is not None:
            dp += self.Sq @ Q
            if self.n_a:
                u[self.q_faces] = np.tile(Q, self.n_a) * self.q_sign
        p -= h * dp

    def kdk(self, p, u, dt, Q=None, P0=None, P1=None):
        """Kick-drift-kick, in place.  ``Q`` at the half level, ``P0``/``P1`` at the ends."""
        self._kick(p, u, 0.5 * dt, P0)
        self._drift(p, u, dt, Q)
        self._kick(p, u, 0.5 * dt, P1)

    def dkd(self, p, u, dt):
        """Drift-kick-drift (homogeneous); returns the mid-step pressure vector."""
        p -= 0.5 * dt * (self.D @ u)
        mid = p.copy()
        u -= dt * (self.G @ p)
        p -= 0.5 * dt * (self.D @ u)
        return mid

    # -- traces ----------------------------------------------------------
    def p_trace(self, p):
        return [p[c] for c in self.trace_cell]

    def un_trace(self, u):
        return [u[f] * s for f, s in zip(self.trace_face, self.trace_sign)]

    # -- misc ------------------------------------------------------------
    def inner(self, pa, ua, pb, ub):
        return float(np.dot(self.wp * pa, pb) + np.dot(self.wu * ua, ub))


# ---------------------------------------------------------------------------
# boundary data and traces


@dataclass
class ControlSignal:
    """One boundary control sampled on both time staggerings.

    ``Q_half[n]`` is the outward normal velocity imposed on S0 at
    ``t_{n+1/2}``, ``Q_int[n]`` the same signal at ``t_n``.  The pressure
    datum of system B is a derived view, ``P = -(beta/gamma) Q``.
    """

    dt: float
    Q_half: np.ndarray          # (N, n_s0)
    Q_int: np.ndarray           # (N + 1, n_s0)
    beta_over_gamma: float

    def __post_init__(self):
        self.Q_half = np.asarray(self.Q_half, dtype=float)
        self.Q_int = np.asarray(self.Q_int, dtype=float)
        if self.Q_int.shape[0] != self.Q_half.shape[0] + 1 or self.Q_int.shape[1:] != self.Q_half.shape[1:]:
            raise LengthMismatch("Q_int must have one more time level than Q_half")

    @property
    def n_steps(self) -> int:
        return self.Q_half.shape[0]

    @property
    def T(self) -> float:
        return self.n_steps * self.dt

    @property
    def P_int(self) -> np.ndarray:
        return -self.beta_over_gamma * self.Q_int

    @property
    def P_half(self) -> np.ndarray:
        return -self.beta_over_gamma * self.Q_half

    @classmethod
    def zeros(cls, n_steps, n_s0, dt, beta_over_gamma=1.0):
        return cls(dt, np.zeros((n_steps, n_s0)), np.zeros((n_steps + 1, n_s0)), beta_over_gamma)

    @classmethod
    def from_half(cls, Q_half, dt, beta_over_gamma):
        """Build from half-level samples; integer levels by linear interpolation."""
        Qh = np.asarray(Q_half, dtype=float)
        return cls(dt, Qh, half_to_int(Qh), beta_over_gamma)

    def scaled(self, s):
        return ControlSignal(self.dt, self.Q_half * s, self.Q_int * s, self.beta_over_gamma)


def half_to_int(x_half: np.ndarray) -> np.ndarray:
    """Interior levels average their two half-level neighbours, the ends copy the nearest one."""
    n = x_half.shape[0]
    out = np.empty((n + 1,) + x_half.shape[1:])
    out[0] = x_half[0]
    out[-1] = x_half[-1]
    out[1:-1] = 0.5 * (x_half[:-1] + x_half[1:])
    return out


def int_to_half(x_int: np.ndarray) -> np.ndarray:
    return 0.5 * (x_int[:-1] + x_int[1:])


@dataclass
class BoundaryTraceSet:
    """S0 traces of one evolution: pressure ``k`` and outward velocity ``m``.

    Integer-level series have ``N + 1`` rows; half-level series (if the
    scheme produced them) have ``N`` rows.
    """

    dt: float
    p_int: np.ndarray
    un_int: np.ndarray
    p_half: np.ndarray | None = None
    un_half: np.ndarray | None = None
    face_area: float = 1.0
    system_tag: str = "A"

    @property
    def k(self):
        return self.p_int

    @property
    def m(self):
        return self.un_int

    @property
    def n_steps(self) -> int:
        return self.p_int.shape[0] - 1

    @property
    def T(self) -> float:
        return self.n_steps * self.dt

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1)


# ---------------------------------------------------------------------------
# the solver


@dataclass
class EvolutionResult:
    state: AcousticField
    traces: BoundaryTraceSet | None
    energies: np.ndarray | None = None       # (times, E, E_modified)
    snapshots: list = field(default_factory=list)
    dt: float = 0.0
    n_steps: int = 0


class AcousticSolver:
    """Single-system front end: steps, evolutions and diagnostics."""

    def __init__(self, grid: g.LayeredGrid, coeffs: MediumCoefficients, system: str = "A",
                 cfl: float = DEFAULT_CFL):
        if not 0 < cfl <= 1:
            raise CFLError(f"CFL number must lie in (0, 1], got {cfl}")
        self.grid, self.coeffs, self.system, self.cfl = grid, coeffs, system, cfl
        self.op = SystemOperator(grid, coeffs, system)
        self.prop = Propagator([self.op])
        self.layout = self.op.layout

    # -- time step -------------------------------------------------------
    @property
    def dt_max(self) -> float:
        return max_stable_dt(self.grid, self.coeffs)

    def default_dt(self) -> float:
        return self.cfl * self.dt_max

    def steps_for(self, T: float, dt: float | None = None) -> tuple:
        return steps_for(T, dt if dt is not None else self.default_dt())

    def check_dt(self, dt: float):
        check_dt(abs(dt), self.grid, self.coeffs)

    # -- one step --------------------------------------------------------
    def step(self, state: AcousticField, dt: float, control: ControlSignal | None = None,
             n: int = 0) -> AcousticField:
        """Advance ``state`` by one kick-drift-kick step (``dt < 0`` runs backwards)."""
        self.check_dt(dt)
        state.check_shapes(self.grid)
        p, u = state.flat(self.layout)
        Q, P0, P1 = self._forcing(control, n, dt)
        self.prop.kdk(p, u, dt, Q, P0, P1)
        _check_finite(p, u)
        return AcousticField.from_flat(self.layout, p, u, state.t + dt, self.system)

    def _forcing(self, control, n, dt):
        if control is None:
            return None, None, None
        if self.system == "A":
            return control.Q_half[n], None, None
        P = control.P_int
        if dt > 0:
            return None, P[n], P[n + 1]
        return None, P[n + 1], P[n]

    # -- evolutions ------------------------------------------------------
    def evolve(self, state0: AcousticField, T: float, control: ControlSignal | None = None,
               scheme: str = "kdk", dt: float | None = None, record_traces: bool = True,
               energy_every: int = 0, snapshot_every: int = 0, observers=(),
               backward: bool = False) -> EvolutionResult:
        """Evolve over ``[0, T]`` (or from ``T`` back to 0 with ``backward``).

        With a control the steps are kick-drift-kick and ``control.dt`` sets
        the step.  ``observers`` are called as ``obs(n, t, p, u)`` on the
        flat vectors at every integer level.
        """
        state0.check_shapes(self.grid)
        if control is not None:
            n_steps, dt = control.n_steps, control.dt
            if not np.isclose(n_steps * dt, T, rtol=1e-12, atol=0):
                raise LengthMismatch(f"control covers {n_steps * dt}, horizon is {T}")
            if scheme != "kdk":
                raise ValueError("controlled runs use the kick-drift-kick scheme")
        else:
            n_steps, dt = self.steps_for(T, dt)
        self.check_dt(dt)
        h = -dt if backward else dt
        p, u = state0.flat(self.layout)
        pr, op = self.prop, self.op
        rec = record_traces
        p_int = np.empty((n_steps + 1, op.n_s0)) if rec else None
        un_int = np.empty((n_steps + 1, op.n_s0)) if rec else None
        half = np.empty((n_steps, op.n_s0)) if rec else None
        energies = []
        snaps = []
        t = state0.t

        def record(i, t):
            if rec:
                p_int[i] = pr.p_trace(p)[0]
                un_int[i] = pr.un_trace(u)[0]
            if energy_every and i % energy_every == 0:
                energies.append((t, op.energy(p, u), op.modified_energy(p, u, dt)))
            if snapshot_every and i % snapshot_every == 0:
                snaps.append(AcousticField.from_flat(self.layout, p, u, t, self.system))
            for obs in observers:
                obs(i, t, p, u)

        order = range(n_steps - 1, -1, -1) if backward else range(n_steps)
        record(n_steps if backward else 0, t)
        for it, n in enumerate(order):
            if control is not None:
                if self.system == "A":
                    pr.kdk(p, u, h, Q=control.Q_half[n])
                else:
                    P = control.P_int
                    a, b = (P[n + 1], P[n]) if backward else (P[n], P[n + 1])
                    pr.kdk(p, u, h, P0=a, P1=b)
            elif scheme == "kdk":
                pr.kdk(p, u, h)
            elif scheme == "dkd":
                mid = pr.dkd(p, u, h)
                if rec:
                    half[n] = mid[op.s0_cell]
            else:
                raise ValueError(f"unknown scheme {scheme!r}")
            t = t + h
            if it % _FINITE_CHECK_EVERY == 0:
                _check_finite(p, u)
            record(n if backward else n + 1, t)
        _check_finite(p, u)
        traces = None
        if rec:
            traces = BoundaryTraceSet(dt, p_int, un_int, p_half=half if scheme == "dkd" else None,
                                      face_area=self.grid.face_area, system_tag=self.system)
        en = np.array(energies) if energy_every else None
        return EvolutionResult(AcousticField.from_flat(self.layout, p, u, t, self.system), traces, en,
                               snaps, dt, n_steps)

    # -- diagnostics -----------------------------------------------------
    def energy(self, state: AcousticField, per_layer: bool = False):
        return energy(state, self.coeffs, self.grid, per_layer=per_layer, op=self.op)

    def interface_values(self, state: AcousticField) -> dict:
        """One-sided traces at every interface face (see :func:`interface_traces`)."""
        p, u = state.flat(self.layout)
        return interface_traces(self.op, p, u)


# ---------------------------------------------------------------------------
# module-level helpers


def max_stable_dt(grid: g.LayeredGrid, coeffs: MediumCoefficients) -> float:
    """``dx / (c_max sqrt(d))`` over both systems."""
    from .coefficients import max_wave_speed
    return grid.spacing / (max_wave_speed(coeffs) * np.sqrt(grid.dimension))


def steps_for(T: float, dt_target: float) -> tuple:
    """Number of steps and the step that divides ``T`` exactly without exceeding ``dt_target``."""
    if T < 0:
        raise ValueError("T must be non-negative")
    if T == 0:
        return 0, dt_target
    n = int(np.ceil(T / dt_target * (1 - 1e-14)))
    return n, T / n


def check_dt(dt: float, grid: g.LayeredGrid, coeffs: MediumCoefficients):
    limit = max_stable_dt(grid, coeffs)
    if not (0 < dt <= limit * (1 + 1e-12)):
        raise CFLError(f"dt={dt:.6g} violates dt <= dx/(c_max sqrt(d)) = {limit:.6g}")


def _check_finite(p, u):
    if not (np.isfinite(p).all() and np.isfinite(u).all()):
        raise NonFiniteError("non-finite value in the acoustic state")


def step(state: AcousticField, dt: float, bc=None, coeffs: MediumCoefficients = None,
         grid: g.LayeredGrid = None, n: int = 0) -> AcousticField:
    """Functional form of one step; ``bc`` is ``None`` (homogeneous) or a :class:`ControlSignal`."""
    return AcousticSolver(grid, coeffs, state.system_tag).step(state, dt, bc, n)


def evolve(state0: AcousticField, T: float, coeffs: MediumCoefficients, grid: g.LayeredGrid,
           control: ControlSignal | None = None, **kw) -> EvolutionResult:
    return AcousticSolver(grid, coeffs, state0.system_tag).evolve(state0, T, control, **kw)


def interface_traces(op: SystemOperator, p, u) -> dict:
    """Per interface ``k``: face flux ``s``, face value ``w`` and one-sided ``p``, ``u.eta``.

    ``w_f`` is the flux-matching face value of ``a p``; dividing by the
    layer constants gives the one-sided pressures, so ``a p`` agrees on both
    sides by construction, and ``b u.eta = s`` likewise.
    """
    grid, lay = op.grid, op.layout
    out = {}
    w = op.a_cell * p
    for k, faces in grid.interface_faces.items():
        f = lay.faceset_index(faces)
        outer = lay.cell_index(faces.cell)
        step_ = np.zeros_like(faces.cell)
        step_[np.arange(len(faces)), faces.axis] = faces.sign
        inner = lay.cell_index(faces.cell - step_)
        bi, bo = op.b_cell[inner], op.b_cell[outer]
        wf = (bi * w[inner] + bo * w[outer]) / (bi + bo)
        s = op.b_face[f] * u[f] * faces.sign
        ai, ao = op.a_cell[inner], op.a_cell[outer]
        out[k] = dict(w=wf, s=s, p_inner=wf / ai, p_outer=wf / ao, un_inner=s / bi, un_outer=s / bo,
                      a_inner=ai, a_outer=ao, b_inner=bi, b_outer=bo, inner_cell=inner, outer_cell=outer,
                      face=f)
    return out


def energy(state: AcousticField, coeffs: MediumCoefficients, grid: g.LayeredGrid, per_layer: bool = False,
           op: SystemOperator | None = None):
    """``1/2 sum_k int (b |u|^2 + a p^2)`` with midpoint quadrature.

    With ``per_layer`` also returns the split over layers; interface faces
    contribute half a cell to each side with that side's velocity ``s/b``.
    """
    op = op or SystemOperator(grid, coeffs, state.system_tag)
    p, u = state.flat(op.layout)
    total = op.energy(p, u)
    if not per_layer:
        return total
    lay = op.layout
    parts = np.zeros(grid.num_layers)
    cl = np.where(grid.active, grid.cell_layer, 0).ravel()
    np.add.at(parts, cl, 0.5 * op.wp * p * p)
    fl = np.concatenate([x.ravel() for x in grid.face_layer]).astype(int)
    fk = np.concatenate([x.ravel() for x in grid.face_kind])
    e_face = 0.5 * op.wu * u * u
    plain = op.unknown & (fk != g.INTERFACE)
    np.add.at(parts, fl[plain], e_face[plain])
    half_vol = 0.5 * grid.cell_volume
    for k, tr in interface_traces(op, p, u).items():
        parts[k - 1] += np.sum(0.5 * half_vol * tr["s"] ** 2 / tr["b_inner"])
        parts[k] += np.sum(0.5 * half_vol * tr["s"] ** 2 / tr["b_outer"])
    return total, parts


# ---------------------------------------------------------------------------
# initial data


def face_gradient(grid: g.LayeredGrid, potential, system: str = "A") -> tuple:
    """Two-point gradient of ``potential`` on every live face.

    The potential is evaluated at the face centre shifted by half a cell
    each way, which is exact for quadratics.  The S0 faces of system A are
    left at zero: their normal velocity is boundary data, not state.
    """
    d, dx = grid.dimension, grid.spacing
    out = []
    for a in range(d):
        fc = grid.face_centers(a)
        plus = list(fc)
        minus = list(fc)
        plus[a] = fc[a] + 0.5 * dx
        minus[a] = fc[a] - 0.5 * dx
        val = (np.asarray(potential(*plus), dtype=float) - np.asarray(potential(*minus), dtype=float)) / dx
        kind = grid.face_kind[a]
        live = kind != g.INACTIVE
        if system == "A":
            live &= kind != g.S0
        out.append(np.where(live, np.broadcast_to(val, kind.shape), 0.0))
    return tuple(out)


def make_gradient_initial_data(grid: g.LayeredGrid, potential=None, pressure=None, system: str = "A",
                               check_s1: bool = True, s1_tol: float = 1e-12) -> AcousticField:
    """Initial state with ``u0 = grad l`` on faces and ``p0 = pressure`` at cells.

    ``potential`` and ``pressure`` are callables of the coordinate arrays
    (``None`` means zero).  ``l`` must vanish on S1.
    """
    st = AcousticField.zeros(grid, system)
    if potential is not None:
        if check_s1 and len(grid.s1_faces):
            c = grid.s1_faces.center
            vals = np.asarray(potential(*[c[:, a] for a in range(grid.dimension)]), dtype=float)
            worst = float(np.max(np.abs(vals)))
            if worst > s1_tol:
                raise SpecError(f"potential does not vanish on S1 (max |l| = {worst:.3e})")
        st.u = face_gradient(grid, potential, system)
    if pressure is not None:
        vals = np.asarray(pressure(*grid.cell_centers), dtype=float)
        st.p = np.where(grid.active, np.broadcast_to(vals, grid.shape), 0.0)
    return st


# ---------------------------------------------------------------------------
# curl


def curl_diagnostic(state: AcousticField, grid: g.LayeredGrid, return_fields: bool = False):
    """Discrete curl on grid edges, max-norm per layer.

    In 2D the single component ``d1 u2 - d2 u1`` lives on nodes; in 3D each
    axis pair gives one component.  Only edges whose four surrounding cells
    are active are scanned; an edge is attributed to the outermost of those
    cells' layers.
    """
    d, dx = grid.dimension, grid.spacing
    if d < 2:
        raise DimensionError("curl is undefined in 1D")
    from .stencil import face_diff
    norms = np.zeros(grid.num_layers)
    fields = {}
    lay = np.where(grid.active, grid.cell_layer, -1)
    for a in range(d):
        for b in range(a + 1, d):
            c = (face_diff(state.u[b], a, d) - face_diff(state.u[a], b, d)) / dx
            pad = [(0, 0)] * d
            pad[a] = (1, 1)
            pad[b] = (1, 1)
            lp = np.pad(lay, pad, constant_values=-1)
            corners = []
            for sa in (0, 1):
                for sb in (0, 1):
                    sl = [slice(None)] * d
                    sl[a] = slice(sa, sa + c.shape[a])
                    sl[b] = slice(sb, sb + c.shape[b])
                    corners.append(lp[tuple(sl)])
            corners = np.stack(corners)
            ok = np.all(corners >= 0, axis=0)
            layer = corners.max(axis=0)
            c = np.where(ok, c, 0.0)
            fields[(a, b)] = c
            for k in range(grid.num_layers):
                m = ok & (layer == k)
                if np.any(m):
                    norms[k] = max(norms[k], float(np.max(np.abs(c[m]))))
    return (norms, fields) if return_fields else norms


def tangential_jump_diagnostic(state: AcousticField, grid: g.LayeredGrid) -> dict:
    """Max tangential-velocity mismatch across interfaces and on S1 (d >= 2).

    Tangential components are averaged from the faces of the adjacent cell
    on each side; this is a monitor, not an enforced condition.
    """
    d = grid.dimension
    if d < 2:
        raise DimensionError("no tangential components in 1D")
    from .stencil import cell_average
    cellu = [cell_average(state.u[a], a, d) for a in range(d)]
    out = {}
    for k, faces in grid.interface_faces.items():
        step_ = np.zeros_like(faces.cell)
        step_[np.arange(len(faces)), faces.axis] = faces.sign
        o, i = tuple(faces.cell.T), tuple((faces.cell - step_).T)
        worst = 0.0
        for a in range(d):
            sel = faces.axis != a
            diff = np.abs(cellu[a][o] - cellu[a][i])[sel]
            if len(diff):
                worst = max(worst, float(diff.max()))
        out[k] = worst
    s1 = grid.s1_faces
    worst = 0.0
    for a in range(d):
        sel = s1.axis != a
        vals = np.abs(cellu[a][tuple(s1.cell.T)])[sel]
        if len(vals):
            worst = max(worst, float(vals.max()))
    out["S1"] = worst
    return out


# ---------------------------------------------------------------------------
# CSV export


def export_snapshots_csv(path, grid: g.LayeredGrid, snapshots):
    """Rows ``time, kind, axis, index, x..., value`` for cells (``p``) and faces (``u``)."""
    d = grid.dimension
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "kind", "axis", "index"] + [f"x{a}" for a in range(d)] + ["value"])
        cidx = np.argwhere(grid.active)
        X = grid.cell_centers
        for s in snapshots:
            for ix in map(tuple, cidx):
                w.writerow([repr(float(s.t)), "p", -1, ix[0] if d == 1 else "-".join(map(str, ix)),
                            *(repr(float(X[a][ix])) for a in range(d)), repr(float(s.p[ix]))])
            for a in range(d):
                fc = grid.face_centers(a)
                for ix in map(tuple, np.argwhere(grid.face_kind[a] != g.INACTIVE)):
                    w.writerow([repr(float(s.t)), "u", a, ix[0] if d == 1 else "-".join(map(str, ix)),
                                *(repr(float(fc[b][ix])) for b in range(d)), repr(float(s.u[a][ix]))])


def export_traces_csv(path, traces_a: BoundaryTraceSet | None, traces_b: BoundaryTraceSet | None = None,
                      control: ControlSignal | None = None):
    """Rows ``time, face, k, m_eta, Q, P`` on integer time levels."""
    ref = traces_a or traces_b
    if ref is None and control is None:
        raise ValueError("nothing to export")
    if ref is not None:
        n_t, n_f = ref.p_int.shape
        dt = ref.dt
    else:
        n_t, n_f = control.Q_int.shape
        dt = control.dt
    k = traces_a.p_int if traces_a is not None else np.full((n_t, n_f), np.nan)
    m = traces_b.un_int if traces_b is not None else np.full((n_t, n_f), np.nan)
    Q = control.Q_int if control is not None else np.full((n_t, n_f), np.nan)
    P = control.P_int if control is not None else np.full((n_t, n_f), np.nan)
    for arr in (k, m, Q, P):
        if arr.shape != (n_t, n_f):
            raise LengthMismatch("trace and control series have different lengths")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "face", "k", "m_eta", "Q", "P"])
        for n in range(n_t):
            for j in range(n_f):
                w.writerow([repr(n * dt), j, repr(float(k[n, j])), repr(float(m[n, j])),
                            repr(float(Q[n, j])), repr(float(P[n, j]))])


def read_csv(path) -> tuple:
    """Header and float rows of any exported CSV (non-numeric cells kept as strings)."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = []
        for row in r:
            conv = []
            for v in row:
                try:
                    conv.append(float(v))
                except ValueError:
                    conv.append(v)
            rows.append(conv)
    return header, rows
