"""Hilbert Uniqueness Method for the simultaneous control of systems A and B.

Pipeline for a datum ``G = (G1, G2)``:

1. Evolve system A from ``G1`` and system B from ``G2`` without forcing,
   using drift-kick-drift.  That step is the exact adjoint inverse of the
   kick-drift-kick step used for controlled runs.
2. Read the S0 traces.  The system-A pressure ``k`` is taken at the
   half levels (DKD mid-steps), where the controlled step reads its flux
   datum.  The system-B outward velocity ``m`` is taken at integer levels,
   where the controlled step reads its Dirichlet datum.
3. Form ``r = alpha k - tau m`` and the single control ``Q = r / beta``;
   system B receives ``P = -(beta/gamma) Q``.
4. Solve both controlled systems backwards from rest at ``T``.  The state
   reached at ``t = 0`` is ``Lambda G``.

With these samplings ``<Lambda G, G~>_X`` equals the discrete Y pairing
:func:`y_inner` identically.  That makes ``Lambda`` symmetric positive
semidefinite, so conjugate gradients apply.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh

from . import grid as g
from .coefficients import MediumCoefficients, all_wave_speeds, validate_all
from .errors import IncompatibleCoefficients, LengthMismatch, NoConvergence
from .linalg import conjugate_gradient
from .solver import (AcousticField, AcousticSolver, BoundaryTraceSet, ControlSignal, Propagator,
                     SystemOperator, half_to_int, int_to_half, steps_for, DEFAULT_CFL, check_dt,
                     max_stable_dt)

log = logging.getLogger(__name__)

DEFAULT_FILTER_CUTOFF = 0.7


# ---------------------------------------------------------------------------


@dataclass
class HUMVector:
    """Pair of initial data: ``G1 = (w0, k0)`` for system A and ``G2 = (m0, l0)`` for B.

    Stored as flat vectors (pressures on cells, velocities on faces).
    """

    pA: np.ndarray
    uA: np.ndarray
    pB: np.ndarray
    uB: np.ndarray

    def __add__(self, o):
        return HUMVector(self.pA + o.pA, self.uA + o.uA, self.pB + o.pB, self.uB + o.uB)

    def __sub__(self, o):
        return HUMVector(self.pA - o.pA, self.uA - o.uA, self.pB - o.pB, self.uB - o.uB)

    def __mul__(self, s):
        return HUMVector(self.pA * s, self.uA * s, self.pB * s, self.uB * s)

    __rmul__ = __mul__

    def copy(self):
        return HUMVector(self.pA.copy(), self.uA.copy(), self.pB.copy(), self.uB.copy())

    @classmethod
    def from_fields(cls, layout, fa: AcousticField, fb: AcousticField) -> "HUMVector":
        pa, ua = fa.flat(layout)
        pb, ub = fb.flat(layout)
        return cls(pa, ua, pb, ub)

    def fields(self, layout) -> tuple:
        return (AcousticField.from_flat(layout, self.pA, self.uA, 0.0, "A"),
                AcousticField.from_flat(layout, self.pB, self.uB, 0.0, "B"))

    @property
    def p(self):
        return np.concatenate([self.pA, self.pB])

    @property
    def u(self):
        return np.concatenate([self.uA, self.uB])

    @classmethod
    def from_stacked(cls, p, u, nc, nf):
        return cls(p[:nc].copy(), u[:nf].copy(), p[nc:].copy(), u[nf:].copy())


@dataclass
class HUMTraces:
    """S0 traces of a homogeneous pair evolution in the HUM samplings."""

    dt: float
    k_half: np.ndarray       # (N, n_s0) system-A pressure at t_{n+1/2}
    m_int: np.ndarray        # (N+1, n_s0) system-B outward velocity at t_n
    face_area: float

    @property
    def n_steps(self):
        return self.k_half.shape[0]


@dataclass
class ControlReport:
    T: float
    dt: float
    n_steps: int
    cg_iterations: int
    cg_converged: bool
    cg_residual_history: list
    hum_functional_history: list
    y_norm: float
    initial_energy: dict
    final_energy: dict
    energy_ratio: dict
    control: ControlSignal | None
    G: HUMVector | None = field(repr=False, default=None)
    warnings: list = field(default_factory=list)
    filter_cutoff: float | None = None
    filtered_modes: tuple = ()
    target_filtered_fraction: float = 0.0

    @property
    def max_energy_ratio(self) -> float:
        return max(self.energy_ratio.values())

    def summary(self) -> dict:
        out = dict(T=self.T, dt=self.dt, n_steps=self.n_steps, cg_iterations=self.cg_iterations,
                   cg_converged=self.cg_converged, y_norm=self.y_norm,
                   cg_final_residual=self.cg_residual_history[-1] if self.cg_residual_history else 0.0)
        for tag in ("A", "B"):
            out[f"initial_energy_{tag}"] = self.initial_energy[tag]
            out[f"final_energy_{tag}"] = self.final_energy[tag]
            out[f"energy_ratio_{tag}"] = self.energy_ratio[tag]
        out["energy_ratio"] = self.max_energy_ratio
        out["filter_cutoff"] = "none" if self.filter_cutoff is None else self.filter_cutoff
        out["filtered_modes"] = sum(self.filtered_modes)
        out["target_filtered_fraction"] = self.target_filtered_fraction
        return out


# ---------------------------------------------------------------------------


class ModeFilter:
    """X-orthogonal projector that removes poorly resolved eigenmodes.

    The discrete Gramian inherits spurious grid-scale modes whose group
    velocity tends to zero; they never reach S0, so ``Lambda`` is nearly
    singular on them and CG stalls.  This filter drops every eigenmode of
    ``-div(b grad(a .))`` whose frequency exceeds ``cutoff * 2 c_min / dx``,
    i.e. modes with ``sin(k dx / 2) > cutoff`` in the slowest layer.  The
    kept space is invariant under the homogeneous evolution and contains
    the stationary velocity fields.

    Dense eigendecomposition, so it is meant for desk-scale grids.
    """

    def __init__(self, ops, cutoff: float, c_min: float, max_cells: int = 6000):
        self.cutoff = float(cutoff)
        self.ops = ops
        self.modes = []
        self.removed = []
        for op in ops:
            act = np.flatnonzero(op.wp > 0)
            if len(act) > max_cells:
                raise ValueError(f"{len(act)} active cells exceed the dense filter limit {max_cells}")
            Gm = op.G[:, act].toarray()
            Dm = op.D[act, :].toarray()
            sw = np.sqrt(op.wp[act])
            K = -(Dm @ Gm) * sw[:, None] / sw[None, :]
            w2, V = eigh(0.5 * (K + K.T))
            om = np.sqrt(np.maximum(w2, 0.0))
            hi = om > self.cutoff * 2.0 * c_min / op.grid.spacing
            P = np.zeros((op.layout.n_cells, int(hi.sum())))
            P[act] = V[:, hi] / sw[:, None]
            U = (op.G @ P) / om[hi]
            self.modes.append((P, U))
            self.removed.append(int(hi.sum()))

    def _strip(self, op, P, U, p, u):
        return p - P @ (P.T @ (op.wp * p)), u - U @ (U.T @ (op.wu * u))

    def __call__(self, G: "HUMVector") -> "HUMVector":
        (PA, UA), (PB, UB) = self.modes
        pa, ua = self._strip(self.ops[0], PA, UA, G.pA, G.uA)
        pb, ub = self._strip(self.ops[1], PB, UB, G.pB, G.uB)
        return HUMVector(pa, ua, pb, ub)


class HUMController:
    """Gramian, Y pairing and control synthesis on one grid and horizon."""

    def __init__(self, grid: g.LayeredGrid, coeffs: MediumCoefficients, T: float,
                 cfl: float = DEFAULT_CFL, dt: float | None = None, require_compatible: bool = True,
                 filter_cutoff: float | None = DEFAULT_FILTER_CUTOFF):
        rep = validate_all(coeffs)
        if require_compatible and not rep.compatible:
            raise IncompatibleCoefficients(
                f"alpha beta = gamma tau and beta_(k-1) tau_k = beta_k tau_(k-1) fail "
                f"(residuals {rep.residual_product:.2e}, {rep.residual_ratio:.2e})")
        self.hypotheses = rep
        if not (rep.monotone_ab and rep.monotone_gt):
            log.warning("coefficients are not monotone; observability is not guaranteed")
        self.grid, self.coeffs, self.T = grid, coeffs, float(T)
        self.opA = SystemOperator(grid, coeffs, "A")
        self.opB = SystemOperator(grid, coeffs, "B")
        self.prop = Propagator([self.opA, self.opB])
        self.layout = self.opA.layout
        self.nc, self.nf = self.layout.n_cells, self.layout.n_faces
        target = dt if dt is not None else cfl * max_stable_dt(grid, coeffs)
        self.n_steps, self.dt = steps_for(self.T, target)
        if self.n_steps:
            check_dt(self.dt, grid, coeffs)
        o = coeffs.outer()
        self.alpha, self.beta, self.gamma, self.tau = o["alpha"], o["beta"], o["gamma"], o["tau"]
        self.area = grid.face_area
        w = np.ones(self.n_steps + 1)
        w[0] = w[-1] = 0.5
        self.trap = w
        self.filter_cutoff = filter_cutoff
        self._filter = None

    @property
    def mode_filter(self) -> "ModeFilter | None":
        if self.filter_cutoff is None:
            return None
        if self._filter is None:
            c_min = min(all_wave_speeds(self.coeffs, "A") + all_wave_speeds(self.coeffs, "B"))
            self._filter = ModeFilter((self.opA, self.opB), self.filter_cutoff, c_min)
        return self._filter

    # -- inner products --------------------------------------------------
    def x_inner(self, a: HUMVector, b: HUMVector) -> float:
        return self.opA.inner(a.pA, a.uA, b.pA, b.uA) + self.opB.inner(a.pB, a.uB, b.pB, b.uB)

    def energies(self, G: HUMVector) -> dict:
        return {"A": self.opA.energy(G.pA, G.uA), "B": self.opB.energy(G.pB, G.uB)}

    def zeros(self) -> HUMVector:
        return HUMVector(np.zeros(self.nc), np.zeros(self.nf), np.zeros(self.nc), np.zeros(self.nf))

    # -- observation -----------------------------------------------------
    def traces(self, G: HUMVector) -> HUMTraces:
        """Homogeneous drift-kick-drift evolutions of ``G1`` (A) and ``G2`` (B)."""
        pr = self.prop
        p, u = G.p.copy(), G.u.copy()
        N = self.n_steps
        ns0 = pr.n_s0
        kh = np.empty((N, ns0))
        mi = np.empty((N + 1, ns0))
        kcell = pr.trace_cell[0]
        mface, msign = pr.trace_face[1], pr.trace_sign[1]
        mi[0] = u[mface] * msign
        for n in range(N):
            mid = pr.dkd(p, u, self.dt)
            kh[n] = mid[kcell]
            mi[n + 1] = u[mface] * msign
        if not (np.isfinite(kh).all() and np.isfinite(mi).all()):
            from .errors import NonFiniteError
            raise NonFiniteError("non-finite trace in the homogeneous evolution")
        return HUMTraces(self.dt, kh, mi, self.area)

    def residual_signals(self, tr: HUMTraces) -> tuple:
        """``r = alpha k - tau m`` on both staggerings."""
        r_half = self.alpha * tr.k_half - self.tau * int_to_half(tr.m_int)
        r_int = self.alpha * half_to_int(tr.k_half) - self.tau * tr.m_int
        return r_half, r_int

    def y_inner_traces(self, ta: HUMTraces, tb: HUMTraces) -> float:
        """Discrete ``int_0^T int_S0 (alpha k_a - tau m_a)(alpha k_b - tau m_b)``.

        The pressure part pairs on half levels (midpoint rule) and the
        velocity part on integer levels (trapezoid rule); the cross terms
        use mutually adjoint half/integer transfers, which keeps the form
        symmetric and nonnegative.
        """
        rh, ri = self.residual_signals(ta)
        val = self.dt * self.area * (self.alpha * np.sum(rh * tb.k_half)
                                     - self.tau * np.sum(self.trap[:, None] * ri * tb.m_int))
        return float(val)

    def y_inner(self, Ga: HUMVector, Gb: HUMVector) -> float:
        return self.y_inner_traces(self.traces(Ga), self.traces(Gb))

    def y_norm(self, G: HUMVector) -> float:
        return float(np.sqrt(max(self.y_inner(G, G), 0.0)))

    # -- controls --------------------------------------------------------
    def synthesize_controls(self, G: HUMVector | HUMTraces) -> ControlSignal:
        """``Q = (alpha k - tau m)/beta`` on S0, ``P = -(beta/gamma) Q``."""
        tr = G if isinstance(G, HUMTraces) else self.traces(G)
        rh, ri = self.residual_signals(tr)
        return ControlSignal(self.dt, rh / self.beta, ri / self.beta, self.beta / self.gamma)

    def backward_controlled(self, control: ControlSignal, final: HUMVector | None = None) -> HUMVector:
        """Run both controlled systems from ``final`` (default rest) at ``T`` back to 0."""
        pr = self.prop
        st = final if final is not None else self.zeros()
        p, u = st.p.copy(), st.u.copy()
        Q, P = control.Q_half, control.P_int
        for n in range(self.n_steps - 1, -1, -1):
            pr.kdk(p, u, -self.dt, Q=Q[n], P0=P[n + 1], P1=P[n])
        return HUMVector.from_stacked(p, u, self.nc, self.nf)

    def forward_controlled(self, initial: HUMVector, control: ControlSignal) -> HUMVector:
        pr = self.prop
        p, u = initial.p.copy(), initial.u.copy()
        Q, P = control.Q_half, control.P_int
        for n in range(self.n_steps):
            pr.kdk(p, u, self.dt, Q=Q[n], P0=P[n], P1=P[n + 1])
        if not (np.isfinite(p).all() and np.isfinite(u).all()):
            from .errors import NonFiniteError
            raise NonFiniteError("non-finite state in the controlled evolution")
        out = HUMVector.from_stacked(p, u, self.nc, self.nf)
        # the S0 velocity of system A is boundary data, not state
        out.uA[self.opA.s0_face] = 0.0
        return out

    def apply_gramian(self, G: HUMVector) -> HUMVector:
        return self.backward_controlled(self.synthesize_controls(G))

    # -- the inverse problem --------------------------------------------
    def solve(self, target: HUMVector, tol: float = 1e-8, max_iter: int = 500,
              raise_on_failure: bool = True) -> ControlReport:
        """CG on ``Lambda G = target`` in the X inner product, then closed-loop check."""
        target = self._clean(target)
        e0 = self.energies(target)
        flt = self.mode_filter
        res = conjugate_gradient(self.apply_gramian, target, inner=self.x_inner, tol=tol,
                                 max_iter=max_iter, project=flt)
        G = res.x
        control = self.synthesize_controls(G)
        final = self.forward_controlled(target, control)
        e1 = self.energies(final)
        ratio = {k: (e1[k] / e0[k] if e0[k] > 0 else 0.0) for k in e0}
        rep = ControlReport(self.T, self.dt, self.n_steps, res.iterations, res.converged,
                            list(res.residuals), list(res.objective),
                            self.y_norm(G) if res.iterations else 0.0, e0, e1, ratio, control, G)
        if flt is not None:
            kept = flt(target)
            tot = self.x_inner(target, target)
            rep.filter_cutoff = flt.cutoff
            rep.filtered_modes = tuple(flt.removed)
            rep.target_filtered_fraction = 1.0 - self.x_inner(kept, kept) / tot if tot > 0 else 0.0
        if not res.converged and raise_on_failure:
            raise NoConvergence(f"CG did not reach tol={tol} in {max_iter} iterations "
                                f"(residual {res.residuals[-1]:.3e}); T may be below the "
                                f"controllability horizon or the mesh too coarse", rep)
        return rep

    def _clean(self, G: HUMVector) -> HUMVector:
        """Zero the entries that are not state (inactive cells, boundary-data faces)."""
        G = G.copy()
        G.pA[self.opA.wp == 0] = 0.0
        G.pB[self.opB.wp == 0] = 0.0
        G.uA[~self.opA.unknown] = 0.0
        G.uB[~self.opB.unknown] = 0.0
        return G


# ---------------------------------------------------------------------------
# functional front ends


def y_inner(Ga: HUMVector, Gb: HUMVector, T: float, coeffs: MediumCoefficients, grid: g.LayeredGrid,
            **kw) -> float:
    return HUMController(grid, coeffs, T, **kw).y_inner(Ga, Gb)


def synthesize_controls(G: HUMVector, T: float, coeffs: MediumCoefficients, grid: g.LayeredGrid,
                        **kw) -> ControlSignal:
    return HUMController(grid, coeffs, T, **kw).synthesize_controls(G)


def apply_gramian(G: HUMVector, T: float, coeffs: MediumCoefficients, grid: g.LayeredGrid,
                  **kw) -> HUMVector:
    return HUMController(grid, coeffs, T, **kw).apply_gramian(G)


def solve_control(target: HUMVector, T: float, coeffs: MediumCoefficients, grid: g.LayeredGrid,
                  tol: float = 1e-8, max_iter: int = 500, T0_paper: float | None = None,
                  T0_empirical: float | None = None, raise_on_failure: bool = True,
                  **kw) -> ControlReport:
    ctl = HUMController(grid, coeffs, T, **kw)
    notes = []
    for name, T0 in (("T0_paper", T0_paper), ("T0_empirical", T0_empirical)):
        if T0 is not None and T < T0:
            msg = f"T={T} is below {name}={T0:.4g}"
            log.warning(msg)
            notes.append(msg)
    rep = ctl.solve(target, tol=tol, max_iter=max_iter, raise_on_failure=raise_on_failure)
    rep.warnings += notes
    return rep


def duality_integrand(alpha, beta, gamma, tau, Q, P, k_t, m_t) -> np.ndarray:
    """``alpha beta Q k~ + gamma tau P m~``, which equals ``(alpha k - tau m)(alpha k~ - tau m~)``
    whenever ``Q, P`` are synthesized from ``(k, m)``."""
    return alpha * beta * Q * k_t + gamma * tau * P * m_t
