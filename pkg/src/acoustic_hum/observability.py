"""Observation functionals, empirical observability constants, the explicit
sufficient-condition constants, and the multiplier identity checks."""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import grid as g
from .coefficients import MediumCoefficients, all_wave_speeds
from .errors import DimensionError, LengthMismatch, MissingC2
from .multiplier import MultiplierData, poincare_constant
from .solver import AcousticField, AcousticSolver, BoundaryTraceSet, interface_traces
from .stencil import cell_average, shift


# ---------------------------------------------------------------------------
# functionals


@dataclass
class ObservationValue:
    combined: float      # int int (alpha k - tau m)^2 dh/deta
    separated: float     # int int (alpha k^2 + tau m^2) dh/deta


def _trapezoid_weights(n_levels: int) -> np.ndarray:
    w = np.ones(n_levels)
    if n_levels > 1:
        w[0] = w[-1] = 0.5
    else:
        w[:] = 0.0
    return w


def _trace_arrays(traces_A, traces_B):
    ref = traces_A if traces_A is not None else traces_B
    if ref is None:
        raise LengthMismatch("at least one trace set is required")
    k = traces_A.p_int if traces_A is not None else np.zeros_like(ref.un_int)
    m = traces_B.un_int if traces_B is not None else np.zeros_like(ref.p_int)
    if k.shape != m.shape:
        raise LengthMismatch(f"trace shapes differ: {k.shape} vs {m.shape}")
    if traces_A is not None and traces_B is not None and not np.isclose(traces_A.dt, traces_B.dt, rtol=1e-12):
        raise LengthMismatch("trace sets use different time steps")
    return k, m, ref


def observation_density(traces_A: BoundaryTraceSet | None, traces_B: BoundaryTraceSet | None,
                        md: MultiplierData, coeffs: MediumCoefficients) -> tuple:
    """Per-level face integrals of both integrands (before time quadrature)."""
    k, m, ref = _trace_arrays(traces_A, traces_B)
    dhdn = np.asarray(md.dh_dn["S0"])
    if dhdn.shape[0] != k.shape[1]:
        raise LengthMismatch("S0 face count differs between traces and multiplier data")
    o = coeffs.outer()
    a, t = o["alpha"], o["tau"]
    wf = ref.face_area * dhdn
    comb = ((a * k - t * m) ** 2) @ wf
    sep = (a * k * k + t * m * m) @ wf
    return comb, sep, ref.dt


def observation_functional(traces_A: BoundaryTraceSet | None, traces_B: BoundaryTraceSet | None,
                           md: MultiplierData, coeffs: MediumCoefficients,
                           T: float | None = None) -> ObservationValue:
    """Trapezoid-in-time, midpoint-in-space quadrature over ``S0 x (0, T)``.

    ``alpha`` and ``tau`` are the S0-layer values.  A missing trace set is
    read as identically zero.
    """
    comb, sep, dt = observation_density(traces_A, traces_B, md, coeffs)
    n = len(comb) - 1
    if T is not None and not np.isclose(n * dt, T, rtol=1e-9, atol=1e-14):
        raise LengthMismatch(f"traces cover {n * dt}, requested T={T}")
    w = _trapezoid_weights(n + 1) * dt
    return ObservationValue(float(w @ comb), float(w @ sep))


def cumulative_observation(traces_A, traces_B, md, coeffs, separated: bool = False) -> np.ndarray:
    """Observation over ``[0, t_n]`` for every level ``n``."""
    comb, sep, dt = observation_density(traces_A, traces_B, md, coeffs)
    f = sep if separated else comb
    out = np.zeros(len(f))
    out[1:] = np.cumsum(0.5 * dt * (f[1:] + f[:-1]))
    return out


def weighted_energy(state_A: AcousticField | None, state_B: AcousticField | None,
                    coeffs: MediumCoefficients, grid: g.LayeredGrid) -> float:
    """``sum_k int (beta|u|^2 + alpha p^2 + tau|v|^2 + gamma q^2)``, twice the total energy."""
    from .solver import energy
    tot = 0.0
    if state_A is not None:
        tot += 2.0 * energy(state_A, coeffs, grid)
    if state_B is not None:
        tot += 2.0 * energy(state_B, coeffs, grid)
    return tot


# ---------------------------------------------------------------------------
# initial-data sampler


def smooth_bump(center, radius, amplitude=1.0, wavevector=None, phase=0.0):
    """``A (1 - s^2)^4 cos(k.x + phase)`` for ``s = |x - c|/r < 1``, zero outside (C^3)."""
    c = np.asarray(center, dtype=float)
    kv = np.zeros_like(c) if wavevector is None else np.asarray(wavevector, dtype=float)

    def f(*X):
        r2 = sum((X[a] - c[a]) ** 2 for a in range(len(c))) / radius**2
        env = np.where(r2 < 1.0, (1.0 - np.minimum(r2, 1.0)) ** 4, 0.0)
        return amplitude * env * np.cos(sum(kv[a] * X[a] for a in range(len(c))) + phase)

    return f


def _sum(fs):
    def f(*X):
        return sum(h(*X) for h in fs)
    return f


@dataclass
class GradientDataSampler:
    """Random gradient-type initial data for both systems.

    Every bump sits inside a single layer, so the potential vanishes on S1
    and on every interface and both matching conditions hold trivially.
    ``support="near_s1"`` confines everything to a thin shell next to S1.
    """

    grid: g.LayeredGrid
    seed: int = 0
    support: str = "full"
    bumps: int = 2
    shell_fraction: float = 0.3
    max_wavenumber: float = 2.0 * np.pi

    def __post_init__(self):
        if self.support not in ("full", "near_s1"):
            raise ValueError(f"support must be 'full' or 'near_s1', got {self.support!r}")
        self.rng = np.random.default_rng(self.seed)

    def _place(self):
        gr, rng = self.grid, self.rng
        b = np.asarray(gr.layer_bounds)
        d = gr.dimension
        if self.support == "near_s1":
            k = 0
            rho = self.shell_fraction * (b[1] - b[0]) * 0.5
            t = b[0] + rho
        else:
            k = int(rng.integers(gr.num_layers))
            lo, hi = b[k], b[k + 1]
            rho = (hi - lo) * rng.uniform(0.2, 0.45)
            t = rng.uniform(lo + rho, hi - rho)
        if d == 1:
            return np.array([t]), rho
        # point at Chebyshev distance t from the centre, on a random face of the box
        x = rng.uniform(-t, t, size=d)
        ax = int(rng.integers(d))
        x[ax] = t * rng.choice([-1.0, 1.0])
        return np.asarray(gr.center) + x, rho

    def _field(self, n):
        fs = []
        for _ in range(n):
            c, r = self._place()
            kv = self.rng.uniform(-self.max_wavenumber, self.max_wavenumber, size=self.grid.dimension) * 0.5
            fs.append(smooth_bump(c, r, self.rng.uniform(0.5, 1.5) * self.rng.choice([-1, 1]), kv,
                                  self.rng.uniform(0, 2 * np.pi)))
        return _sum(fs)

    def sample(self) -> tuple:
        """One draw ``(field_A, field_B)``; never identically zero."""
        from .solver import make_gradient_initial_data
        gr = self.grid
        out = []
        for tag in ("A", "B"):
            l = self._field(self.bumps)
            p = self._field(self.bumps)
            # the potential's gradient scales like amplitude / radius
            scale = float(np.min(np.diff(gr.layer_bounds))) * 0.25
            pot = (lambda f, s: (lambda *X: s * f(*X)))(l, scale)
            out.append(make_gradient_initial_data(gr, pot, p, tag))
        return tuple(out)


# ---------------------------------------------------------------------------
# quotient


@dataclass
class ObservabilityReport:
    T: float
    observation: float
    weighted_energy: float
    quotient: float
    trial_quotients: list
    times: np.ndarray = field(repr=False, default=None)
    quotient_curve: np.ndarray = field(repr=False, default=None)   # min over trials, per T
    T0_empirical: float | None = None
    paper_constants: "PaperConstants | None" = None
    seed: int = 0
    spacing: float = 0.0
    trials: int = 0
    support: str = "full"
    separated: bool = False

    def summary(self) -> dict:
        out = dict(T=self.T, observation=self.observation, weighted_energy=self.weighted_energy,
                   quotient=self.quotient, seed=self.seed, spacing=self.spacing, trials=self.trials,
                   support=self.support, form="separated" if self.separated else "combined",
                   T0_empirical=self.T0_empirical if self.T0_empirical is not None else "nan")
        if self.paper_constants is not None:
            out.update({f"paper_{k}": v for k, v in self.paper_constants.as_dict().items()})
        return out


def observability_quotient(grid: g.LayeredGrid, coeffs: MediumCoefficients, md: MultiplierData, T: float,
                           trials: int = 4, seed: int = 0, support: str = "full", sampler=None,
                           separated: bool = False, cfl: float = 0.9, T0_threshold: float = 0.1,
                           workers: int = 1) -> ObservabilityReport:
    """Minimum over sampled data of observation / weighted energy.

    One evolution per trial covers ``[0, T]``; prefixes of it give the
    quotient for every shorter horizon, from which the empirical minimal
    time is read (see :func:`empirical_T0`).
    """
    if sampler is None:
        sampler = GradientDataSampler(grid, seed=seed, support=support)
    solA = AcousticSolver(grid, coeffs, "A", cfl)
    solB = AcousticSolver(grid, coeffs, "B", cfl)
    # draw every sample up front so the result does not depend on scheduling
    data = [sampler.sample() for _ in range(trials)]

    def run(pair):
        fa, fb = pair
        E = weighted_energy(fa, fb, coeffs, grid)
        if not E > 0:
            raise ValueError("sampler produced zero data; the quotient is undefined")
        ra = solA.evolve(fa, T)
        rb = solB.evolve(fb, T, dt=ra.dt)
        return cumulative_observation(ra.traces, rb.traces, md, coeffs, separated), E, ra.traces.times

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(run, data))
    else:
        results = [run(pr) for pr in data]
    curves = [cum / E for cum, E, _ in results]
    obs_T = [cum[-1] for cum, _, _ in results]
    en = [E for _, E, _ in results]
    times = results[0][2]
    curves = np.array(curves)
    q = curves[:, -1]
    j = int(np.argmin(q))
    curve = curves.min(axis=0)
    rep = ObservabilityReport(T, float(obs_T[j]), float(en[j]), float(q[j]), q.tolist(), times, curve,
                              seed=seed, spacing=grid.spacing, trials=trials, support=support,
                              separated=separated)
    rep.T0_empirical = empirical_T0(times, curve, T0_threshold)
    return rep


def empirical_T0(times: np.ndarray, curve: np.ndarray, threshold: float = 0.1) -> float | None:
    """Smallest ``T`` with ``curve(T) >= threshold * curve(T_max)``, by bisection.

    ``curve`` is nondecreasing (nonnegative integrand), so bisection on the
    level index finds the crossing; linear interpolation refines it.
    """
    if curve is None or len(curve) < 2 or not curve[-1] > 0:
        return None
    level = threshold * curve[-1]
    lo, hi = 0, len(curve) - 1
    if curve[lo] >= level:
        return float(times[0])
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if curve[mid] >= level:
            hi = mid
        else:
            lo = mid
    c0, c1 = curve[lo], curve[hi]
    frac = 0.0 if c1 == c0 else (level - c0) / (c1 - c0)
    return float(times[lo] + frac * (times[hi] - times[lo]))


# ---------------------------------------------------------------------------
# explicit constants


@dataclass
class PaperConstants:
    C1: float
    C2: float
    C3: float
    C4: float
    C5: float
    C6: float
    C7: float
    C8: float
    C9: float
    T0: float
    theta: float
    C2_source: str
    notes: list = field(default_factory=list)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["notes"] = "; ".join(self.notes)
        return d


def paper_constants(coeffs: MediumCoefficients, md: MultiplierData, grid: g.LayeredGrid, T: float,
                    C2: float | None = None, estimate_C2: bool = True) -> PaperConstants:
    """Sufficient-condition constants of the observability estimate.

    The dimensional factor of the first constant is the active dimension
    ``d``.  ``C2`` defaults to the Neumann Poincare constant of the grid.
    """
    notes = []
    if C2 is None:
        if not estimate_C2:
            raise MissingC2("C2 was not supplied and estimation is disabled")
        C2 = poincare_constant(grid)
        source = "estimated"
    else:
        source = "user"
    notes.append(f"C2 {source}")
    d = grid.dimension
    al, be, ga, ta = (np.asarray(x) for x in (coeffs.alpha, coeffs.beta, coeffs.gamma, coeffs.tau))
    gh = md.grad_h_max

    def first(a, b):
        return d * max(np.max(1 / a), np.max(1 / b)) * gh

    C1 = first(al, be)
    C3 = C2 * np.max(1 / (al * be))
    C4 = max(np.max(C2 / be), np.max(1 / al))
    C5 = C3 + (2 * C1 + C4) * T
    C1b = first(ga, ta)
    C3b = C2 * np.max(1 / (ga * ta))
    C4b = max(np.max(C2 / ta), np.max(1 / ga))
    C6 = C3b + (2 * C1b + C4b) * T
    mu = md.mu if np.isfinite(md.mu) else 0.0
    theta = 1.0 - md.delta0 * (1.0 - mu)
    if theta <= 0:
        notes.append("delta0 (1 - mu) >= 1: constants undefined")
        C7 = T0 = float("inf")
    else:
        C7 = 4.0 / theta
        T0 = max(1.0, (C5 + C6) / theta)
    o = coeffs.outer()
    C8 = max(1 / o["alpha"], 1 / o["tau"])
    C9 = float(max(np.max(ta / be), np.max(al / ta)))
    if d != 3:
        notes.append(f"dimension factor {d} used in C1")
    return PaperConstants(float(C1), float(C2), float(C3), float(C4), float(C5), float(C6), float(C7),
                          float(C8), C9, float(T0), float(theta), source, notes)


# ---------------------------------------------------------------------------
# multiplier identity (d = 3)


@dataclass
class IdentityReport:
    residual_l2: float
    J_l2: float
    dAdt_l2: float
    relative_residual: float
    levels: int
    interior_cells: int
    spacing: float
    dt: float

    def as_dict(self):
        return asdict(self)


class TrajectoryRecorder:
    """Observer that stores cell pressures and cell-averaged velocities.

    Running time integrals use the trapezoid rule over the recorded levels.
    """

    def __init__(self, grid: g.LayeredGrid, layout, every: int = 1):
        self.grid, self.layout, self.every = grid, layout, every
        self.times, self.p, self.u = [], [], []

    def __call__(self, n, t, p, u):
        if n % self.every:
            return
        d = self.grid.dimension
        faces = self.layout.split_faces(u)
        self.times.append(t)
        self.p.append(p.reshape(self.grid.shape).copy())
        self.u.append(np.stack([cell_average(faces[a], a, d) for a in range(d)]))

    def arrays(self):
        t = np.array(self.times)
        order = np.argsort(t)
        return t[order], np.array(self.p)[order], np.array(self.u)[order]


def _identity_mask(grid, md=None):
    d = grid.dimension
    lay = np.where(grid.active, grid.cell_layer, -1)
    ok = grid.active.copy()
    for a in range(d):
        for s in (1, -1):
            nb = shift(lay, a, s, d, fill=-1)
            ok &= nb == lay
            # the cell-averaged velocity of the neighbour must use live faces only
            nb2 = shift(lay, a, 2 * s, d, fill=-1)
            ok &= nb2 == lay
    return ok


def multiplier_terms(t, p, u, u0, Ip, Iu, md: MultiplierData, a, b, grad_h, d):
    """``A``, ``B`` (vector) and ``J`` of the multiplier identity at one level."""
    uu = np.sum(u * u, axis=0)
    ugh = np.sum(u * grad_h, axis=0)
    A = t * (b * uu + a * p * p) - 2 * p * ugh + 2 * a * p * Ip - 2 * b * np.sum(u0 * Iu, axis=0)
    B = (-2 * a * b * t * p * u + a * p * p * grad_h - b * uu * grad_h + 2 * b * ugh * u
         - 2 * a * b * Ip * u)
    H = md.hessian_h
    lap = md.laplacian_h
    Huu = np.einsum("...ij,i...,j...->...", H, u, u)
    J = b * (lap - 1) * uu - 2 * b * Huu - a * (lap - d) * p * p
    return A, B, J


def _grad_h_cells(grid, md):
    d = grid.dimension
    X = grid.cell_centers
    out = []
    for a in range(d):
        gphi = (shift(md.phi, a, 1, d) - shift(md.phi, a, -1, d)) / (2 * grid.spacing)
        out.append(X[a] - md.x0[a] + md.delta0 * gphi)
    return np.stack(out)


def multiplier_identity_residual(solver: AcousticSolver, state0: AcousticField, T: float,
                                 md: MultiplierData, dt: float | None = None,
                                 require_3d: bool = True) -> IdentityReport:
    """Residual of ``dA/dt - div B - J = 0`` on interior cells over ``(0, T)``.

    Central differences in time and space; the running integrals follow
    the trapezoid rule.  Restricted to ``d = 3`` (the identity's constant
    ``3`` is the dimension) unless ``require_3d`` is off.
    """
    grid = solver.grid
    d = grid.dimension
    if require_3d and d != 3:
        raise DimensionError("the multiplier identity is checked in 3D only")
    if solver.system != "A":
        raise ValueError("the identity is written for system A")
    rec = TrajectoryRecorder(grid, solver.layout)
    res = solver.evolve(state0, T, dt=dt, record_traces=False, observers=(rec,))
    times, P, U = rec.arrays()
    h = res.dt
    n_lv = len(times)
    a_l, b_l = solver.coeffs.system("A")
    lay = np.where(grid.active, grid.cell_layer, 0)
    a = np.where(grid.active, a_l[lay], 0.0)
    b = np.where(grid.active, b_l[lay], 0.0)
    gh = _grad_h_cells(grid, md)
    mask = _identity_mask(grid, md)

    Ip = np.zeros_like(P)
    Iu = np.zeros_like(U)
    for n in range(1, n_lv):
        Ip[n] = Ip[n - 1] + 0.5 * h * (P[n] + P[n - 1])
        Iu[n] = Iu[n - 1] + 0.5 * h * (U[n] + U[n - 1])

    A = np.empty_like(P)
    Bv = np.empty_like(U)
    Jv = np.empty_like(P)
    for n in range(n_lv):
        A[n], Bv[n], Jv[n] = multiplier_terms(times[n], P[n], U[n], U[0], Ip[n], Iu[n], md, a, b, gh, d)

    dx = grid.spacing
    vol = grid.cell_volume
    r2 = j2 = a2 = 0.0
    for n in range(1, n_lv - 1):
        dA = (A[n + 1] - A[n - 1]) / (2 * h)
        divB = sum((shift(Bv[n][ax], ax, 1, d) - shift(Bv[n][ax], ax, -1, d)) / (2 * dx) for ax in range(d))
        R = dA - divB - Jv[n]
        r2 += h * vol * float(np.sum(R[mask] ** 2))
        j2 += h * vol * float(np.sum(Jv[n][mask] ** 2))
        a2 += h * vol * float(np.sum(dA[mask] ** 2))
    rl, jl, al = np.sqrt(r2), np.sqrt(j2), np.sqrt(a2)
    return IdentityReport(float(rl), float(jl), float(al), float(rl / al) if al > 0 else 0.0, n_lv,
                          int(mask.sum()), dx, h)


# ---------------------------------------------------------------------------
# interface lemma


@dataclass
class InterfaceFluxReport:
    """Per interface: max |LHS - RHS|, extreme RHS values and the sign verdict."""

    per_interface: dict
    sign_tol: float

    @property
    def empty(self) -> bool:
        return not self.per_interface

    @property
    def max_discrepancy(self) -> float:
        return max((v["max_discrepancy"] for v in self.per_interface.values()), default=0.0)

    @property
    def max_rhs(self) -> float:
        return max((v["max_rhs"] for v in self.per_interface.values()), default=0.0)

    @property
    def sign_ok(self) -> bool:
        return all(v["sign_ok"] for v in self.per_interface.values())


class InterfaceRecorder:
    """Observer collecting both sides of the interface lemma at each level.

    Values are oriented by the exterior normal of the outer layer on its
    inner boundary, so under nondecreasing coefficients the right-hand side
    is nonpositive.
    """

    def __init__(self, op, md: MultiplierData):
        self.op, self.md = op, md
        grid = op.grid
        self.grid = grid
        self.faces = grid.interface_faces
        self.dhdn = {k: md.dh_dn[k] for k in self.faces}
        x0 = np.asarray(md.x0)
        self.grad_h = {}
        for k, fs in self.faces.items():
            # grad h at face centres; the normal part carries the Phi contribution
            gv = fs.center - x0
            if md.delta0:
                for i in range(len(fs)):
                    ax = fs.axis[i]
                    gv[i, ax] = md.grad_h[ax][tuple(fs.index[i])]
            self.grad_h[k] = gv
        self.Ip = {k: np.zeros(len(fs)) for k, fs in self.faces.items()}
        self.last = None
        self.lhs = {k: [] for k in self.faces}
        self.rhs = {k: [] for k in self.faces}

    def _tangential(self, u, cells, fs):
        d = self.grid.dimension
        out = np.zeros((len(fs), d))
        if d == 1:
            return out
        faces = self.op.layout.split_faces(u)
        avg = [cell_average(faces[a], a, d) for a in range(d)]
        for a in range(d):
            vals = avg[a][tuple(cells.T)]
            out[:, a] = np.where(fs.axis != a, vals, 0.0)
        return out

    def __call__(self, n, t, p, u):
        tr = interface_traces(self.op, p, u)
        lay = self.op.layout
        for k, fs in self.faces.items():
            v = tr[k]
            if self.last is not None:
                self.Ip[k] += 0.5 * (t - self.last) * (v["w"] + self._w_prev[k])
            eta = fs.normal
            gh = self.grad_h[k]
            hn = self.dhdn[k]
            ghn = np.einsum("ij,ij->i", gh, eta)
            sides = {}
            for side, cell in (("inner", None), ("outer", None)):
                a, b = v[f"a_{side}"], v[f"b_{side}"]
                pk, un = v[f"p_{side}"], v[f"un_{side}"]
                cells = np.array(np.unravel_index(v[f"{side}_cell"], lay.cell_shape)).T
                ut = self._tangential(u, cells, fs)
                uu = un * un + np.sum(ut * ut, axis=1)
                ugh = un * ghn + np.sum(ut * gh, axis=1)
                Ip = self.Ip[k] / a
                Bn = (-2 * a * b * t * pk * un + a * pk * pk * hn - b * uu * hn + 2 * b * ugh * un
                      - 2 * a * b * Ip * un)
                sides[side] = (Bn, a, b, pk, un, ut)
            lhs = sides["inner"][0] - sides["outer"][0]
            _, a0, b0, _, _, _ = sides["inner"]
            _, a1, b1, p1, un1, ut1 = sides["outer"]
            cross2 = np.sum(ut1 * ut1, axis=1)   # |u x eta|^2 for a unit axis normal
            rhs = -hn * ((a0 - a1) / a0 * a1 * p1 ** 2 + (b0 - b1) * b1 / b0 * un1 ** 2 + (b0 - b1) * cross2)
            # report against the exterior normal of layer k, which points into layer k-1;
            # both sides change sign together
            self.lhs[k].append(-lhs)
            self.rhs[k].append(-rhs)
        self._w_prev = {k: tr[k]["w"].copy() for k in self.faces}
        self.last = t

    def report(self, sign_tol: float = 1e-10) -> InterfaceFluxReport:
        out = {}
        for k in self.faces:
            if not self.lhs[k]:
                continue
            L = np.array(self.lhs[k])
            R = np.array(self.rhs[k])
            scale = max(1.0, float(np.max(np.abs(L))), float(np.max(np.abs(R))))
            out[k] = dict(max_discrepancy=float(np.max(np.abs(L - R))), relative_discrepancy=float(
                np.max(np.abs(L - R)) / scale), max_rhs=float(R.max()), min_rhs=float(R.min()),
                max_lhs=float(L.max()), samples=int(R.size), sign_ok=bool(R.max() <= sign_tol))
        return InterfaceFluxReport(out, sign_tol)


def interface_flux_check(solver: AcousticSolver, state0: AcousticField, T: float, md: MultiplierData,
                         sign_tol: float = 1e-10, dt: float | None = None) -> InterfaceFluxReport:
    """Evaluate both sides of the interface lemma along a homogeneous evolution.

    The sign verdict tests ``RHS <= sign_tol``.
    """
    rec = InterfaceRecorder(solver.op, md)
    solver.evolve(state0, T, dt=dt, record_traces=False, observers=(rec,))
    return rec.report(sign_tol)


# ---------------------------------------------------------------------------
# export


def export_quotient_csv(path, rep: ObservabilityReport, stride: int = 1):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["T", "quotient_min"])
        for t, q in zip(rep.times[::stride], rep.quotient_curve[::stride]):
            w.writerow([repr(float(t)), repr(float(q))])
