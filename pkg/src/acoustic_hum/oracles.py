"""Closed-form reference measurements on 1D configurations.

Used by the tests and the experiment scripts: reflection of a plane pulse
at an interface and the frequency of a standing mode.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import grid as g
from .coefficients import MediumCoefficients
from .solver import AcousticField, AcousticSolver


def analytic_reflection(alpha, beta) -> float:
    """Reflection coefficient of ``alpha p`` for a wave hitting the first interface from layer 0."""
    c0, c1 = np.sqrt(alpha[0] * beta[0]), np.sqrt(alpha[1] * beta[1])
    z = c1 * alpha[0] / alpha[1]
    return float((c0 - z) / (c0 + z))


@dataclass
class ReflectionMeasurement:
    measured: float
    analytic: float
    incident_peak: float
    reflected_peak: float
    t: float

    @property
    def relative_error(self) -> float:
        return abs(self.measured - self.analytic) / abs(self.analytic)


def measure_reflection(n_cells: int = 2000, alpha=(1.0, 1.0), beta=(1.0, 4.0), center: float = 0.2,
                       radius: float = 0.08, cfl: float = 0.9) -> ReflectionMeasurement:
    """Launch a right-going pulse in layer 0 of ``[0, 0.5, 1]`` and compare peaks.

    The pulse ``p = f(x - c0 t)``, ``u = (alpha0 / c0) f`` hits ``x = 0.5``;
    the reflected ``alpha p`` peak is read once it has cleared the interface
    and before anything returns from either end.
    """
    coeffs = MediumCoefficients(alpha, beta, alpha, beta)
    grid = g.build_layered_grid(g.GeometrySpec(1, (0.0, 0.5, 1.0), 1.0 / n_cells))
    c0 = np.sqrt(alpha[0] * beta[0])
    c1 = np.sqrt(alpha[1] * beta[1])

    def f(x):
        s = (x - center) / radius
        return np.where(np.abs(s) < 1, (1 - np.minimum(s * s, 1)) ** 4, 0.0)

    st = AcousticField.zeros(grid, "A")
    xc = grid.cell_centers[0]
    xf = grid.face_centers(0)[0]
    st.p = f(xc)
    st.u = ((alpha[0] / c0) * np.where(grid.face_kind[0] == g.S0, 0.0, f(xf)),)
    # reflected pulse centred at 0.5 - (c0 t - (0.5 - center)); keep it clear of both ends
    t_hit = (0.5 - center) / c0
    t = t_hit + min(1.5 * radius / c0, 0.9 * (0.5 - radius - center) / c0,
                    0.9 * (0.5 - 2 * radius * c1 / c0) / c1)
    res = AcousticSolver(grid, coeffs, "A", cfl).evolve(st, t, record_traces=False)
    w0 = alpha[0] * st.p
    w = np.where(grid.cell_layer == 0, coeffs.alpha[0] * res.state.p, 0.0)
    inc = float(w0[np.argmax(np.abs(w0))])
    ref = float(w[np.argmax(np.abs(w))])
    return ReflectionMeasurement(ref / inc, analytic_reflection(alpha, beta), inc, ref, res.state.t)


@dataclass
class EigenMeasurement:
    measured: float
    analytic: float
    crossings: int

    @property
    def relative_error(self) -> float:
        return abs(self.measured - self.analytic) / self.analytic


def measure_eigenfrequency(n_cells: int = 400, n: int = 1, periods: float = 4.0,
                           cfl: float = 0.9) -> EigenMeasurement:
    """Frequency of ``p0 = sin((2n+1) pi x / 2)`` on ``[0, 1]`` (``p(0) = 0``, ``u(1) = 0``).

    The projection of ``p(t)`` on ``p0`` oscillates like ``cos(omega t)``;
    consecutive zero crossings are half a period apart.
    """
    coeffs = MediumCoefficients.uniform(1)
    grid = g.build_layered_grid(g.GeometrySpec(1, (0.0, 1.0), 1.0 / n_cells))
    k = (2 * n + 1) * np.pi / 2
    st = AcousticField.zeros(grid, "A")
    st.p = np.sin(k * grid.cell_centers[0])
    proj, times = [], []
    p0 = st.p.ravel().copy()

    def obs(i, t, p, u):
        proj.append(float(p @ p0))
        times.append(t)

    AcousticSolver(grid, coeffs, "A", cfl).evolve(st, periods * 2 * np.pi / k, record_traces=False,
                                                  observers=(obs,))
    c, t = np.array(proj), np.array(times)
    idx = np.flatnonzero(np.sign(c[:-1]) * np.sign(c[1:]) < 0)
    zc = t[idx] - c[idx] * (t[idx + 1] - t[idx]) / (c[idx + 1] - c[idx])
    if len(zc) < 2:
        raise RuntimeError("too few zero crossings to estimate the frequency")
    omega = np.pi * (len(zc) - 1) / (zc[-1] - zc[0])
    return EigenMeasurement(float(omega), float(k), len(zc))
