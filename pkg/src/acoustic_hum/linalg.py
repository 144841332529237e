"""Conjugate gradients over arbitrary inner-product spaces.

The operator, the vectors and the inner product are supplied by the caller,
so the same routine serves the cell-array Neumann problem and the HUM
Gramian acting on pairs of acoustic states.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass
class CGResult:
    x: object
    iterations: int
    converged: bool
    residuals: list = field(default_factory=list)  # relative residual norms
    objective: list = field(default_factory=list)  # 0.5<Ax,x> - <b,x>


def conjugate_gradient(apply: Callable, b, inner: Callable = None, tol: float = 1e-10,
                       max_iter: int = 1000, project: Callable = None, x0=None,
                       callback: Callable = None) -> CGResult:
    """Solve ``A x = b`` for self-adjoint positive semidefinite ``A``.

    Vectors only need ``+``, ``-`` and multiplication by scalars.  ``project``
    (if given) is applied to the residual every iteration; it must be the
    orthogonal projector onto the range of ``A`` for singular systems.
    Stops on ``||r|| <= tol ||b||``.
    """
    if inner is None:
        inner = lambda a, c: float(np.vdot(a, c))
    if project is not None:
        b = project(b)
    bnorm = np.sqrt(max(inner(b, b), 0.0))
    if x0 is None:
        x = b * 0.0
        r = b
    else:
        x = x0
        r = b - apply(x)
        if project is not None:
            r = project(r)
    res = CGResult(x, 0, False)
    if bnorm == 0.0:
        res.converged = True
        res.residuals.append(0.0)
        res.objective.append(0.0)
        return res

    rr = inner(r, r)
    res.residuals.append(np.sqrt(rr) / bnorm)
    res.objective.append(-0.5 * inner(b, x) - 0.5 * inner(r, x))
    if res.residuals[-1] <= tol:
        res.converged = True
        return res
    p = r
    for it in range(1, max_iter + 1):
        Ap = apply(p)
        pAp = inner(p, Ap)
        if not pAp > 0:
            # direction in the kernel: nothing more to gain
            break
        step = rr / pAp
        x = x + p * step
        r = r - Ap * step
        if project is not None:
            r = project(r)
        rr_new = inner(r, r)
        res.iterations = it
        res.x = x
        res.residuals.append(np.sqrt(rr_new) / bnorm)
        # for CG iterates <Ax, x> = <b, x> - <r, x>
        res.objective.append(-0.5 * inner(b, x) - 0.5 * inner(r, x))
        if callback is not None:
            callback(it, x, res.residuals[-1])
        if res.residuals[-1] <= tol:
            res.converged = True
            break
        p = r + p * (rr_new / rr)
        rr = rr_new
    res.x = x
    return res


def smallest_nonzero_eigenvalue(apply: Callable, solve: Callable, n_or_x0, inner: Callable = None,
                                project: Callable = None, iters: int = 200, rtol: float = 1e-8,
                                seed: int = 0) -> float:
    """Inverse power iteration for the smallest eigenvalue on range(``project``).

    ``solve(b)`` must return ``A^{-1} b`` on that range.
    """
    if inner is None:
        inner = lambda a, c: float(np.vdot(a, c))
    if np.isscalar(n_or_x0):
        x = np.random.default_rng(seed).standard_normal(int(n_or_x0))
    else:
        x = np.array(n_or_x0, dtype=float)
    if project is not None:
        x = project(x)
    x = x / np.sqrt(inner(x, x))
    lam = np.inf
    for _ in range(iters):
        y = solve(x)
        if project is not None:
            y = project(y)
        x = y / np.sqrt(inner(y, y))
        new = inner(x, apply(x))
        if abs(new - lam) <= rtol * abs(new):
            lam = new
            break
        lam = new
    return float(lam)
