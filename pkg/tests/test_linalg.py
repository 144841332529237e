import numpy as np
from hypothesis import given, strategies as st

from acoustic_hum.linalg import conjugate_gradient, smallest_nonzero_eigenvalue


def spd(n, seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((n, n))
    return M @ M.T + n * np.eye(n)


@given(st.integers(2, 30), st.integers(0, 1000))
def test_cg_matches_dense_solve(n, seed):
    A = spd(n, seed)
    b = np.random.default_rng(seed + 1).standard_normal(n)
    res = conjugate_gradient(lambda x: A @ x, b, tol=1e-12, max_iter=10 * n)
    assert res.converged
    np.testing.assert_allclose(res.x, np.linalg.solve(A, b), rtol=1e-8, atol=1e-10)
    # the CG objective decreases monotonically
    assert all(b2 <= a2 + 1e-12 * abs(a2) for a2, b2 in zip(res.objective, res.objective[1:]))


def test_zero_rhs():
    res = conjugate_gradient(lambda x: x, np.zeros(4))
    assert res.converged and res.iterations == 0 and not np.any(res.x)


def test_singular_system_with_projector():
    n = 20
    L = 2 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)
    L[0, 0] = L[-1, -1] = 1          # Neumann Laplacian, kernel = constants
    proj = lambda x: x - x.mean()
    b = proj(np.random.default_rng(0).standard_normal(n))
    res = conjugate_gradient(lambda x: L @ x, b, tol=1e-12, max_iter=200, project=proj)
    assert res.converged
    np.testing.assert_allclose(L @ res.x, b, atol=1e-10)
    lam = smallest_nonzero_eigenvalue(lambda x: L @ x, lambda y: np.linalg.lstsq(L, y, rcond=None)[0], n,
                                      project=proj, rtol=1e-12, iters=500)
    assert abs(lam - 2 * (1 - np.cos(np.pi / n))) < 1e-8
