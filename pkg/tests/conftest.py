import numpy as np
import pytest

from greedy_id.lin_system import Control, LinearSystem, TimeGrid


def random_control(rng, grid, n_channels, scale=1.0):
    return Control(grid, scale * rng.standard_normal((n_channels, grid.n_steps)))


def random_system(rng, N, M, K, P=None, grid=None, phi0=True):
    P = N if P is None else P
    A = rng.standard_normal((N, N)) / np.sqrt(N)
    C = rng.standard_normal((P, N))
    cands = rng.standard_normal((K, N, M))
    x0 = rng.standard_normal(N) if phi0 else np.zeros(N)
    return LinearSystem(A, C, cands, x0, grid or TimeGrid(1.0, 20))


def rk4_propagate(A, B, values, phi0, t_final, substeps):
    """Fixed-step RK4 on the piecewise-constant input, ``substeps`` per control cell."""
    n = values.shape[1]
    h = t_final / n / substeps
    x = np.array(phi0, dtype=float)
    for k in range(n):
        u = B @ values[:, k]
        f = lambda y: A @ y + u
        for _ in range(substeps):
            k1 = f(x)
            k2 = f(x + 0.5 * h * k1)
            k3 = f(x + 0.5 * h * k2)
            k4 = f(x + h * k3)
            x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return x


def rank_deficient_pair(rng, N, R, P=2):
    """``(A, C)`` whose unobservable subspace has dimension ``N - R`` by construction."""
    Q, _ = np.linalg.qr(rng.standard_normal((N, N)))
    A11 = rng.standard_normal((R, R)) / np.sqrt(R)
    A21 = rng.standard_normal((N - R, R))
    A22 = rng.standard_normal((N - R, N - R))
    Ab = np.block([[A11, np.zeros((R, N - R))], [A21, A22]])
    Cb = np.hstack([rng.standard_normal((P, R)), np.zeros((P, N - R))])
    return Q @ Ab @ Q.T, Cb @ Q.T


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
