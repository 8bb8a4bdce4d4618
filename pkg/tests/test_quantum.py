import numpy as np
import pytest

from greedy_id.harness import REFERENCE_H, REFERENCE_MU, canonical_symmetric_basis, random_symmetric, reference_system
from greedy_id.lin_system import Control, TimeGrid
from greedy_id.quantum import (
    MonotonicConfig,
    QuantumGreedyConfig,
    QuantumSystem,
    default_initial_control,
    fit_multistart,
    gr_quantum_run,
    identify_quantum,
    monotonic_maximize,
    ogr_quantum_run,
    phi,
    phi_and_alpha_gradient,
    phi_and_control_gradient,
    phi_batch,
    propagate_schrodinger,
    simulate_quantum_measurements,
)
from greedy_id.quantum._kernels import jacobi_eigh
from greedy_id.quantum.fitting import objective
from greedy_id.quantum.system import phi_and_alpha_gradient_reference
from greedy_id.rng import stream

E1, E3 = np.eye(3)[0], np.eye(3)[2]


def small_system(n_steps=200, candidates=None, horizon=40 * np.pi):
    cands = canonical_symmetric_basis(3) if candidates is None else candidates
    return reference_system(cands, TimeGrid(horizon, n_steps))


def random_qsys(rng, N=3, n_steps=50, T=5.0):
    H = random_symmetric(rng, 1, N)[0]
    psi0 = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    psi1 = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    return QuantumSystem(H, random_symmetric(rng, 2, N), psi0 / np.linalg.norm(psi0),
                         psi1 / np.linalg.norm(psi1), TimeGrid(T, n_steps))


def rand_control(rng, grid, scale=0.3):
    return Control(grid, scale * rng.standard_normal(grid.n_steps))


# -- propagation -------------------------------------------------------------

def test_free_evolution_is_phase():
    q = small_system(20)
    psi = propagate_schrodinger(q, REFERENCE_MU, Control.zeros(q.grid))
    np.testing.assert_allclose(psi, np.exp(-1j * q.grid.t_final * 0.01) * E1, atol=1e-13)
    assert phi(q, REFERENCE_MU, Control.zeros(q.grid)) == pytest.approx(0.0, abs=1e-14)


def test_unitarity_and_phi_bound(rng):
    q = random_qsys(rng)
    for _ in range(10):
        mu = random_symmetric(rng, 1, 3)[0] * 3
        eps = rand_control(rng, q.grid, 2.0)
        assert np.linalg.norm(propagate_schrodinger(q, mu, eps)) == pytest.approx(1.0, abs=1e-12)
        assert abs(phi(q, mu, eps)) <= 1 + 1e-10


def test_zero_dipole_decouples_control(rng):
    q = random_qsys(rng)
    base = phi(q, np.zeros((3, 3)), Control.zeros(q.grid))
    for _ in range(3):
        assert phi(q, np.zeros((3, 3)), rand_control(rng, q.grid)) == pytest.approx(base, abs=1e-13)


def test_refined_grid_agrees(rng):
    q = random_qsys(rng, n_steps=40)
    fine = QuantumSystem(q.H, q.candidates, q.psi0, q.psi1, TimeGrid(q.grid.t_final, 400))
    mu = q.candidates[0]
    for _ in range(3):
        eps = rand_control(rng, q.grid)
        refined = Control(fine.grid, np.repeat(eps.values, 10, axis=1))
        assert abs(phi(q, mu, eps) - phi(fine, mu, refined)) <= 1e-8


def test_phi_batch_matches_single(rng):
    q = random_qsys(rng)
    ctrls = [rand_control(rng, q.grid) for _ in range(3)]
    batch = phi_batch(q, q.candidates[1], np.stack([c.values[0] for c in ctrls]))
    np.testing.assert_allclose(batch, [phi(q, q.candidates[1], c) for c in ctrls], atol=1e-13)


def test_rejects_bad_inputs(rng):
    q = random_qsys(rng)
    with pytest.raises(ValueError):
        propagate_schrodinger(q, np.arange(9.0).reshape(3, 3), Control.zeros(q.grid))
    with pytest.raises(ValueError):
        propagate_schrodinger(q, q.candidates[0], Control.zeros(q.grid, 2))
    with pytest.raises(ValueError):
        QuantumSystem(REFERENCE_H, REFERENCE_MU, 2 * E1, E3, q.grid)


@pytest.mark.parametrize("N", [2, 3, 5])
def test_jacobi_matches_lapack(rng, N):
    for _ in range(5):
        G = random_symmetric(rng, 1, N)[0]
        w, V = np.empty(N), np.empty((N, N))
        jacobi_eigh(G, w, V)
        np.testing.assert_allclose(np.sort(w), np.linalg.eigvalsh(G), atol=1e-13)
        np.testing.assert_allclose(V @ np.diag(w) @ V.T, G, atol=1e-13)
        np.testing.assert_allclose(V.T @ V, np.eye(N), atol=1e-13)


# -- gradients ---------------------------------------------------------------

def test_compiled_gradient_matches_reference(rng):
    q = random_qsys(rng)
    vals = rng.standard_normal((3, q.grid.n_steps))
    alpha = rng.standard_normal(2)
    p1, j1 = phi_and_alpha_gradient(q, q.candidates, alpha, vals)
    p2, j2 = phi_and_alpha_gradient_reference(q, q.candidates, alpha, vals)
    np.testing.assert_allclose(p1, p2, atol=1e-12)
    np.testing.assert_allclose(j1, j2, atol=1e-11)


def test_alpha_gradient_finite_differences():
    q = small_system(100)
    values = np.stack([default_initial_control(q, s, 0.5).values[0] for s in range(4)])
    h = 1e-6
    for i in range(10):
        alpha = stream(7, i).uniform(-1, 1, size=6)
        _, jac = phi_and_alpha_gradient(q, q.candidates, alpha, values)
        fd = np.empty_like(jac)
        for j in range(6):
            d = np.zeros(6)
            d[j] = h
            fd[:, j] = (phi_and_alpha_gradient(q, q.candidates, alpha + d, values)[0]
                        - phi_and_alpha_gradient(q, q.candidates, alpha - d, values)[0]) / (2 * h)
        assert np.linalg.norm(jac - fd) <= 1e-5 * np.linalg.norm(jac)


def test_objective_gradient_finite_differences(rng):
    q = small_system(100)
    values = np.stack([default_initial_control(q, s, 0.5).values[0] for s in range(3)])
    targets = phi_batch(q, REFERENCE_MU, values)
    fun = objective(q, q.candidates[:2], values, targets)
    h = 1e-6
    for _ in range(5):
        a = rng.uniform(-2, 2, size=2)
        f, g = fun(a)
        fd = np.array([(fun(a + h * e)[0] - fun(a - h * e)[0]) / (2 * h) for e in np.eye(2)])
        assert np.linalg.norm(g - fd) <= 1e-5 * np.linalg.norm(g)


def test_control_gradient_finite_differences(rng):
    q = random_qsys(rng, n_steps=20)
    vals = 0.3 * rng.standard_normal(20)
    _, g = phi_and_control_gradient(q, q.candidates[0], vals)
    h = 1e-6
    for k in (0, 7, 19):
        d = np.zeros(20)
        d[k] = h
        fd = (phi_and_control_gradient(q, q.candidates[0], vals + d)[0]
              - phi_and_control_gradient(q, q.candidates[0], vals - d)[0]) / (2 * h)
        assert abs(g[k] - fd) <= 1e-5 * np.abs(g).max()


# -- monotonic scheme ---------------------------------------------------------

@pytest.mark.parametrize("penalty", [0.0, None])
def test_monotonic_is_nondecreasing(penalty):
    q = small_system(400)
    res = monotonic_maximize(q, REFERENCE_MU, np.zeros((3, 3)), MonotonicConfig(penalty=penalty, max_sweeps=25))
    h = np.array(res.history)
    assert np.all(np.diff(h) >= -1e-12)
    assert h[-1] > h[0]
    assert res.sweeps == len(h) - 1


def test_monotonic_random_pairs(rng):
    q = random_qsys(rng, n_steps=60, T=10.0)
    for s in range(3):
        mu_a, mu_b = random_symmetric(stream(3, s), 2, 3)
        res = monotonic_maximize(q, mu_a, mu_b, MonotonicConfig(penalty=0.0, max_sweeps=15, seed=s))
        assert np.all(np.diff(res.history) >= -1e-12)


def test_monotonic_equal_operators_returns_zero():
    q = small_system(50)
    res = monotonic_maximize(q, REFERENCE_MU, REFERENCE_MU, MonotonicConfig(penalty=0.1, max_sweeps=5))
    assert res.value == pytest.approx(0.0, abs=1e-15)
    assert not res.control.values.any()
    with pytest.raises(ValueError):
        MonotonicConfig(max_sweeps=0)


# -- fitting / identification -------------------------------------------------

def test_fit_with_no_controls_is_trivial():
    q = small_system(20)
    fit = fit_multistart(q, 1, [0], [])
    assert fit.residual == 0.0


def test_fit_exactly_representable_target():
    q = small_system(100)
    ctrl = default_initial_control(q, 1, 0.5)
    fit = fit_multistart(q, 4, [4], [ctrl], n_starts=2)
    np.testing.assert_allclose(fit.alpha, [1.0], atol=1e-8)
    assert fit.residual <= 1e-20
    with pytest.raises(ValueError):
        fit_multistart(q, 4, [4], [ctrl], n_starts=0)


def test_identify_from_truth():
    q = small_system(200)
    ctrls = [default_initial_control(q, s, 0.5) for s in range(6)]
    alpha_true = np.linalg.lstsq(q.candidates.reshape(6, -1).T, REFERENCE_MU.ravel(), rcond=None)[0]
    meas = simulate_quantum_measurements(q, REFERENCE_MU, ctrls)
    fit = identify_quantum(q, list(range(6)), ctrls, meas, init=alpha_true)
    np.testing.assert_allclose(fit.alpha, alpha_true, atol=1e-10)
    assert fit.residual <= 1e-12
    with pytest.raises(ValueError):
        identify_quantum(q, list(range(6)), ctrls, meas[:3])


# -- GR / OGR ------------------------------------------------------------------

FAST = QuantumGreedyConfig(MonotonicConfig(max_sweeps=10), n_starts=2)


def test_gr_single_candidate():
    res = gr_quantum_run(small_system(100, REFERENCE_MU[None]), FAST)
    assert len(res.controls) == 1 and res.selected == [0]


def test_gr_canonical_basis_and_determinism():
    q = small_system(200)
    a, b = gr_quantum_run(q, FAST), gr_quantum_run(q, FAST)
    assert len(a.controls) == 6 and a.selected == list(range(6))
    for x, y in zip(a.controls, b.controls):
        np.testing.assert_array_equal(x.values, y.values)
    assert a.discriminatory_values == b.discriminatory_values


def test_ogr_unobservable_candidate_stops_at_initialization():
    res = ogr_quantum_run(small_system(100, np.diag([1.0, 2.0, 3.0])[None]), FAST)
    assert res.selected == [] and res.stop_reason == "below_tolerance"


def test_ogr_proportional_candidates():
    mu = canonical_symmetric_basis(3)[4]
    res = ogr_quantum_run(small_system(200, np.stack([mu, 2 * mu])), FAST)
    assert len(res.selected) == 1 and len(res.controls) == 1
    assert res.stop_reason == "below_tolerance"


def test_ogr_enriched_set_selects_at_most_six_and_parallel_matches():
    q = small_system(300, np.concatenate([canonical_symmetric_basis(3), random_symmetric(stream(0, 1), 6, 3)]))
    serial = ogr_quantum_run(q, FAST)
    assert 1 <= len(serial.selected) <= 6
    assert len(set(serial.selected)) == len(serial.selected)
    par = ogr_quantum_run(q, QuantumGreedyConfig(FAST.monotonic, n_starts=2, parallel=True, max_workers=4))
    assert par.selected == serial.selected
    for x, y in zip(serial.controls, par.controls):
        np.testing.assert_array_equal(x.values, y.values)
