import numpy as np
import pytest

from conftest import random_control, random_system, rank_deficient_pair
from greedy_id.greedy import gr_run, w_hat_from_controls
from greedy_id.harness import BAD_ALPHA_TRUE, EXAMPLE_B_TRUE, bad_example_system, good_example_system
from greedy_id.lin_system import AdmissibleSet, Control, LinearSystem, TimeGrid, w_matrix
from greedy_id.observability import analyze, build_observability_basis
from greedy_id.ogr import ogr_run
from greedy_id.online import Measurements, certify_block_structure, identify, simulate_measurements


def test_zero_controls_give_drift_output(rng):
    sys = random_system(rng, 3, 2, 2)
    meas = simulate_measurements(sys, sys.candidates[0], [Control.zeros(sys.grid, 2)] * 2)
    for y in meas.outputs:
        np.testing.assert_allclose(y, sys.drift_output, rtol=1e-12)


def test_bad_example_second_output_is_zero(rng):
    sys = bad_example_system()
    meas = simulate_measurements(sys, EXAMPLE_B_TRUE, [random_control(rng, sys.grid, 2) for _ in range(3)])
    assert not meas.outputs[:, 1].any()


def test_measurements_superpose(rng):
    sys = random_system(rng, 3, 2, 1, phi0=False)
    B = rng.standard_normal((3, 2))
    e1, e2 = random_control(rng, sys.grid, 2), random_control(rng, sys.grid, 2)
    y = simulate_measurements(sys, B, [e1, e2, e1.scaled(2.0) + e2.scaled(-3.0)]).outputs
    np.testing.assert_allclose(y[2], 2 * y[0] - 3 * y[1], rtol=1e-10, atol=1e-12)


def test_fully_observable_exact_recovery(rng):
    sys = random_system(rng, 3, 2, 6)
    alpha_true = rng.standard_normal(6)
    res = gr_run(sys, AdmissibleSet())
    meas = simulate_measurements(sys, sys.combine(alpha_true), res.controls)
    ident = identify(sys, res.selected, res.controls, meas)
    assert ident.certified_unique and ident.w_min_eig > 0 and ident.identifiable.all()
    assert np.max(np.abs(ident.alpha - alpha_true)) <= 1e-6 * np.max(np.abs(alpha_true))
    assert ident.residual <= 1e-10
    # every per-control mismatch vanishes
    d = ident.alpha - alpha_true
    for _ in range(50):
        assert d @ w_matrix(sys, random_control(rng, sys.grid, 2)) @ d <= 1e-8


def test_good_example_certified():
    sys = good_example_system()
    res = ogr_run(sys)
    meas = simulate_measurements(sys, EXAMPLE_B_TRUE, res.controls)
    ident = identify(sys, res.selected, res.controls, meas)
    np.testing.assert_allclose(ident.alpha, [1.0, 1.0], atol=1e-8)
    np.testing.assert_allclose(sys.combine(ident.alpha, res.selected), [[1, 1], [0, 0]], atol=1e-8)
    assert ident.certified_unique and ident.apriori_error_note is None


def test_bad_example_inconclusive(rng):
    sys = bad_example_system()
    res = gr_run(sys, AdmissibleSet())
    meas = simulate_measurements(sys, sys.combine(BAD_ALPHA_TRUE), res.controls)
    ident = identify(sys, res.selected, res.controls, meas)
    assert not ident.certified_unique and ident.w_rank == 2
    assert ident.alpha[0] + ident.alpha[1] == pytest.approx(1.0, abs=1e-8)
    assert ident.alpha[2] + ident.alpha[3] == pytest.approx(1.0, abs=1e-8)
    assert not ident.identifiable.any()
    assert "not identifiable" in ident.apriori_error_note
    assert ident.residual <= 1e-20


def test_partial_recovery_non_fully_observable(rng):
    N, M, R = 4, 2, 2
    A, C = rank_deficient_pair(rng, N, R)
    rep = analyze(A, C)
    basis = build_observability_basis(rep, M)
    sys = LinearSystem(A, C, basis, rng.standard_normal(N), TimeGrid(1.0, 20))
    alpha_true = rng.standard_normal(N * M)
    res = gr_run(sys, AdmissibleSet())
    meas = simulate_measurements(sys, sys.combine(alpha_true), res.controls)
    ident = identify(sys, res.selected, res.controls, meas)
    RM = R * M
    np.testing.assert_allclose(ident.alpha[:RM], alpha_true[:RM], atol=1e-6)
    assert ident.identifiable[:RM].all() and not ident.identifiable[RM:].any()
    assert not ident.certified_unique and ident.w_rank == RM
    assert certify_block_structure(w_hat_from_controls(sys, res.controls), RM)
    assert ident.residual <= 1e-10


def test_certify_block_structure():
    W = np.zeros((4, 4))
    W[:2, :2] = np.eye(2)
    assert certify_block_structure(W, 2)
    assert not certify_block_structure(np.eye(4), 2)
    assert not certify_block_structure(W, 3)
    with pytest.raises(ValueError):
        certify_block_structure(W, 5)


def test_identify_validates_lengths(rng):
    sys = random_system(rng, 2, 1, 2)
    with pytest.raises(ValueError):
        identify(sys, [0, 1], [random_control(rng, sys.grid, 1)], Measurements(np.zeros((2, 2))))
    with pytest.raises(ValueError):
        identify(sys, [0, 1], [random_control(rng, sys.grid, 1)], Measurements(np.zeros((1, 3))))
