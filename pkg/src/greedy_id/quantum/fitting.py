"""Multi-start quasi-Newton least squares on the complex observable.

Objective ``F(alpha) = sum_m |y_m - phi(mu(alpha), eps^m)|^2`` with exact
adjoint gradient ``-2 Re sum_m conj(r_m) d phi_m / d alpha``. Local solves use
BFGS with a Wolfe line search.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import minimize

from ..lin_system import Control
from .system import QuantumSystem, _control_values, phi_and_alpha_gradient, phi_batch

EXACT_RESIDUAL = 1e-20
GTOL = 1e-10
MAX_ITER = 400


class FitResult(NamedTuple):
    alpha: np.ndarray
    residual: float


def _stack(qsys: QuantumSystem, controls: Sequence[Control]) -> np.ndarray:
    if not controls:
        return np.zeros((0, qsys.grid.n_steps))
    return np.stack([_control_values(qsys, eps) for eps in controls])


def objective(qsys: QuantumSystem, basis, values, targets):
    """Returns a ``alpha -> (F, grad F)`` closure."""
    basis = np.asarray(basis, dtype=float)
    targets = np.asarray(targets, dtype=complex)

    def fun(alpha):
        p, jac = phi_and_alpha_gradient(qsys, basis, alpha, values)
        r = targets - p
        return float(np.sum(np.abs(r) ** 2)), -2.0 * np.real(r.conj() @ jac)

    return fun


def least_squares(qsys: QuantumSystem, basis, values, targets, starts,
                  parallel: bool = False, max_workers: int | None = None) -> FitResult:
    """Best local minimum over ``starts``; ties keep the earliest start.

    Stops early once a start reaches a residual below ``EXACT_RESIDUAL``,
    which is a global minimum.
    """
    basis = np.asarray(basis, dtype=float)
    k = len(basis)
    targets = np.asarray(targets, dtype=complex)
    if len(targets) == 0:
        return FitResult(np.zeros(k), 0.0)
    if k == 0:
        p = phi_batch(qsys, np.zeros_like(qsys.H), values)
        return FitResult(np.zeros(0), float(np.sum(np.abs(targets - p) ** 2)))
    fun = objective(qsys, basis, values, targets)

    def local(x0):
        res = minimize(fun, np.asarray(x0, dtype=float), jac=True, method="BFGS",
                       options={"gtol": GTOL, "maxiter": MAX_ITER})
        return FitResult(res.x, float(res.fun))

    if parallel and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(local, starts))
    else:
        results = []
        for x0 in starts:
            results.append(local(x0))
            if results[-1].residual <= EXACT_RESIDUAL:
                break
    # cut at the first exact hit so both paths pick the same start
    hits = [i for i, r in enumerate(results) if r.residual <= EXACT_RESIDUAL]
    results = results[: hits[0] + 1] if hits else results
    best = min(range(len(results)), key=lambda i: (results[i].residual, i))
    return results[best]


def projection_start(qsys: QuantumSystem, target: int, selected: Sequence[int]) -> np.ndarray:
    """Frobenius projection coefficients of ``mu_target`` on the selected span."""
    flat = qsys.candidates[list(selected)].reshape(len(selected), -1).T
    return np.linalg.lstsq(flat, qsys.candidates[target].ravel(), rcond=None)[0]


def fit_multistart(
    qsys: QuantumSystem,
    target: int,
    selected: Sequence[int],
    controls: Sequence[Control],
    n_starts: int = 10,
    box_radius: float = 1.0,
    rng: np.random.Generator | None = None,
    parallel: bool = False,
) -> FitResult:
    """Fitting step: coefficients making ``mu_target`` look like ``mu(alpha)``.

    Random starts are uniform in ``[-box_radius, box_radius]^k``. One extra
    start at the Frobenius projection of ``mu_target`` is tried first, so a
    target inside the selected span is matched exactly.
    """
    if n_starts < 1:
        raise ValueError("n_starts must be >= 1")
    selected = list(selected)
    values = _stack(qsys, controls)
    targets = phi_batch(qsys, qsys.candidates[target], values) if len(values) else np.zeros(0, complex)
    rng = rng if rng is not None else np.random.default_rng(0)
    k = len(selected)
    starts = [projection_start(qsys, target, selected)] if k else []
    starts += list(rng.uniform(-box_radius, box_radius, size=(n_starts, k)))
    return least_squares(qsys, qsys.candidates[selected], values, targets, starts, parallel)


def simulate_quantum_measurements(qsys: QuantumSystem, mu_true, controls: Sequence[Control]) -> np.ndarray:
    """Noise-free ``phi(mu_true, eps^m)`` for every control."""
    values = _stack(qsys, controls)
    if not len(values):
        return np.zeros(0, complex)
    return phi_batch(qsys, mu_true, values)


def identify_quantum(
    qsys: QuantumSystem,
    selected: Sequence[int],
    controls: Sequence[Control],
    measurements,
    n_starts: int = 10,
    box_radius: float = 1.0,
    rng: np.random.Generator | None = None,
    init=None,
) -> FitResult:
    """Online step: coefficients of ``mu(alpha)`` reproducing measured values.

    With ``init`` given, a single local solve starts there (used by the basin
    study); otherwise ``n_starts`` uniform starts in the box are tried.
    """
    selected = list(selected)
    values = _stack(qsys, controls)
    meas = np.asarray(measurements, dtype=complex).reshape(-1)
    if len(meas) != len(values):
        raise ValueError(f"{len(values)} controls but {len(meas)} measurements")
    if init is not None:
        starts = [np.asarray(init, dtype=float).reshape(len(selected))]
    else:
        if n_starts < 1:
            raise ValueError("n_starts must be >= 1")
        rng = rng if rng is not None else np.random.default_rng(0)
        starts = list(rng.uniform(-box_radius, box_radius, size=(n_starts, len(selected))))
    return least_squares(qsys, qsys.candidates[selected], values, meas, starts)
