"""GR and OGR for the bilinear Schroedinger model.

Same control flow as the linear versions; the discriminatory steps use
:func:`monotonic_maximize` and the fits use :func:`fit_multistart`. Each
subproblem draws its random numbers from a stream keyed by
``(seed, iteration, candidate)``, so results do not depend on scheduling.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ..greedy import BELOW_TOLERANCE, COMPLETED, FittingSolution, GreedyResult
from ..ogr import argmax_tiebreak
from ..rng import stream
from .fitting import FitResult, fit_multistart
from .monotonic import MonotonicConfig, MonotonicResult, default_initial_control, monotonic_maximize
from .system import QuantumSystem

DEFAULT_TOLERANCE = 1e-6

# stream tags
_FIT, _CONTROL = 0, 1


@dataclass(frozen=True)
class QuantumGreedyConfig:
    """Settings shared by :func:`gr_quantum_run` and :func:`ogr_quantum_run`.

    ``monotonic.initial_control`` is ignored; every discriminatory solve starts
    from a seeded :func:`default_initial_control`.
    """

    monotonic: MonotonicConfig = field(default_factory=MonotonicConfig)
    n_starts: int = 10
    box_radius: float = 1.0
    seed: int = 0
    tol: float = DEFAULT_TOLERANCE
    parallel: bool = False
    max_workers: int | None = None

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.n_starts < 1:
            raise ValueError("n_starts must be >= 1")


def _discriminate(qsys, cfg, it, ell, mu_a, mu_b) -> MonotonicResult:
    init = default_initial_control(qsys, stream(cfg.seed, _CONTROL, it, ell), cfg.monotonic.amplitude)
    return monotonic_maximize(qsys, mu_a, mu_b, replace(cfg.monotonic, initial_control=init))


def _fit(qsys, cfg, it, ell, selected, controls) -> FitResult:
    return fit_multistart(qsys, ell, selected, controls, cfg.n_starts, cfg.box_radius,
                          rng=stream(cfg.seed, _FIT, it, ell))


def _map(fn, items, cfg):
    if cfg.parallel and len(items) > 1:
        with ThreadPoolExecutor(max_workers=cfg.max_workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _record(result: GreedyResult, sol: MonotonicResult):
    result.controls.append(sol.control)
    result.discriminatory_values.append(sol.discrepancy)


def gr_quantum_run(qsys: QuantumSystem, cfg: QuantumGreedyConfig | None = None) -> GreedyResult:
    """Fixed-order greedy reconstruction; always returns ``K`` controls.

    ``discriminatory_values`` holds the unpenalized ``|phi_a - phi_b|^2``.
    """
    cfg = cfg or QuantumGreedyConfig()
    zero = np.zeros_like(qsys.H)
    result = GreedyResult()
    _record(result, _discriminate(qsys, cfg, 0, 0, qsys.candidates[0], zero))
    result.selected.append(0)
    for k in range(1, qsys.n_candidates):
        selected = list(range(k))
        fit = _fit(qsys, cfg, k, k, selected, result.controls)
        result.fitting_history.append(FittingSolution(fit.alpha, fit.residual))
        mu_fit = qsys.combine(fit.alpha, selected)
        _record(result, _discriminate(qsys, cfg, k, k, qsys.candidates[k], mu_fit))
        result.selected.append(k)
    return result


def ogr_quantum_run(qsys: QuantumSystem, cfg: QuantumGreedyConfig | None = None) -> GreedyResult:
    """Optimized greedy reconstruction with the ``cfg.tol`` stopping test.

    Selection and stopping use the unpenalized discrepancy, evaluated for
    every remaining candidate at its own fitted coefficients.
    """
    cfg = cfg or QuantumGreedyConfig()
    K = qsys.n_candidates
    zero = np.zeros_like(qsys.H)
    result = GreedyResult()
    sols = _map(lambda ell: _discriminate(qsys, cfg, 0, ell, qsys.candidates[ell], zero), list(range(K)), cfg)
    pos = argmax_tiebreak([s.discrepancy for s in sols], list(range(K)))
    if sols[pos].discrepancy < cfg.tol:
        result.stop_reason = BELOW_TOLERANCE
        return result
    result.selected.append(pos)
    _record(result, sols[pos])
    it = 1
    while len(result.selected) < K:
        selected = list(result.selected)
        remaining = [ell for ell in range(K) if ell not in selected]

        def solve(ell):
            fit = _fit(qsys, cfg, it, ell, selected, result.controls)
            mu_fit = qsys.combine(fit.alpha, selected)
            return fit, _discriminate(qsys, cfg, it, ell, qsys.candidates[ell], mu_fit)

        sols = _map(solve, remaining, cfg)
        pos = argmax_tiebreak([d.discrepancy for _, d in sols], remaining)
        fit, disc = sols[pos]
        if disc.discrepancy < cfg.tol:
            result.stop_reason = BELOW_TOLERANCE
            return result
        result.selected.append(remaining[pos])
        result.fitting_history.append(FittingSolution(fit.alpha, fit.residual))
        _record(result, disc)
        it += 1
    result.stop_reason = COMPLETED
    return result
