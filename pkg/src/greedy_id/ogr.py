"""Optimized greedy reconstruction (OGR) for the linear-quadratic problem.

At every iteration all remaining candidates are fitted against the selected
ones and the candidate with the largest discriminatory value is moved into
the selected set. The run stops early once no remaining candidate can be
separated by more than ``tol``.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm

from .greedy import (
    BELOW_TOLERANCE,
    COMPLETED,
    DiscriminatoryResult,
    FittingError,
    FittingSolution,
    GreedyResult,
    solve_discriminatory,
    solve_fitting,
    solve_initialization,
)
from .lin_system import AdmissibleSet, LinearSystem, gamma_matrix

TIE_RTOL = 1e-10


@dataclass(frozen=True)
class OgrConfig:
    """``tol=None`` selects :func:`default_tolerance` for the system at hand."""

    adm: AdmissibleSet = field(default_factory=AdmissibleSet)
    tol: float | None = None
    parallel: bool = False
    max_workers: int | None = None

    def __post_init__(self):
        if self.tol is not None and not self.tol > 0:
            raise ValueError("tol must be positive")


def default_tolerance(sys: LinearSystem, adm: AdmissibleSet) -> float:
    """``1e-8`` times an a-priori scale of the discriminatory values.

    The scale bounds ``||gamma||^2`` for a unit-size candidate:
    ``r^2 T ||C||^2 max(1, ||exp(TA)||)^2 max_l ||B_l||^2``.
    """
    T = sys.grid.t_final
    c = np.linalg.norm(sys.C, 2)
    growth = max(1.0, np.linalg.norm(expm(T * sys.A), 2))
    b = max(np.linalg.norm(B, 2) for B in sys.candidates)
    return 1e-8 * adm.radius**2 * T * (c * growth * b) ** 2


def argmax_tiebreak(values: Sequence[float], keys: Sequence[int], rtol: float = TIE_RTOL) -> int:
    """Position of the maximum; near-ties go to the smallest key."""
    values = np.asarray(values, dtype=float)
    best = values.max()
    close = np.flatnonzero(values >= best - rtol * abs(best))
    return int(min(close, key=lambda i: keys[i]))


def _map(fn: Callable, items: list, cfg: OgrConfig) -> list:
    if cfg.parallel and len(items) > 1:
        with ThreadPoolExecutor(max_workers=cfg.max_workers) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


@dataclass(eq=False)
class OgrState:
    """Working state: ``order[:k]`` are selected, ``order[k:]`` remain."""

    order: list[int]
    k: int
    result: GreedyResult
    w_hat: np.ndarray
    tol: float
    stopped: bool = False

    @property
    def selected(self) -> list[int]:
        return self.order[: self.k]

    @property
    def remaining(self) -> list[int]:
        return self.order[self.k :]


def _add_control(sys: LinearSystem, state: OgrState, disc: DiscriminatoryResult):
    G = gamma_matrix(sys, disc.control)
    state.w_hat = state.w_hat + G.T @ G
    state.result.controls.append(disc.control)
    state.result.discriminatory_values.append(disc.value)


def ogr_initialize(sys: LinearSystem, cfg: OgrConfig) -> OgrState:
    """Pick the candidate with the largest observable response (step 1).

    The returned state has ``stopped=True`` and no controls when even the best
    value is below the tolerance.
    """
    K = sys.n_candidates
    tol = cfg.tol if cfg.tol is not None else default_tolerance(sys, cfg.adm)
    sols = _map(lambda ell: solve_initialization(sys, ell, cfg.adm), list(range(K)), cfg)
    pos = argmax_tiebreak([s.value for s in sols], list(range(K)))
    state = OgrState(list(range(K)), 0, GreedyResult(), np.zeros((K, K)), tol)
    if sols[pos].value < tol:
        state.stopped = True
        state.result.stop_reason = BELOW_TOLERANCE
        return state
    state.order[0], state.order[pos] = state.order[pos], state.order[0]
    state.k = 1
    state.result.selected.append(pos)
    _add_control(sys, state, sols[pos])
    return state


def ogr_step(sys: LinearSystem, state: OgrState, cfg: OgrConfig) -> OgrState:
    """One fitting + extended discriminatory sweep over all remaining candidates."""
    if state.stopped or state.k >= len(state.order):
        return state
    selected = state.selected

    def solve(ell: int) -> tuple[FittingSolution, DiscriminatoryResult]:
        try:
            fit = solve_fitting(state.w_hat, selected=selected, target=ell)
        except FittingError as exc:
            raise FittingError(f"selected set lost positive definiteness ({exc})", state.k) from exc
        return fit, solve_discriminatory(sys, ell, fit.alpha, cfg.adm, selected)

    remaining = state.remaining
    sols = _map(solve, remaining, cfg)
    pos = argmax_tiebreak([d.value for _, d in sols], remaining)
    fit, disc = sols[pos]
    if disc.value < state.tol:
        state.stopped = True
        state.result.stop_reason = BELOW_TOLERANCE
        return state
    j = state.k + pos
    state.order[state.k], state.order[j] = state.order[j], state.order[state.k]
    state.result.selected.append(state.order[state.k])
    state.result.fitting_history.append(fit)
    state.k += 1
    _add_control(sys, state, disc)
    return state


def ogr_run(sys: LinearSystem, cfg: OgrConfig | None = None) -> GreedyResult:
    """Run OGR to completion.

    Linearly dependent or duplicated candidates are allowed; they are never
    selected once their observable image is spanned by the selected set.
    """
    cfg = cfg or OgrConfig()
    state = ogr_initialize(sys, cfg)
    while not state.stopped and state.k < sys.n_candidates:
        state = ogr_step(sys, state, cfg)
    if not state.stopped:
        state.result.stop_reason = COMPLETED
    return state.result
