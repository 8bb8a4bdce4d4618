"""Greedy reconstruction (GR) for the linear-quadratic problem.

Each discriminatory maximization over the L2 ball is solved exactly: the
objective ``||C phi_T(B_tilde, eps) - C phi_T(0, eps)||^2`` is a quadratic form
in the control, so its maximizer on the ball is the top right singular vector
of the discretized control-to-output map.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .lin_system import AdmissibleSet, Control, LinearSystem, gamma_matrix

log = logging.getLogger(__name__)

PD_TOLERANCE = 1e-12

COMPLETED = "completed"
BELOW_TOLERANCE = "below_tolerance"


class FittingError(ValueError):
    """The fitting block of ``W_hat`` is not positive definite."""

    def __init__(self, message: str, iteration: int | None = None):
        super().__init__(message if iteration is None else f"iteration {iteration}: {message}")
        self.iteration = iteration


@dataclass(frozen=True, eq=False)
class FittingSolution:
    alpha: np.ndarray
    residual: float
    unique: bool = True

    @property
    def kernel_vector(self) -> np.ndarray:
        return np.append(self.alpha, -1.0)


@dataclass(frozen=True, eq=False)
class DiscriminatoryResult:
    control: Control
    value: float
    singular_value: float


@dataclass(eq=False)
class GreedyResult:
    """Controls and bookkeeping produced by GR/OGR.

    ``selected`` lists candidate indices in the order they were used; for GR
    this is simply ``0, 1, ..., K-1``.
    """

    controls: list[Control] = field(default_factory=list)
    selected: list[int] = field(default_factory=list)
    fitting_history: list[FittingSolution] = field(default_factory=list)
    discriminatory_values: list[float] = field(default_factory=list)
    stop_reason: str = COMPLETED


def _fix_sign(values: np.ndarray) -> np.ndarray:
    # channel 0 first, then remaining channels, in time order
    flat = values.ravel()
    scale = np.abs(flat).max(initial=0.0)
    big = np.flatnonzero(np.abs(flat) > 1e-12 * scale) if scale > 0 else []
    if len(big) and flat[big[0]] < 0:
        return -values
    return values


def control_to_output_map(sys: LinearSystem, B_tilde) -> np.ndarray:
    """Matrix ``L`` of shape ``(P, M n)`` with ``gamma(eps) = L vec(eps) dt``.

    ``vec(eps)`` stacks the control time-major: ``[eps_0; eps_1; ...]``.
    """
    B_tilde = np.asarray(B_tilde, dtype=float)
    if B_tilde.shape != sys.candidates.shape[1:]:
        raise ValueError(f"B_tilde must have shape {sys.candidates.shape[1:]}, got {B_tilde.shape}")
    blocks = np.einsum("kpn,nm->pkm", sys.output_kernels, B_tilde) / sys.grid.dt
    return blocks.reshape(sys.n_outputs, -1)


def vec_control(eps: Control) -> np.ndarray:
    return eps.values.T.ravel()


def _maximize_on_ball(sys: LinearSystem, B_tilde, adm: AdmissibleSet) -> DiscriminatoryResult:
    grid = sys.grid
    S = np.sqrt(grid.dt) * control_to_output_map(sys, B_tilde)
    _, s, vt = np.linalg.svd(S, full_matrices=False)
    sigma = float(s[0]) if s.size else 0.0
    M, n = sys.n_channels, grid.n_steps
    if sigma == 0.0:
        # every admissible control is optimal; use a constant on channel 0
        values = np.zeros((M, n))
        values[0] = adm.radius / np.sqrt(grid.t_final)
    else:
        values = vt[0].reshape(n, M).T * (adm.radius / np.sqrt(grid.dt))
    values = _fix_sign(values)
    return DiscriminatoryResult(Control(grid, values), adm.radius**2 * sigma**2, sigma)


def solve_initialization(sys: LinearSystem, ell: int, adm: AdmissibleSet) -> DiscriminatoryResult:
    """Control maximizing the observed response of candidate ``ell`` on the ball."""
    if not 0 <= ell < sys.n_candidates:
        raise IndexError(f"candidate index {ell} out of range")
    return _maximize_on_ball(sys, sys.candidates[ell], adm)


def solve_discriminatory(
    sys: LinearSystem,
    target: int,
    alpha,
    adm: AdmissibleSet,
    selected: Sequence[int] | None = None,
) -> DiscriminatoryResult:
    """Control best separating ``B_target`` from ``sum_j alpha_j B_{selected_j}``.

    ``selected`` defaults to the first ``len(alpha)`` candidates (the GR order).
    """
    alpha = np.asarray(alpha, dtype=float).reshape(-1)
    if selected is None:
        selected = range(len(alpha))
    selected = list(selected)
    if len(selected) != len(alpha):
        raise ValueError("alpha must have one entry per selected candidate")
    B_tilde = sys.candidates[target] - sys.combine(alpha, selected)
    return _maximize_on_ball(sys, B_tilde, adm)


def solve_fitting(
    w_hat,
    k: int | None = None,
    *,
    selected: Sequence[int] | None = None,
    target: int | None = None,
    pd_tolerance: float = PD_TOLERANCE,
    allow_singular: bool = False,
) -> FittingSolution:
    """Closed-form fitting step from the accumulated Gram matrix.

    Solves ``min_a <a, W[S,S] a> - 2 <W[S,t], a>`` by a Cholesky solve. The
    default index sets are the GR ones, ``S = 0..k-1`` and ``t = k``.

    Raises:
        FittingError: if ``W[S,S]`` is not positive definite and
            ``allow_singular`` is false. With ``allow_singular`` the
            minimum-norm minimizer is returned and flagged as non-unique.
    """
    W = np.asarray(w_hat, dtype=float)
    if selected is None:
        if k is None:
            raise ValueError("either k or selected is required")
        selected = range(k)
    selected = list(selected)
    if target is None:
        target = len(selected) if k is None else k
    idx = selected + [target]
    block = W[np.ix_(idx, idx)]
    G, b = block[:-1, :-1], block[:-1, -1]
    if not selected:
        return FittingSolution(np.zeros(0), max(float(block[-1, -1]), 0.0))
    eig = np.linalg.eigvalsh(G)
    unique = eig[0] > pd_tolerance * max(np.trace(G), np.finfo(float).tiny)
    if unique:
        alpha = cho_solve(cho_factor(G), b)
    elif allow_singular:
        alpha = np.linalg.lstsq(G, b, rcond=1e-10)[0]
    else:
        raise FittingError(f"fitting block not positive definite (min eigenvalue {eig[0]:.3e})")
    v = np.append(alpha, -1.0)
    residual = max(float(v @ block @ v), 0.0)
    return FittingSolution(alpha, residual, bool(unique))


def check_independent(candidates, rtol: float = 1e-10) -> None:
    """Raise ``ValueError`` if the vectorized candidates are linearly dependent."""
    flat = np.asarray(candidates, dtype=float).reshape(len(candidates), -1)
    s = np.linalg.svd(flat, compute_uv=False)
    if len(flat) > flat.shape[1] or s[-1] <= rtol * s[0]:
        raise ValueError("candidate matrices are linearly dependent")


def gr_run(sys: LinearSystem, adm: AdmissibleSet, *, strict: bool = False) -> GreedyResult:
    """Fixed-order greedy reconstruction: initialization then ``K - 1`` sweeps.

    A discriminatory step with zero value (a direction invisible at the
    output) is recorded, not treated as failure. When such a step leaves the
    next fitting block singular, the minimum-norm fit is used; ``strict=True``
    raises :class:`FittingError` carrying the iteration index instead.
    """
    check_independent(sys.candidates)
    K = sys.n_candidates
    first = solve_initialization(sys, 0, adm)
    result = GreedyResult(controls=[first.control], selected=[0],
                          discriminatory_values=[first.value])
    Gam = gamma_matrix(sys, first.control)
    w_hat = Gam.T @ Gam
    for k in range(1, K):
        try:
            fit = solve_fitting(w_hat, k, allow_singular=not strict)
        except FittingError as exc:
            raise FittingError(str(exc), iteration=k) from exc
        if not fit.unique:
            log.debug("GR iteration %d: singular fitting block, using minimum-norm fit", k)
        disc = solve_discriminatory(sys, k, fit.alpha, adm)
        result.controls.append(disc.control)
        result.selected.append(k)
        result.fitting_history.append(fit)
        result.discriminatory_values.append(disc.value)
        Gam = gamma_matrix(sys, disc.control)
        w_hat = w_hat + Gam.T @ Gam
    return result


def w_hat_from_controls(sys: LinearSystem, controls: Sequence[Control], candidates=None) -> np.ndarray:
    """Accumulated Gram matrix ``sum_m W(eps^m)``."""
    cands = sys.candidates if candidates is None else candidates
    K = len(cands)
    W = np.zeros((K, K))
    for eps in controls:
        G = gamma_matrix(sys, eps, cands)
        W += G.T @ G
    return 0.5 * (W + W.T)
