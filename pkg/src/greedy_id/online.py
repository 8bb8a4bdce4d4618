"""Online identification from (synthetic) laboratory outputs and its certification."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .greedy import PD_TOLERANCE
from .lin_system import Control, LinearSystem, gamma_matrix, propagate_linear


@dataclass(frozen=True, eq=False)
class Measurements:
    """Observed outputs ``C phi_T(B_true, eps^m)``, one row per control."""

    outputs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "outputs", np.atleast_2d(np.asarray(self.outputs, dtype=float)))

    def __len__(self) -> int:
        return len(self.outputs)


@dataclass(frozen=True, eq=False)
class IdentificationResult:
    alpha: np.ndarray
    residual: float
    w_min_eig: float
    w_rank: int
    certified_unique: bool
    identifiable: np.ndarray
    apriori_error_note: str | None = None


def simulate_measurements(sys: LinearSystem, B_true, controls: Sequence[Control]) -> Measurements:
    """Noise-free stand-in for the laboratory."""
    B_true = np.asarray(B_true, dtype=float)
    outs = [sys.C @ propagate_linear(sys, B_true, eps) for eps in controls]
    return Measurements(np.array(outs).reshape(len(controls), sys.n_outputs))


def _output_residual(sys, B, controls, meas) -> float:
    return float(sum(np.sum((y - sys.C @ propagate_linear(sys, B, eps)) ** 2)
                     for eps, y in zip(controls, meas.outputs)))


def identify(
    sys: LinearSystem,
    selected: Sequence[int],
    controls: Sequence[Control],
    meas: Measurements,
    pd_tolerance: float = PD_TOLERANCE,
) -> IdentificationResult:
    """Least-squares coefficients of the selected candidates from measured outputs.

    Solves ``W_hat alpha = b`` with ``b_l = sum_m <gamma_l(eps^m), y_m - C exp(TA) phi0>``.
    If ``W_hat`` is singular the minimum-norm solution is returned with
    ``certified_unique=False``; ``identifiable[j]`` tells whether coefficient
    ``j`` is nevertheless pinned down (``e_j`` orthogonal to ``ker W_hat``).
    """
    selected = list(selected)
    if len(controls) != len(meas):
        raise ValueError(f"{len(controls)} controls but {len(meas)} measurements")
    if meas.outputs.shape[1] != sys.n_outputs:
        raise ValueError(f"measurements must have {sys.n_outputs} components")
    cands = sys.candidates[selected]
    K = len(selected)
    W = np.zeros((K, K))
    b = np.zeros(K)
    for eps, y in zip(controls, meas.outputs):
        G = gamma_matrix(sys, eps, cands)
        W += G.T @ G
        b += G.T @ (y - sys.drift_output)
    W = 0.5 * (W + W.T)
    eig, vecs = np.linalg.eigh(W)
    scale = max(np.trace(W), np.finfo(float).tiny)
    threshold = pd_tolerance * scale
    certified = bool(K and eig[0] > threshold)
    if certified:
        alpha = cho_solve(cho_factor(W), b)
    else:
        keep = eig > threshold
        alpha = vecs[:, keep] @ ((vecs[:, keep].T @ b) / eig[keep])
    null = vecs[:, eig <= threshold]
    identifiable = np.linalg.norm(null, axis=1) <= 1e-8 if null.size else np.ones(K, bool)
    note = None
    if not certified:
        lost = [selected[j] for j in np.flatnonzero(~identifiable)]
        note = (f"W_hat is singular (rank {int(np.sum(eig > threshold))} of {K}); "
                f"coefficients of candidates {lost} are not identifiable and the error "
                "B_true - B(alpha) may contain any combination of them")
    residual = _output_residual(sys, sys.combine(alpha, selected), controls, meas)
    return IdentificationResult(
        alpha=alpha,
        residual=residual,
        w_min_eig=float(eig[0]) if K else 0.0,
        w_rank=int(np.sum(eig > threshold)),
        certified_unique=certified,
        identifiable=identifiable,
        apriori_error_note=note,
    )


def certify_block_structure(w, rm: int, pd_tolerance: float = PD_TOLERANCE,
                            zero_rtol: float = 1e-10) -> bool:
    """True iff ``W[:rm, :rm]`` is positive definite and everything else is ~0."""
    W = np.asarray(w, dtype=float)
    if not 0 <= rm <= W.shape[0]:
        raise ValueError(f"rm={rm} outside [0, {W.shape[0]}]")
    norm = np.linalg.norm(W, 2)
    lead = W[:rm, :rm]
    if rm and np.linalg.eigvalsh(lead)[0] <= pd_tolerance * max(np.trace(lead), np.finfo(float).tiny):
        return False
    outside = W.copy()
    outside[:rm, :rm] = 0.0
    return bool(np.abs(outside).max(initial=0.0) <= zero_rtol * norm)
