"""Bilinear Schroedinger plant ``i psi' = (H + eps(t) mu) psi`` observed through ``<psi1, psi_T>``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..lin_system import Control, TimeGrid
from ._kernels import phi_alpha_grad
from .dynamics import StepData, backward_costates, forward_states, sensitivity_kernels

SYM_TOL = 1e-12
UNIT_TOL = 1e-12


def _check_symmetric(mat: np.ndarray, name: str) -> None:
    scale = max(np.abs(mat).max(initial=0.0), 1.0)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"{name} must be square, got {mat.shape}")
    if np.abs(mat - mat.T).max(initial=0.0) > SYM_TOL * scale:
        raise ValueError(f"{name} is not symmetric")


@dataclass(frozen=True, eq=False)
class QuantumSystem:
    """Internal Hamiltonian, candidate dipole matrices ``(K, N, N)``, states and grid."""

    H: np.ndarray
    candidates: np.ndarray
    psi0: np.ndarray
    psi1: np.ndarray
    grid: TimeGrid

    def __post_init__(self):
        H = np.asarray(self.H, dtype=float)
        cands = np.asarray(self.candidates, dtype=float)
        if cands.ndim == 2:
            cands = cands[None]
        psi0 = np.asarray(self.psi0, dtype=complex).reshape(-1)
        psi1 = np.asarray(self.psi1, dtype=complex).reshape(-1)
        _check_symmetric(H, "H")
        for i, mu in enumerate(cands):
            _check_symmetric(mu, f"candidate {i}")
        n = H.shape[0]
        if cands.shape[1:] != (n, n) or psi0.shape != (n,) or psi1.shape != (n,):
            raise ValueError("inconsistent dimensions between H, candidates and states")
        for name, psi in (("psi0", psi0), ("psi1", psi1)):
            if abs(np.linalg.norm(psi) - 1.0) > UNIT_TOL:
                raise ValueError(f"{name} must have unit norm")
        for name, arr in (("H", H), ("candidates", cands), ("psi0", psi0), ("psi1", psi1)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    @property
    def n_candidates(self) -> int:
        return self.candidates.shape[0]

    def with_candidates(self, candidates) -> "QuantumSystem":
        return QuantumSystem(self.H, candidates, self.psi0, self.psi1, self.grid)

    def combine(self, alpha, indices=None) -> np.ndarray:
        alpha = np.asarray(alpha, dtype=float)
        idx = list(range(len(alpha))) if indices is None else list(indices)
        if len(idx) != len(alpha):
            raise ValueError("alpha and indices differ in length")
        if not idx:
            return np.zeros_like(self.H)
        return np.tensordot(alpha, self.candidates[idx], axes=1)


def _control_values(qsys: QuantumSystem, eps: Control) -> np.ndarray:
    if eps.grid != qsys.grid:
        raise ValueError("control grid differs from system grid")
    if eps.n_channels != 1:
        raise ValueError("quantum controls are single-channel")
    return eps.values[0]


def propagate_schrodinger(qsys: QuantumSystem, mu, eps: Control) -> np.ndarray:
    """Final state ``psi_T`` under dipole ``mu`` and control ``eps``."""
    mu = np.asarray(mu, dtype=float)
    _check_symmetric(mu, "mu")
    values = _control_values(qsys, eps)
    steps = StepData.build(qsys.H, mu, values, qsys.grid.dt)
    U = steps.propagators()
    psi = qsys.psi0.copy()
    for k in range(qsys.grid.n_steps):
        psi = U[k] @ psi
    return psi


def phi(qsys: QuantumSystem, mu, eps: Control) -> complex:
    """Observable ``<psi1, psi_T(mu, eps)>``."""
    return complex(np.vdot(qsys.psi1, propagate_schrodinger(qsys, mu, eps)))


def phi_batch(qsys: QuantumSystem, mu, values) -> np.ndarray:
    """Observables for several control value arrays ``(m, n)`` and one ``mu``."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    steps = StepData.build(qsys.H, mu, values, qsys.grid.dt)
    states = forward_states(steps.propagators(), qsys.psi0)
    return states[:, -1, :] @ qsys.psi1.conj()


def phi_and_alpha_gradient(qsys: QuantumSystem, basis, alpha, values):
    """``phi(mu(alpha), eps^m)`` and its Jacobian ``d phi_m / d alpha_j``.

    Args:
        basis: matrices ``(k, N, N)`` combined as ``mu(alpha) = sum_j alpha_j basis_j``.
        alpha: coefficients ``(k,)``.
        values: control samples ``(m, n)``.

    Returns:
        ``(phi, jac)`` with shapes ``(m,)`` and ``(m, k)``.
    """
    basis = np.ascontiguousarray(basis, dtype=float)
    values = np.ascontiguousarray(np.atleast_2d(values), dtype=float)
    mu = np.tensordot(np.asarray(alpha, dtype=float), basis, axes=1) if len(basis) else np.zeros_like(qsys.H)
    return phi_alpha_grad(np.ascontiguousarray(qsys.H), np.ascontiguousarray(mu), basis, values,
                          qsys.grid.dt, qsys.psi0, qsys.psi1)


def phi_and_alpha_gradient_reference(qsys: QuantumSystem, basis, alpha, values):
    """Vectorized numpy evaluation of :func:`phi_and_alpha_gradient` (LAPACK eigensolver)."""
    basis = np.asarray(basis, dtype=float)
    values = np.atleast_2d(np.asarray(values, dtype=float))
    mu = np.tensordot(np.asarray(alpha, dtype=float), basis, axes=1) if len(basis) else np.zeros_like(qsys.H)
    steps = StepData.build(qsys.H, mu, values, qsys.grid.dt)
    U = steps.propagators()
    states = forward_states(U, qsys.psi0)
    costates = backward_costates(U, qsys.psi1)
    X = sensitivity_kernels(steps, states, costates)
    # dG_k = eps_k mu_j
    S = np.einsum("mk,mkcd->mcd", values, X)
    jac = np.einsum("mcd,jcd->mj", S, basis)
    return states[:, -1, :] @ qsys.psi1.conj(), jac


def phi_and_control_gradient(qsys: QuantumSystem, mu, values):
    """``phi(mu, eps)`` and ``d phi / d eps_k`` for one control ``(n,)``."""
    values = np.asarray(values, dtype=float)
    steps = StepData.build(qsys.H, mu, values, qsys.grid.dt)
    U = steps.propagators()
    states = forward_states(U, qsys.psi0)
    costates = backward_costates(U, qsys.psi1)
    X = sensitivity_kernels(steps, states, costates)
    return complex(np.vdot(qsys.psi1, states[-1])), np.einsum("kcd,cd->k", X, mu)
