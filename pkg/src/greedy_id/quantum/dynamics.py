"""Exact piecewise-constant Schroedinger propagation and its derivatives.

On cell ``k`` the generator ``G_k = H + eps_k mu`` is real symmetric, so
``U_k = exp(-i dt G_k) = V diag(exp(-i dt lam)) V^T`` with real ``V``. The
Frechet derivative of ``U_k`` in a direction ``D`` is
``V (Phi * (V^T D V)) V^T`` where ``Phi`` holds divided differences of
``exp(-i dt lam)``; it gives exact gradients of the discrete dynamics.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class StepData:
    """Eigen-decomposition of every step generator, batched over leading axes."""

    evals: np.ndarray  # (..., n, N)
    evecs: np.ndarray  # (..., n, N, N)
    dt: float

    @classmethod
    def build(cls, H, mu, values, dt: float) -> "StepData":
        """``mu`` may be ``(N, N)`` or batched ``(B, N, N)`` paired with ``values`` ``(B, n)``."""
        mu = np.asarray(mu, dtype=float)
        values = np.asarray(values, dtype=float)
        if mu.ndim == 3:
            mu = mu[:, None]
        G = H + values[..., None, None] * mu
        evals, evecs = np.linalg.eigh(G)
        return cls(evals, evecs, dt)

    @property
    def phases(self) -> np.ndarray:
        return np.exp(-1j * self.dt * self.evals)

    def propagators(self) -> np.ndarray:
        V = self.evecs
        return (V * self.phases[..., None, :]) @ np.swapaxes(V, -1, -2)

    def divided_differences(self) -> np.ndarray:
        """``Phi_ab = (f(l_a) - f(l_b)) / (l_a - l_b)`` for ``f(l) = exp(-i dt l)``."""
        la = self.evals[..., :, None]
        lb = self.evals[..., None, :]
        x = 0.5 * self.dt * (la - lb)
        return -1j * self.dt * np.exp(-0.5j * self.dt * (la + lb)) * np.sinc(x / np.pi)


def forward_states(U: np.ndarray, psi0: np.ndarray) -> np.ndarray:
    """States ``psi_0, ..., psi_n`` for propagators ``U`` of shape ``(..., n, N, N)``.

    Returns shape ``(..., n + 1, N)``.
    """
    lead = U.shape[:-3]
    n, N = U.shape[-3], U.shape[-1]
    out = np.empty(lead + (n + 1, N), dtype=complex)
    psi = np.broadcast_to(np.asarray(psi0, dtype=complex), lead + (N,)).copy()
    out[..., 0, :] = psi
    Uk = np.ascontiguousarray(np.swapaxes(np.moveaxis(U, -3, 0), -1, -2))
    psi = psi[..., None, :]
    for k in range(n):
        psi = psi @ Uk[k]
        out[..., k + 1, :] = psi[..., 0, :]
    return out


def backward_costates(U: np.ndarray, chi_final: np.ndarray) -> np.ndarray:
    """Costates with ``chi_n = chi_final`` and ``chi_{k-1} = U_k^H chi_k``.

    Index ``k`` of the result is the costate at the end of cell ``k - 1``,
    i.e. ``chi_k`` for ``k = 0..n``.
    """
    lead = U.shape[:-3]
    n, N = U.shape[-3], U.shape[-1]
    out = np.empty(lead + (n + 1, N), dtype=complex)
    chi = np.broadcast_to(np.asarray(chi_final, dtype=complex), lead + (N,)).copy()
    out[..., n, :] = chi
    # row-vector form: chi^T <- chi^T conj(U)
    Uc = np.ascontiguousarray(np.moveaxis(U, -3, 0)).conj()
    chi = chi[..., None, :]
    for k in range(n - 1, -1, -1):
        chi = chi @ Uc[k]
        out[..., k, :] = chi[..., 0, :]
    return out


def sensitivity_kernels(steps: StepData, states: np.ndarray, costates: np.ndarray) -> np.ndarray:
    """Matrices ``X_k`` with ``d<chi_n, psi_n> = sum_k sum_cd X_k[c, d] dG_k[c, d]``.

    ``dG_k`` is the perturbation of the cell-``k`` generator. Shape ``(..., n, N, N)``.
    """
    V = steps.evecs
    Vt = np.swapaxes(V, -1, -2)
    a = (Vt @ costates[..., 1:, :, None])[..., 0]
    b = (Vt @ states[..., :-1, :, None])[..., 0]
    Y = steps.divided_differences() * (a.conj()[..., :, None] * b[..., None, :])
    return V @ Y @ Vt
