"""Linear input-output plant with piecewise-constant controls.

The plant is ``phi'(t) = A phi(t) + B eps(t)``, ``phi(0) = phi0``, observed at
the final time through ``C``. Controls are constant on each cell of a uniform
time grid, so every propagation below is exact up to roundoff: one step is
``phi <- E phi + F B eps_k`` with ``E = exp(A dt)`` and
``F = int_0^dt exp(A s) ds``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.linalg import expm


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on ``[0, t_final]`` with ``n_steps`` cells."""

    t_final: float
    n_steps: int

    def __post_init__(self):
        if not np.isfinite(self.t_final) or self.t_final <= 0:
            raise ValueError(f"t_final must be positive, got {self.t_final}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError(f"n_steps must be a positive integer, got {self.n_steps}")
        object.__setattr__(self, "t_final", float(self.t_final))
        object.__setattr__(self, "n_steps", int(self.n_steps))

    @property
    def dt(self) -> float:
        return self.t_final / self.n_steps

    @property
    def times(self) -> np.ndarray:
        """Cell boundaries ``t_0 = 0, ..., t_n = t_final``."""
        return np.linspace(0.0, self.t_final, self.n_steps + 1)


@dataclass(frozen=True, eq=False)
class Control:
    """Piecewise-constant control; ``values[:, k]`` is held on cell ``k``."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values[None, :]
        if values.ndim != 2 or values.shape[1] != self.grid.n_steps:
            raise ValueError(
                f"control values must have shape (M, {self.grid.n_steps}), got {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise FloatingPointError("control values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n_channels(self) -> int:
        return self.values.shape[0]

    def norm(self) -> float:
        """Discrete L2 norm ``sqrt(dt * sum_k |eps_k|^2)``."""
        return float(np.sqrt(self.grid.dt * np.sum(self.values**2)))

    def scaled(self, factor: float) -> "Control":
        return Control(self.grid, factor * self.values)

    def __add__(self, other: "Control") -> "Control":
        if other.grid != self.grid:
            raise ValueError("cannot add controls on different grids")
        return Control(self.grid, self.values + other.values)

    @classmethod
    def zeros(cls, grid: TimeGrid, n_channels: int = 1) -> "Control":
        return cls(grid, np.zeros((n_channels, grid.n_steps)))


@dataclass(frozen=True)
class AdmissibleSet:
    """Closed L2 ball of controls ``||eps|| <= radius``."""

    radius: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")

    def contains(self, eps: Control, rtol: float = 1e-12) -> bool:
        return eps.norm() <= self.radius * (1 + rtol)


def step_matrices(A: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(exp(A dt), int_0^dt exp(A s) ds)`` from one augmented exponential."""
    n = A.shape[0]
    aug = np.zeros((2 * n, 2 * n))
    aug[:n, :n] = A
    aug[:n, n:] = np.eye(n)
    big = expm(aug * dt)
    return big[:n, :n], big[:n, n:]


@dataclass(frozen=True, eq=False)
class LinearSystem:
    """Plant ``(A, C, phi0)`` on ``grid`` with an ordered list of candidate input matrices.

    ``candidates`` is stored as an array of shape ``(K, N, M)``.
    """

    A: np.ndarray
    C: np.ndarray
    candidates: np.ndarray
    phi0: np.ndarray
    grid: TimeGrid
    check_distinct: bool = field(default=True, repr=False)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        cands = np.asarray(self.candidates, dtype=float)
        if cands.ndim == 2:
            cands = cands[None]
        phi0 = np.asarray(self.phi0, dtype=float).reshape(-1)
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError(f"A must be square, got {A.shape}")
        if C.shape[1] != n:
            raise ValueError(f"C must have {n} columns, got {C.shape}")
        if cands.ndim != 3 or cands.shape[0] < 1 or cands.shape[1] != n:
            raise ValueError(f"candidates must have shape (K, {n}, M), got {cands.shape}")
        if phi0.shape != (n,):
            raise ValueError(f"phi0 must have length {n}, got {phi0.shape}")
        for name, arr in (("A", A), ("C", C), ("candidates", cands), ("phi0", phi0)):
            if not np.all(np.isfinite(arr)):
                raise FloatingPointError(f"{name} has non-finite entries")
        if self.check_distinct:
            flat = cands.reshape(len(cands), -1)
            for i in range(len(flat)):
                if np.any(np.all(flat[i + 1 :] == flat[i], axis=1)):
                    raise ValueError(f"candidate {i} is repeated")
        for name, arr in (("A", A), ("C", C), ("candidates", cands), ("phi0", phi0)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_states(self) -> int:
        return self.A.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.C.shape[0]

    @property
    def n_channels(self) -> int:
        return self.candidates.shape[2]

    @property
    def n_candidates(self) -> int:
        return self.candidates.shape[0]

    def with_candidates(self, candidates, check_distinct: bool = True) -> "LinearSystem":
        return LinearSystem(self.A, self.C, candidates, self.phi0, self.grid, check_distinct)

    def combine(self, alpha: Sequence[float], indices: Sequence[int] | None = None) -> np.ndarray:
        """``sum_j alpha_j B_{indices_j}``; ``indices`` defaults to the first ``len(alpha)``."""
        alpha = np.asarray(alpha, dtype=float)
        if indices is None:
            indices = range(len(alpha))
        idx = np.asarray(list(indices), dtype=int)
        if len(idx) != len(alpha):
            raise ValueError("alpha and indices differ in length")
        if len(idx) == 0:
            return np.zeros(self.candidates.shape[1:])
        return np.tensordot(alpha, self.candidates[idx], axes=1)

    @cached_property
    def _steps(self) -> tuple[np.ndarray, np.ndarray]:
        return step_matrices(self.A, self.grid.dt)

    @property
    def step_exp(self) -> np.ndarray:
        return self._steps[0]

    @property
    def step_integral(self) -> np.ndarray:
        return self._steps[1]

    @cached_property
    def drift_output(self) -> np.ndarray:
        """Uncontrolled observation ``C exp(T A) phi0``."""
        return self.C @ (expm(self.grid.t_final * self.A) @ self.phi0)

    @cached_property
    def output_kernels(self) -> np.ndarray:
        """Stack ``H_k = C exp((T - t_{k+1}) A) F`` of shape ``(n_steps, P, N)``.

        A control held on cell ``k`` contributes ``H_k B eps_k`` to the output.
        """
        E, F = self._steps
        n = self.grid.n_steps
        out = np.empty((n, self.n_outputs, self.n_states))
        row = self.C.copy()
        for k in range(n - 1, -1, -1):
            out[k] = row @ F
            row = row @ E
        out.setflags(write=False)
        return out


def _check_control(sys: LinearSystem, eps: Control, n_channels: int):
    if eps.grid != sys.grid:
        raise ValueError("control grid differs from system grid")
    if eps.n_channels != n_channels:
        raise ValueError(f"control has {eps.n_channels} channels, expected {n_channels}")


def propagate_linear(sys: LinearSystem, B: np.ndarray, eps: Control, phi0=None) -> np.ndarray:
    """Final state ``phi(T)`` for input matrix ``B`` driven by ``eps``.

    Args:
        sys: plant and grid.
        B: input matrix of shape ``(N, M)``.
        eps: control on ``sys.grid``.
        phi0: optional initial state overriding ``sys.phi0``.
    """
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != sys.n_states:
        raise ValueError(f"B must have {sys.n_states} rows, got {B.shape}")
    _check_control(sys, eps, B.shape[1])
    if not np.all(np.isfinite(B)):
        raise FloatingPointError("B has non-finite entries")
    E, F = sys.step_exp, sys.step_integral
    FB = F @ B
    phi = np.array(sys.phi0 if phi0 is None else phi0, dtype=float)
    for k in range(sys.grid.n_steps):
        phi = E @ phi + FB @ eps.values[:, k]
    return phi


def gamma_vector(sys: LinearSystem, ell: int, eps: Control) -> np.ndarray:
    """Control-to-output response of candidate ``ell`` (zero initial state)."""
    if not 0 <= ell < sys.n_candidates:
        raise IndexError(f"candidate index {ell} out of range [0, {sys.n_candidates})")
    phi = propagate_linear(sys, sys.candidates[ell], eps, phi0=np.zeros(sys.n_states))
    return sys.C @ phi


def gamma_matrix(sys: LinearSystem, eps: Control, candidates=None) -> np.ndarray:
    """``Gamma(eps) = [gamma_1 ... gamma_K]`` of shape ``(P, K)``, via the output kernels."""
    _check_control(sys, eps, sys.n_channels)
    cands = sys.candidates if candidates is None else np.asarray(candidates, dtype=float)
    # sum_k H_k B_l eps_k  ->  (P, K)
    HB = np.einsum("kpn,lnm->lkpm", sys.output_kernels, cands)
    return np.einsum("lkpm,mk->pl", HB, eps.values)


def w_matrix(sys: LinearSystem, eps: Control) -> np.ndarray:
    """Gram matrix ``W(eps)_{lj} = <gamma_l(eps), gamma_j(eps)>`` of shape ``(K, K)``."""
    G = gamma_matrix(sys, eps)
    W = G.T @ G
    return 0.5 * (W + W.T)


def accumulate_w(ws: Sequence[np.ndarray], size: int | None = None) -> np.ndarray:
    """Sum of Gram matrices; an empty list gives a ``size x size`` zero matrix."""
    ws = [np.asarray(w, dtype=float) for w in ws]
    if not ws:
        if size is None:
            raise ValueError("size is required for an empty list")
        return np.zeros((size, size))
    shape = ws[0].shape
    if len(shape) != 2 or shape[0] != shape[1]:
        raise ValueError(f"W matrices must be square, got {shape}")
    for w in ws[1:]:
        if w.shape != shape:
            raise ValueError(f"shape mismatch: {w.shape} vs {shape}")
    return np.sum(ws, axis=0)


def check_w_matrix(W: np.ndarray, sym_rtol: float = 1e-12, psd_rtol: float = 1e-10) -> None:
    """Raise ``ValueError`` unless ``W`` is symmetric positive semi-definite."""
    W = np.asarray(W, dtype=float)
    scale = max(np.abs(W).max(initial=0.0), np.finfo(float).tiny)
    if np.abs(W - W.T).max(initial=0.0) > sym_rtol * scale:
        raise ValueError("W is not symmetric")
    eig = np.linalg.eigvalsh(W) if W.size else np.zeros(0)
    if eig.size and eig[0] < -psd_rtol * max(eig[-1], 0.0) - np.finfo(float).tiny:
        raise ValueError(f"W is not positive semi-definite (min eigenvalue {eig[0]:.3e})")


def numerical_rank(W: np.ndarray, rtol: float = 1e-10) -> int:
    """Number of eigenvalues of the PSD matrix ``W`` above ``rtol * max eigenvalue``."""
    eig = np.linalg.eigvalsh(np.asarray(W, dtype=float))
    if eig.size == 0 or eig[-1] <= 0:
        return 0
    return int(np.sum(eig > rtol * eig[-1]))
