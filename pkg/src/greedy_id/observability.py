"""Observability matrix, its SVD, and the kernel-adapted candidate basis."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_RANK_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class ObservabilityReport:
    """SVD summary of ``O_N(C, A)``.

    ``right_vectors[j]`` is the right singular vector paired with the ``j``-th
    largest singular value; the first ``rank`` of them are observable
    directions, the rest span the kernel.
    """

    obs_matrix: np.ndarray
    rank: int
    singular_values: np.ndarray
    right_vectors: np.ndarray
    rank_tolerance: float

    @property
    def n_states(self) -> int:
        return self.obs_matrix.shape[1]

    def kernel_vectors(self) -> np.ndarray:
        return self.right_vectors[self.rank :]


def observability_matrix(A, C) -> np.ndarray:
    """Stack ``[C; CA; ...; CA^{N-1}]`` built by repeated right-multiplication."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    n = A.shape[0]
    if A.shape != (n, n) or C.shape[1] != n:
        raise ValueError(f"inconsistent shapes A {A.shape}, C {C.shape}")
    blocks = [C]
    for _ in range(n - 1):
        blocks.append(blocks[-1] @ A)
    return np.vstack(blocks)


def _normalize_signs(vectors: np.ndarray) -> np.ndarray:
    # first entry above roundoff made positive, row by row
    out = vectors.copy()
    for row in out:
        big = np.flatnonzero(np.abs(row) > 1e-12 * np.abs(row).max(initial=0.0))
        if big.size and row[big[0]] < 0:
            row *= -1
    return out


def analyze(A, C, rank_tolerance: float = DEFAULT_RANK_TOLERANCE) -> ObservabilityReport:
    """SVD of the observability matrix with a relative numerical-rank threshold.

    The rank counts singular values above ``rank_tolerance * sigma_max``. Right
    singular vectors are sign-normalized so that their first non-negligible
    entry is positive, which makes the derived basis reproducible.
    """
    if not rank_tolerance > 0:
        raise ValueError("rank_tolerance must be positive")
    O = observability_matrix(A, C)
    try:
        _, s, vt = np.linalg.svd(O)
    except np.linalg.LinAlgError as exc:
        raise FloatingPointError(f"SVD of the observability matrix failed: {exc}") from exc
    n = O.shape[1]
    sv = np.zeros(n)
    sv[: len(s)] = s
    rank = int(np.sum(sv > rank_tolerance * sv[0])) if sv[0] > 0 else 0
    return ObservabilityReport(O, rank, sv, _normalize_signs(vt), float(rank_tolerance))


def build_observability_basis(report: ObservabilityReport, n_channels: int) -> np.ndarray:
    """Candidates ``B_{jM + i} = v_j e_i^T`` (0-based), observable directions first.

    Returns an array of shape ``(N * M, N, M)``.
    """
    n = report.n_states
    basis = np.zeros((n * n_channels, n, n_channels))
    for j, v in enumerate(report.right_vectors):
        for i in range(n_channels):
            basis[j * n_channels + i, :, i] = v
    return basis


def max_identifiable(report: ObservabilityReport, n_channels: int) -> int:
    """Upper bound ``R * M`` on the number of recoverable coefficients."""
    return report.rank * n_channels


def observable_images(A, C, candidates) -> np.ndarray:
    """Columns ``vec(O_N(C, A) B_j)`` for each candidate, shape ``(N P M, K)``."""
    O = observability_matrix(A, C)
    cands = np.asarray(candidates, dtype=float)
    return np.stack([(O @ B).ravel() for B in cands], axis=1)
