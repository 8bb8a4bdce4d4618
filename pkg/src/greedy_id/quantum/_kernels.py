"""Compiled inner loops for the quantum solvers.

The generators are small dense symmetric matrices, so a cyclic Jacobi
eigensolver is used instead of a LAPACK call per time step. The numpy code in
``dynamics.py`` computes the same quantities and serves as the reference.
"""
from __future__ import annotations

import numba
import numpy as np

_JIT = dict(cache=True, nogil=True)


@numba.njit(**_JIT)
def jacobi_eigh(G, w, V):
    """Eigen-decomposition of symmetric ``G``: ``G = V diag(w) V^T`` (unsorted)."""
    N = G.shape[0]
    a = G.copy()
    for i in range(N):
        for j in range(N):
            V[i, j] = 1.0 if i == j else 0.0
    for _ in range(100):
        off = 0.0
        diag = 0.0
        for p in range(N):
            diag += a[p, p] * a[p, p]
            for q in range(p + 1, N):
                off += a[p, q] * a[p, q]
        if off <= 1e-34 * (diag + off):
            break
        for p in range(N - 1):
            for q in range(p + 1, N):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for k in range(N):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(N):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(N):
                    vkp = V[k, p]
                    vkq = V[k, q]
                    V[k, p] = c * vkp - s * vkq
                    V[k, q] = s * vkp + c * vkq
    for i in range(N):
        w[i] = a[i, i]


@numba.njit(**_JIT)
def _divided(wi, wj, dt):
    x = 0.5 * dt * (wi - wj)
    snc = 1.0 if x == 0.0 else np.sin(x) / x
    return -1j * dt * np.exp(-0.5j * dt * (wi + wj)) * snc


@numba.njit(**_JIT)
def phi_alpha_grad(H, mu, basis, values, dt, psi0, psi1):
    """``phi_m`` and ``d phi_m / d alpha_j`` for ``mu(alpha) = mu`` and directions ``basis``."""
    m, n = values.shape
    N = H.shape[0]
    K = basis.shape[0]
    phis = np.empty(m, dtype=np.complex128)
    jac = np.zeros((m, K), dtype=np.complex128)
    W = np.empty((n, N))
    Vs = np.empty((n, N, N))
    B = np.empty((n, N), dtype=np.complex128)
    G = np.empty((N, N))
    psi = np.empty(N, dtype=np.complex128)
    b = np.empty(N, dtype=np.complex128)
    a = np.empty(N, dtype=np.complex128)
    Y = np.empty((N, N), dtype=np.complex128)
    T = np.empty((N, N), dtype=np.complex128)
    for c in range(m):
        psi[:] = psi0
        for k in range(n):
            x = values[c, k]
            for i in range(N):
                for j in range(N):
                    G[i, j] = H[i, j] + x * mu[i, j]
            jacobi_eigh(G, W[k], Vs[k])
            V = Vs[k]
            for i in range(N):
                acc = 0.0j
                for j in range(N):
                    acc += V[j, i] * psi[j]
                B[k, i] = acc
                b[i] = acc * np.exp(-1j * dt * W[k, i])
            for i in range(N):
                acc = 0.0j
                for j in range(N):
                    acc += V[i, j] * b[j]
                psi[i] = acc
        val = 0.0j
        for i in range(N):
            val += np.conj(psi1[i]) * psi[i]
        phis[c] = val
        # backward pass; chi holds chi_{k+1}
        chi = psi1.copy()
        S = np.zeros((N, N), dtype=np.complex128)
        for k in range(n - 1, -1, -1):
            V = Vs[k]
            for i in range(N):
                acc = 0.0j
                for j in range(N):
                    acc += V[j, i] * chi[j]
                a[i] = acc
            x = values[c, k]
            if x != 0.0:
                for i in range(N):
                    for j in range(N):
                        Y[i, j] = _divided(W[k, i], W[k, j], dt) * np.conj(a[i]) * B[k, j] * x
                for i in range(N):
                    for j in range(N):
                        acc = 0.0j
                        for l in range(N):
                            acc += V[i, l] * Y[l, j]
                        T[i, j] = acc
                for i in range(N):
                    for j in range(N):
                        acc = 0.0j
                        for l in range(N):
                            acc += T[i, l] * V[j, l]
                        S[i, j] += acc
            for i in range(N):
                a[i] *= np.exp(1j * dt * W[k, i])
            for i in range(N):
                acc = 0.0j
                for j in range(N):
                    acc += V[i, j] * a[j]
                chi[i] = acc
        for q in range(K):
            acc = 0.0j
            for i in range(N):
                for j in range(N):
                    acc += S[i, j] * basis[q, i, j]
            jac[c, q] = acc
    return phis, jac


@numba.njit(**_JIT)
def propagate_pair(H, mus, values, dt, psi0, W, Vs):
    """Joint forward pass for two dipoles; fills eigendata ``W (2,n,N)``, ``Vs (2,n,N,N)``."""
    n = values.shape[0]
    N = H.shape[0]
    G = np.empty((N, N))
    out = np.empty((2, N), dtype=np.complex128)
    b = np.empty(N, dtype=np.complex128)
    for s in range(2):
        psi = psi0.copy()
        for k in range(n):
            for i in range(N):
                for j in range(N):
                    G[i, j] = H[i, j] + values[k] * mus[s, i, j]
            jacobi_eigh(G, W[s, k], Vs[s, k])
            V = Vs[s, k]
            for i in range(N):
                acc = 0.0j
                for j in range(N):
                    acc += V[j, i] * psi[j]
                b[i] = acc * np.exp(-1j * dt * W[s, k, i])
            for i in range(N):
                acc = 0.0j
                for j in range(N):
                    acc += V[i, j] * b[j]
                psi[i] = acc
        out[s] = psi
    return out


@numba.njit(**_JIT)
def costates_pair(W, Vs, chi_final, dt):
    """``out[s, k] = chi_{k+1}`` for both systems, from ``chi_n = chi_final[s]``."""
    n, N = W.shape[1], W.shape[2]
    out = np.empty((2, n, N), dtype=np.complex128)
    a = np.empty(N, dtype=np.complex128)
    for s in range(2):
        chi = chi_final[s].copy()
        for k in range(n - 1, -1, -1):
            out[s, k] = chi
            V = Vs[s, k]
            for i in range(N):
                acc = 0.0j
                for j in range(N):
                    acc += V[j, i] * chi[j]
                a[i] = acc * np.exp(1j * dt * W[s, k, i])
            for i in range(N):
                acc = 0.0j
                for j in range(N):
                    acc += V[i, j] * a[j]
                chi[i] = acc
    return out


@numba.njit(**_JIT)
def sweep_pair(H, mus, eps, chi_next, W, Vs, psi0, dt, lam, curv, W_new, Vs_new):
    """One forward update sweep (see ``monotonic``); returns new values and final states.

    Reads the old eigendata ``W``, ``Vs`` and writes those of the new control
    into ``W_new``, ``Vs_new``.
    """
    n = eps.shape[0]
    N = H.shape[0]
    new = eps.copy()
    psi = np.empty((2, N), dtype=np.complex128)
    for s in range(2):
        psi[s] = psi0
    G = np.empty((N, N))
    a = np.empty(N, dtype=np.complex128)
    b = np.empty(N, dtype=np.complex128)
    denom = curv + 2.0 * lam * dt
    for k in range(n):
        grad = 0.0
        for s in range(2):
            V = Vs[s, k]
            for i in range(N):
                ai = 0.0j
                bi = 0.0j
                for j in range(N):
                    ai += V[j, i] * chi_next[s, k, j]
                    bi += V[j, i] * psi[s, j]
                a[i] = ai
                b[i] = bi
            acc = 0.0j
            for i in range(N):
                for j in range(N):
                    mt = 0.0
                    for p in range(N):
                        for q in range(N):
                            mt += V[p, i] * mus[s, p, q] * V[q, j]
                    acc += np.conj(a[i]) * _divided(W[s, k, i], W[s, k, j], dt) * mt * b[j]
            grad += 2.0 * acc.real
        if denom > 0.0:
            new[k] = (grad + curv * eps[k]) / denom
        for s in range(2):
            for i in range(N):
                for j in range(N):
                    G[i, j] = H[i, j] + new[k] * mus[s, i, j]
            jacobi_eigh(G, W_new[s, k], Vs_new[s, k])
            V = Vs_new[s, k]
            for i in range(N):
                acc = 0.0j
                for j in range(N):
                    acc += V[j, i] * psi[s, j]
                b[i] = acc * np.exp(-1j * dt * W_new[s, k, i])
            for i in range(N):
                acc = 0.0j
                for j in range(N):
                    acc += V[i, j] * b[j]
                psi[s, i] = acc
    return new, psi
