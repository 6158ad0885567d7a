"""Pairwise coordinate descent for the SVC dual.

Solves ``min a @ K @ a - diag(K) @ a`` subject to ``sum(a) == 1`` and
``0 <= a <= C``.  Each step moves mass between the maximal violating pair,
so the equality constraint and the box hold at every iterate.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from numba import njit

log = logging.getLogger(__name__)

KKT_TOL = 1e-9
MAX_SWEEPS = 100_000


class NoConvergence(RuntimeError):
    def __init__(self, msg, residual=np.nan):
        super().__init__(msg)
        self.residual = residual


@dataclass
class QpResult:
    alpha: np.ndarray
    objective: float
    residual: float
    iterations: int
    polished: bool


def dual_objective(K, alpha) -> float:
    return float(alpha @ K @ alpha - np.diag(K) @ alpha)


def kkt_residual(K, alpha, C, eps=1e-12) -> float:
    """Largest pairwise violation ``max_low g - min_up g`` (zero at optimum)."""
    g = 2.0 * K @ alpha - np.diag(K)
    up = alpha < C - eps
    low = alpha > eps
    if not up.any() or not low.any():
        return 0.0
    return max(0.0, float(g[low].max() - g[up].min()))


def _polish(K, alpha, C, eps):
    """Solve the equality-constrained KKT system on the free coordinates."""
    free = (alpha > eps) & (alpha < C - eps)
    at_c = alpha >= C - eps
    F = np.nonzero(free)[0]
    if F.size == 0:
        return None
    a = np.where(at_c, C, 0.0)
    budget = 1.0 - a.sum()
    diag = np.diag(K)
    # 2 K_FF a_F - b 1 = diag_F - 2 K_FU a_U,  1^T a_F = budget
    M = np.zeros((F.size + 1, F.size + 1))
    M[:-1, :-1] = 2.0 * K[np.ix_(F, F)]
    M[:-1, -1] = -1.0
    M[-1, :-1] = 1.0
    rhs = np.empty(F.size + 1)
    rhs[:-1] = diag[F] - 2.0 * K[F] @ a
    rhs[-1] = budget
    try:
        sol = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(sol)):
        return None
    aF = sol[:-1]
    if np.any(aF <= 0) or np.any(aF >= C):
        return None
    a[F] = aF
    return a


@njit(cache=True)
def _smo(K, alpha, C, tol, max_iter, eps):
    """Maximal-violating-pair updates in place; returns (updates, residual)."""
    N = K.shape[0]
    diag = np.diag(K).copy()
    g = 2.0 * K @ alpha - diag
    it = 0
    res = np.inf
    while it < max_iter:
        i, j = -1, -1
        gi, gj = np.inf, -np.inf
        for k in range(N):
            if alpha[k] < C - eps and g[k] < gi:
                gi, i = g[k], k
            if alpha[k] > eps and g[k] > gj:
                gj, j = g[k], k
        if i < 0 or j < 0:
            return it, 0.0
        res = gj - gi
        if res <= tol:
            return it, res
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        step = res / (2.0 * eta) if eta > 1e-15 else np.inf
        room_i = C - alpha[i]
        room_j = alpha[j]
        if step >= room_i or step >= room_j:
            if room_i <= room_j:
                step = room_i
                alpha[i] = C
                alpha[j] -= step
                if room_i == room_j:
                    alpha[j] = 0.0
            else:
                step = room_j
                alpha[j] = 0.0
                alpha[i] += step
        else:
            alpha[i] += step
            alpha[j] -= step
        for k in range(N):
            g[k] += 2.0 * step * (K[k, i] - K[k, j])
        it += 1
        if it % (50 * N + 1000) == 0:
            # rebuild the gradient to stop drift
            g = 2.0 * K @ alpha - diag
    return it, res


def solve_svc_dual(K, C: float, tol: float = KKT_TOL, max_sweeps: int = MAX_SWEEPS,
                   alpha0=None, eps: float = 1e-12) -> QpResult:
    K = np.asarray(K, dtype=float)
    N = K.shape[0]
    if C * N < 1 - 1e-12:
        raise ValueError("box bound too small: N * C must be at least 1")
    alpha = np.full(N, 1.0 / N) if alpha0 is None else np.array(alpha0, dtype=float)
    K = np.ascontiguousarray(K)
    it, res = _smo(K, alpha, float(C), float(tol), int(max_sweeps * max(N, 1)), float(eps))
    if res > tol:
        raise NoConvergence(f"SVC dual did not converge in {it} pair updates", residual=res)

    polished = False
    cand = _polish(K, alpha, C, eps=max(eps, 1e-10))
    if cand is not None:
        r2 = kkt_residual(K, cand, C)
        if r2 <= max(tol, kkt_residual(K, alpha, C)):
            alpha = cand
            polished = True
    alpha = np.clip(alpha, 0.0, C)
    residual = kkt_residual(K, alpha, C)
    return QpResult(alpha, dual_objective(K, alpha), residual, it, polished)
