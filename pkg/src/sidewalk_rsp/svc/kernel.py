"""Weighted generalized intersection kernel (WGIK)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..scenarios import DimensionMismatch, unbiased_covariance

EIG_FLOOR = 1e-10
COV_RIDGE = 1e-8
SPAN_MARGIN = 1.01


@dataclass(frozen=True)
class WgikKernel:
    q_matrix: np.ndarray
    l: np.ndarray

    @property
    def dim(self) -> int:
        return self.l.size

    @property
    def offset(self) -> float:
        return float(self.l.sum())

    def distances(self, U, V) -> np.ndarray:
        """Pairwise ``||Q (u - v)||_1`` between rows of ``U`` and ``V``."""
        PU = np.atleast_2d(U) @ self.q_matrix.T
        PV = np.atleast_2d(V) @ self.q_matrix.T
        return np.abs(PU[:, None, :] - PV[None, :, :]).sum(axis=2)

    def gram(self, U, V=None) -> np.ndarray:
        return self.offset - self.distances(U, U if V is None else V)


def wgik(u, v, kernel: WgikKernel) -> float:
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if u.size != kernel.dim or v.size != kernel.dim:
        raise DimensionMismatch(f"kernel dimension {kernel.dim}, got {u.size} and {v.size}")
    return kernel.offset - float(np.abs(kernel.q_matrix @ (u - v)).sum())


def inverse_sqrt(S, floor: float = EIG_FLOOR) -> np.ndarray:
    w, V = np.linalg.eigh((S + S.T) / 2)
    w = np.maximum(w, floor * max(w.max(), 0.0) if w.max() > 0 else 1.0)
    Q = (V / np.sqrt(w)) @ V.T
    return (Q + Q.T) / 2


def build_wgik(X, ridge: float = COV_RIDGE, margin: float = SPAN_MARGIN) -> WgikKernel:
    """Kernel weighted by the inverse square root of the sample covariance.

    Offsets exceed the projected data span, which keeps the Gram matrix
    positive definite on the training rows.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    S = unbiased_covariance(X)
    tr = np.trace(S)
    S = S + (ridge * tr / S.shape[0] if tr > 0 else 1.0) * np.eye(S.shape[0])
    Q = inverse_sqrt(S)
    P = X @ Q.T
    span = P.max(axis=0) - P.min(axis=0)
    l = np.where(span > 0, margin * span, 1.0)
    return WgikKernel(Q, l)
