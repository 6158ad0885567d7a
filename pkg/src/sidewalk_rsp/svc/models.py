"""Trained SVC uncertainty sets (single-kernel and multiple-kernel)."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from ..optcore import LpProblem, Status, solve_lp
from ..scenarios import DimensionMismatch
from .kernel import WgikKernel, build_wgik
from .qp import NoConvergence, solve_svc_dual

log = logging.getLogger(__name__)

EPS_SV = 1e-8
KKT_TOL = 1e-9


class DegenerateData(ValueError):
    pass


def _unique_planes(G, h):
    """Normalise rows of ``G u = h`` and drop duplicates."""
    nrm = np.linalg.norm(G, axis=1)
    keep = nrm > 0
    Gn, hn = G[keep] / nrm[keep, None], h[keep] / nrm[keep]
    # orient so the first nonzero coordinate is positive
    first = np.array([row[np.nonzero(np.abs(row) > 1e-12)[0][0]] for row in Gn])
    sgn = np.sign(first)
    Gn, hn = Gn * sgn[:, None], hn * sgn
    key = np.round(np.column_stack([Gn, hn]), 10)
    _, idx = np.unique(key, axis=0, return_index=True)
    idx = np.sort(idx)
    return Gn[idx], hn[idx]


@dataclass(frozen=True)
class L1Set:
    """Polyhedron ``{u : sum_k w_k |G_k u - h_k| <= theta}``.

    Both SVC variants reduce to this form, which makes the support
    function a small LP.
    """

    G: np.ndarray
    h: np.ndarray
    w: np.ndarray
    theta: float

    @property
    def dim(self) -> int:
        return self.G.shape[1]

    def value(self, u) -> float:
        u = np.asarray(u, dtype=float)
        return float(self.w @ np.abs(self.G @ u - self.h))

    def contains(self, u, tol=1e-9) -> bool:
        return self.value(u) <= self.theta + tol * max(1.0, abs(self.theta))

    @property
    def bounded(self) -> bool:
        return bool(np.linalg.matrix_rank(self.G[self.w > 0]) == self.dim)

    def support_lp(self, x) -> LpProblem:
        """Primal inner problem ``max x^T u`` over the set (variables u, v)."""
        x = np.asarray(x, dtype=float)
        d, K = self.dim, self.h.size
        c = np.concatenate([-x, np.zeros(K)])
        I = np.eye(K)
        A = np.vstack([
            np.hstack([self.G, -I]),       # G u - v <= h
            np.hstack([-self.G, -I]),      # -G u - v <= -h
            np.concatenate([np.zeros(d), self.w])[None, :],
        ])
        b = np.concatenate([self.h, -self.h, [self.theta]])
        lo = np.concatenate([np.full(d, -np.inf), np.zeros(K)])
        hi = np.full(d + K, np.inf)
        return LpProblem(c, A, ["<="] * (2 * K + 1), b, lo, hi)

    def support(self, x) -> tuple[float, np.ndarray]:
        """Worst case ``max_{u in set} x^T u`` and a maximizer (via LP)."""
        r = solve_lp(self.support_lp(x))
        if r.status == Status.UNBOUNDED:
            return np.inf, np.full(self.dim, np.nan)
        if not r.ok:
            raise RuntimeError(f"support LP failed: {r.status.value}")
        return -r.objective, r.x[: self.dim]

    def vertices(self) -> np.ndarray:
        """Finite superset of the polytope's vertices (dimensions 2 and 3).

        The boundary can only bend where it crosses a breakpoint hyperplane
        ``G_k u = h_k``, so every vertex lies on a line formed by
        ``dim - 1`` of those hyperplanes.  Each line is intersected with
        the level set in closed form.
        """
        d = self.dim
        if d not in (2, 3):
            raise ValueError("vertex enumeration is implemented for 2 and 3 dimensions")
        G, h = _unique_planes(self.G, self.h)
        lines = []
        if d == 2:
            for g, c in zip(G, h):
                e = np.array([-g[1], g[0]])
                p = g * c / (g @ g)
                lines.append((p, e))
        else:
            for a in range(len(G)):
                for b in range(a + 1, len(G)):
                    e = np.cross(G[a], G[b])
                    if np.linalg.norm(e) < 1e-12 * np.linalg.norm(G[a]) * np.linalg.norm(G[b]):
                        continue
                    M = np.vstack([G[a], G[b], e])
                    p = np.linalg.solve(M, np.array([h[a], h[b], 0.0]))
                    lines.append((p, e))
        pts = []
        for p, e in lines:
            pts.extend(self._line_hits(p, e))
        if not pts:
            # set is a single point (or empty); fall back to the minimiser
            return np.atleast_2d(self._argmin_point())
        pts = np.unique(np.array(pts), axis=0)
        if pts.shape[0] > d + 1:
            try:
                pts = pts[np.sort(ConvexHull(pts).vertices)]
            except QhullError:
                pass
        return pts

    def _line_hits(self, p, e):
        a = self.G @ e
        b = self.G @ p - self.h
        nz = np.abs(a) > 1e-14 * max(1.0, np.abs(a).max())
        if not nz.any():
            return []
        bps = np.sort(-b[nz] / a[nz])
        vals = np.abs(np.outer(bps, a) + b) @ self.w
        k = int(np.argmin(vals))
        tol = 1e-12 * max(1.0, abs(self.theta))
        if vals[k] > self.theta + tol:
            return []
        slope_lo = -float(np.abs(a) @ self.w)  # slope left of every breakpoint
        out = []
        # walk outward from the minimum on each side
        for direction in (-1, 1):
            j = k
            while 0 <= j + direction < bps.size and vals[j + direction] <= self.theta:
                j += direction
            s0, v0 = bps[j], vals[j]
            if 0 <= j + direction < bps.size:
                s1, v1 = bps[j + direction], vals[j + direction]
                s = s0 if v1 <= v0 else s0 + max(self.theta - v0, 0.0) * (s1 - s0) / (v1 - v0)
            else:
                slope = -slope_lo  # magnitude of outer slope
                s = s0 + direction * max(self.theta - v0, 0.0) / slope
            out.append(p + s * e)
        return out

    def _argmin_point(self):
        r = solve_lp(LpProblem(
            np.concatenate([np.zeros(self.dim), self.w]),
            np.vstack([np.hstack([self.G, -np.eye(self.h.size)]),
                       np.hstack([-self.G, -np.eye(self.h.size)])]),
            ["<="] * (2 * self.h.size), np.concatenate([self.h, -self.h]),
            np.concatenate([np.full(self.dim, -np.inf), np.zeros(self.h.size)]),
            np.full(self.dim + self.h.size, np.inf)))
        return r.x[: self.dim]


@dataclass(frozen=True)
class SvcModel:
    alpha: np.ndarray
    sv_index: np.ndarray
    bsv_index: np.ndarray
    theta: float
    kernel: WgikKernel
    data: np.ndarray
    nu: float
    columns: tuple = ()
    residual: float = 0.0

    @property
    def sv_alpha(self) -> np.ndarray:
        return self.alpha[self.sv_index]

    def score(self, u) -> np.ndarray:
        """``sum_i alpha_i ||Q (u - u_i)||_1`` for each row of ``u``."""
        U = np.atleast_2d(np.asarray(u, dtype=float))
        if U.shape[1] != self.kernel.dim:
            raise DimensionMismatch(f"expected {self.kernel.dim} columns, got {U.shape[1]}")
        return self.kernel.distances(U, self.data) @ self.sv_alpha

    def polyhedron(self) -> L1Set:
        Q = self.kernel.q_matrix
        n = Q.shape[0]
        G = np.tile(Q, (self.data.shape[0], 1))
        h = (self.data @ Q.T).ravel()
        w = np.repeat(self.sv_alpha, n)
        return L1Set(G, h, w, self.theta)

    def theta_candidates(self) -> np.ndarray:
        """Threshold implied by each boundary support vector."""
        pos = np.searchsorted(self.sv_index, self.bsv_index)
        return self.score(self.data[pos]) if pos.size else np.empty(0)


def membership(u, model, tol: float = 1e-9) -> bool:
    """Whether ``u`` lies in the uncertainty set of ``model``."""
    if isinstance(model, MklModel):
        return bool(model.decision_distance(u)[0] <= model.threshold + tol * max(1.0, model.threshold))
    return bool(model.score(u)[0] <= model.theta + tol * max(1.0, model.theta))


def _box(nu: float, N: int) -> float:
    if not 0 < nu <= 1:
        raise ValueError(f"nu must lie in (0, 1], got {nu}")
    return 1.0 / (N * nu)


def _sv_sets(alpha, C, eps=EPS_SV):
    sv = np.nonzero(alpha > eps)[0]
    bsv = np.nonzero((alpha > eps) & (alpha < C - eps))[0]
    return sv, bsv


def _check_data(X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] < 2:
        raise DegenerateData("at least two samples are required")
    if not np.all(np.isfinite(X)):
        raise DegenerateData("samples must be finite")
    return X


def train_svc(D_f, nu: float, columns=(), kernel: WgikKernel | None = None,
              tol: float = KKT_TOL, max_sweeps: int | None = None) -> SvcModel:
    """Fit the single-kernel SVC set on the rows of ``D_f``."""
    X = _check_data(D_f)
    N = X.shape[0]
    C = _box(nu, N)
    kernel = build_wgik(X) if kernel is None else kernel
    K = kernel.gram(X)
    kw = {} if max_sweeps is None else {"max_sweeps": max_sweeps}
    res = solve_svc_dual(K, C, tol=tol, **kw)
    alpha = res.alpha
    sv, bsv = _sv_sets(alpha, C)
    dist = kernel.distances(X[sv], X[sv]) @ alpha[sv]
    if bsv.size:
        theta = float(dist[np.searchsorted(sv, bsv[0])])
    else:
        log.info("no boundary support vectors; threshold falls back to the SV maximum")
        theta = float(dist.max())
    alpha.setflags(write=False)
    return SvcModel(alpha, sv, bsv, max(theta, 0.0), kernel, X[sv].copy(), float(nu),
                    tuple(columns), res.residual)


# ---------------------------------------------------------------- MKL

def kernel_directions(dim: int, m: int) -> np.ndarray:
    """Unit directions spanning half the sphere (``u`` and ``-u`` coincide)."""
    if dim == 1:
        return np.ones((1, 1))
    if dim == 2:
        ang = np.arange(m) * np.pi / m
        return np.column_stack([np.cos(ang), np.sin(ang)])
    if dim == 3:
        # Fibonacci lattice on the upper hemisphere
        k = np.arange(m) + 0.5
        z = k / m
        phi = k * np.pi * (3.0 - np.sqrt(5.0))
        r = np.sqrt(1.0 - z ** 2)
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    raise ValueError("multiple-kernel sets support at most three dimensions")


@dataclass(frozen=True)
class MklModel:
    directions: np.ndarray
    scales: np.ndarray
    kappa: float
    weights: np.ndarray
    alpha: np.ndarray
    rho: float
    selected_kernels: np.ndarray
    sv_index: np.ndarray
    bsv_index: np.ndarray
    data: np.ndarray
    nu: float
    columns: tuple = ()
    iterations: int = 0
    history: list = field(default_factory=list, compare=False)

    @property
    def sv_alpha(self):
        return self.alpha[self.sv_index]

    @property
    def threshold(self) -> float:
        """Right-hand side of the L1 form: ``1 - rho``."""
        return 1.0 - self.rho

    def decision(self, u) -> np.ndarray:
        """Kernel expansion ``sum_i alpha_i sum_m pi_m K_m(u, u_i)``."""
        return 1.0 - self.decision_distance(u)

    def decision_distance(self, u) -> np.ndarray:
        U = np.atleast_2d(np.asarray(u, dtype=float))
        if U.shape[1] != self.directions.shape[1]:
            raise DimensionMismatch("dimension differs from the model")
        sk = self.selected_kernels
        W = self.directions[sk] / (self.scales[sk] * self.kappa)[:, None]
        PU, PD = U @ W.T, self.data @ W.T
        dist = np.abs(PU[:, None, :] - PD[None, :, :]) @ self.weights[sk]
        return dist @ self.sv_alpha

    def polyhedron(self) -> L1Set:
        sk = self.selected_kernels
        W = self.directions[sk] / (self.scales[sk] * self.kappa)[:, None]
        G = np.tile(W, (self.data.shape[0], 1))
        h = (self.data @ W.T).ravel()
        w = np.outer(self.sv_alpha, self.weights[sk]).ravel()
        return L1Set(G, h, w, self.threshold)


def _proj_simplex(v):
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, v.size + 1)
    r = np.nonzero(u - css / k > 0)[0][-1]
    return np.maximum(v - css[r] / (r + 1), 0.0)


def train_mkl(D_f, nu: float, m_kernels: int = 16, mu: float = 0.2, kappa: float = 1.0,
              columns=(), tol: float = 1e-5, max_outer: int = 500,
              select_eps: float = 1e-6) -> MklModel:
    """Alternate between the SVC dual and a projected-gradient weight update.

    The weights minimise ``J(pi) + mu/2 ||pi||^2`` over the simplex, where
    ``J`` is the optimal dual value for the combined kernel.  A smaller
    ``mu`` pushes the weights toward a vertex.
    """
    X = _check_data(D_f)
    N, d = X.shape
    C = _box(nu, N)
    Qd = kernel_directions(d, m_kernels)
    M = Qd.shape[0]
    P = X @ Qd.T
    span = P.max(axis=0) - P.min(axis=0)
    scales = np.where(span > 0, span, 1.0)
    Ks = 1.0 - np.abs(P[:, None, :] - P[None, :, :]) / (scales * kappa)  # N x N x M

    def inner(pi, a0=None):
        K = Ks @ pi
        r = solve_svc_dual(K, C, tol=KKT_TOL, alpha0=a0)
        a = r.alpha
        quad = np.einsum("i,ijm,j->m", a, Ks, a)
        J = float(pi @ (1.0 - quad))
        return a, J, 1.0 - quad

    pi = np.full(M, 1.0 / M)
    alpha, J, grad = inner(pi)
    phi = J + 0.5 * mu * pi @ pi
    step = 0.5 / max(mu, 1e-3)
    max_step = 100 * step
    history = [phi]
    it = 0
    converged = False
    while it < max_outer:
        it += 1
        cand = _proj_simplex(pi - step * (grad + mu * pi))
        a_c, J_c, g_c = inner(cand, alpha)
        phi_c = J_c + 0.5 * mu * cand @ cand
        move = float(np.abs(cand - pi).max())
        if phi_c > phi + 1e-12 and move > tol:
            step *= 0.5
            continue
        pi, alpha, grad, phi = cand, a_c, g_c, phi_c
        history.append(phi)
        step = min(1.5 * step, max_step)   # regrow after backtracking
        if move < tol:
            converged = True
            break
    if not converged:
        raise NoConvergence(f"kernel weights did not settle in {max_outer} updates")

    sk = np.nonzero(pi > select_eps)[0]
    pi = np.where(pi > select_eps, pi, 0.0)
    pi = pi / pi.sum()
    K = Ks @ pi
    alpha = solve_svc_dual(K, C, tol=KKT_TOL, alpha0=alpha).alpha
    sv, bsv = _sv_sets(alpha, C)
    dec = K[sv][:, sv] @ alpha[sv]
    if bsv.size:
        rho = float(dec[np.searchsorted(sv, bsv[0])])
    else:
        rho = float(dec.min())
    alpha.setflags(write=False)
    return MklModel(Qd, scales, float(kappa), pi, alpha, rho, sk, sv, bsv, X[sv].copy(),
                    float(nu), tuple(columns), it, history)
