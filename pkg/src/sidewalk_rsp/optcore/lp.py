"""Dense two-phase primal simplex.

Problems are stated as ``min c @ y`` subject to row constraints
``A[i] @ y  (<=, =, >=)  b[i]`` and box bounds ``lo <= y <= hi``
(infinite bounds allowed).  The solver rewrites the problem in standard
form over nonnegative variables, runs phase 1 on artificials and then
phase 2 on the original objective.  Dantzig pricing is used until a run
of degenerate pivots is detected, after which Bland's rule takes over
until the objective makes strict progress again.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

LE, EQ, GE = "<=", "=", ">="

FEAS_TOL = 1e-8
OPT_TOL = 1e-9
PIVOT_TOL = 1e-10
DEGENERACY_THRESHOLD = 30
HARRIS_TOL = 1e-9


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NODE_LIMIT = "node_limit"
    ITERATION_LIMIT = "iteration_limit"


@dataclass
class LpProblem:
    """Linear program ``min c @ y`` over rows and box bounds."""

    c: np.ndarray
    A: np.ndarray
    senses: list[str]
    b: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    names: list[str] | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n)
        self.b = np.asarray(self.b, dtype=float).ravel()
        self.senses = list(self.senses)
        self.lo = np.broadcast_to(np.asarray(self.lo, dtype=float), (n,)).copy()
        self.hi = np.broadcast_to(np.asarray(self.hi, dtype=float), (n,)).copy()
        m = self.A.shape[0]
        if self.b.size != m or len(self.senses) != m:
            raise ValueError("row count mismatch between A, b and senses")
        bad = [s for s in self.senses if s not in (LE, EQ, GE)]
        if bad:
            raise ValueError(f"unknown constraint sense {bad[0]!r}")
        if not (np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.b))
                and np.all(np.isfinite(self.c))):
            raise ValueError("coefficients must be finite")
        if np.any(self.lo > self.hi):
            raise ValueError("lower bound exceeds upper bound")

    @property
    def n_vars(self) -> int:
        return self.c.size

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    @classmethod
    def build(cls, c, A_ub=None, b_ub=None, A_eq=None, b_eq=None,
              A_ge=None, b_ge=None, lo=0.0, hi=np.inf) -> "LpProblem":
        c = np.asarray(c, dtype=float).ravel()
        n = c.size
        blocks, rhs, senses = [], [], []
        for mat, vec, sense in ((A_ub, b_ub, LE), (A_eq, b_eq, EQ), (A_ge, b_ge, GE)):
            if mat is None:
                continue
            mat = np.asarray(mat, dtype=float).reshape(-1, n)
            blocks.append(mat)
            rhs.append(np.asarray(vec, dtype=float).ravel())
            senses.extend([sense] * mat.shape[0])
        A = np.vstack(blocks) if blocks else np.zeros((0, n))
        b = np.concatenate(rhs) if rhs else np.zeros(0)
        return cls(c, A, senses, b, lo, hi)

    def with_rows(self, A, senses: Sequence[str], b) -> "LpProblem":
        A = np.asarray(A, dtype=float).reshape(-1, self.n_vars)
        if A.shape[0] == 0:
            return self
        return LpProblem(self.c, np.vstack([self.A, A]), self.senses + list(senses),
                         np.concatenate([self.b, np.asarray(b, dtype=float).ravel()]),
                         self.lo, self.hi, self.names)

    def to_lp_text(self) -> str:
        """Render in CPLEX LP text format for cross-checking elsewhere."""
        names = self.names or [f"y{j}" for j in range(self.n_vars)]

        def expr(coefs):
            parts = []
            for j, a in enumerate(coefs):
                if a != 0.0:
                    parts.append(f"{'+' if a >= 0 else '-'} {abs(a):.17g} {names[j]}")
            return " ".join(parts) if parts else "0 " + names[0]

        lines = ["Minimize", " obj: " + expr(self.c), "Subject To"]
        for i in range(self.n_rows):
            lines.append(f" r{i}: {expr(self.A[i])} {self.senses[i]} {self.b[i]:.17g}")
        lines.append("Bounds")
        for j, nm in enumerate(names):
            lo = "-inf" if np.isneginf(self.lo[j]) else f"{self.lo[j]:.17g}"
            hi = "+inf" if np.isposinf(self.hi[j]) else f"{self.hi[j]:.17g}"
            lines.append(f" {lo} <= {nm} <= {hi}")
        lines.append("End")
        return "\n".join(lines) + "\n"


@dataclass
class SolveReport:
    status: Status
    x: np.ndarray | None = None
    objective: float = np.nan
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    iterations: int = 0
    nodes: int = 0
    gap: float = np.nan
    cuts_added: int = 0
    info: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == Status.OPTIMAL


class _Standard:
    """Standard-form image of an LpProblem over nonnegative variables."""

    def __init__(self, p: LpProblem):
        n = p.n_vars
        fixed = p.lo == p.hi
        self.fixed = fixed
        offset = np.where(fixed, p.lo, 0.0)
        cols = []  # (original index, sign)
        ub_rows = []  # (standard column, width)
        for j in range(n):
            if fixed[j]:
                continue
            lo, hi = p.lo[j], p.hi[j]
            if np.isfinite(lo):
                offset[j] = lo
                cols.append((j, 1.0))
                if np.isfinite(hi):
                    ub_rows.append((len(cols) - 1, hi - lo))
            elif np.isfinite(hi):
                offset[j] = hi
                cols.append((j, -1.0))
            else:
                cols.append((j, 1.0))
                cols.append((j, -1.0))
        self.cols = cols
        self.offset = offset
        k = len(cols)
        M = np.zeros((n, k))
        for col, (j, sgn) in enumerate(cols):
            M[j, col] = sgn
        self.M = M
        self.c = p.c @ M
        self.c0 = float(p.c @ offset)
        A = p.A @ M
        b = p.b - p.A @ offset
        senses = list(p.senses)
        n_orig_rows = p.n_rows
        if ub_rows:
            U = np.zeros((len(ub_rows), k))
            for r, (col, width) in enumerate(ub_rows):
                U[r, col] = 1.0
            A = np.vstack([A, U])
            b = np.concatenate([b, [w for _, w in ub_rows]])
            senses += [LE] * len(ub_rows)
        self.A = A
        self.b = b
        self.senses = senses
        self.n_orig_rows = n_orig_rows
        self.ub_rows = ub_rows

    def recover(self, z: np.ndarray) -> np.ndarray:
        return self.offset + self.M @ z


def _pivot(T: np.ndarray, r: int, e: int) -> None:
    T[r] /= T[r, e]
    col = T[:, e].copy()
    col[r] = 0.0
    nz = np.nonzero(col)[0]
    if nz.size:
        T[nz] -= np.outer(col[nz], T[r])


def _simplex(T, basis, obj_row, allowed, max_iter, tol_opt=OPT_TOL, pinned=None):
    """Iterate on tableau ``T`` minimizing the objective held in ``obj_row``.

    Returns (status, iterations). The objective row stores reduced costs
    in the structural part and minus the objective value in the rhs cell.
    ``pinned`` flags columns that must stay at zero while basic (leftover
    artificials); any nonzero entry in their row blocks the step.
    """
    m = len(basis)
    it = 0
    degenerate_run = 0
    bland = False
    while it < max_iter:
        rc = T[obj_row, :-1]
        cand = np.nonzero((rc < -tol_opt) & allowed)[0]
        if cand.size == 0:
            return Status.OPTIMAL, it
        if bland:
            e = int(cand[0])
        else:
            e = int(cand[np.argmin(rc[cand])])
        colv = T[:m, e]
        if pinned is not None:
            stuck = np.nonzero(pinned[np.asarray(basis)] & (np.abs(colv) > PIVOT_TOL))[0]
            if stuck.size:
                r = int(stuck[0])
                _pivot(T, r, e)
                T[r, -1] = 0.0
                basis[r] = e
                it += 1
                continue
        pos = np.nonzero(colv > PIVOT_TOL)[0]
        if pos.size == 0:
            return Status.UNBOUNDED, it
        rhs = np.maximum(T[pos, -1], 0.0)
        ratios = rhs / colv[pos]
        best = ratios.min()
        if bland:
            ties = pos[ratios <= best + 1e-12 * max(1.0, abs(best))]
            r = int(ties[np.argmin(np.asarray(basis)[ties])])
        else:
            # Harris pass: within a small feasibility slack take the largest pivot
            relax = ((rhs + HARRIS_TOL) / colv[pos]).min()
            ok = ratios <= relax
            r = int(pos[ok][np.argmax(colv[pos][ok])])
            best = ratios[ok][np.argmax(colv[pos][ok])]
        if best <= 1e-12:
            degenerate_run += 1
            if degenerate_run > DEGENERACY_THRESHOLD:
                bland = True
        else:
            degenerate_run = 0
            bland = False
        _pivot(T, r, e)
        basis[r] = e
        neg = T[:m, -1] < 0
        if neg.any():
            T[:m, -1][neg] = 0.0
        it += 1
    return Status.ITERATION_LIMIT, it


def solve_lp(p: LpProblem, max_iter: int = 50_000, feas_tol: float = FEAS_TOL) -> SolveReport:
    """Solve ``p`` and return primal solution, row duals and reduced costs.

    Row duals follow the sensitivity convention ``d objective / d b_i``:
    nonpositive for ``<=`` rows and nonnegative for ``>=`` rows in a
    minimization.
    """
    std = _Standard(p)
    A, b = std.A.copy(), std.b.copy()
    senses = list(std.senses)
    m, k = A.shape
    flip = b < 0
    A[flip] *= -1
    b[flip] *= -1
    for i in np.nonzero(flip)[0]:
        if senses[i] == LE:
            senses[i] = GE
        elif senses[i] == GE:
            senses[i] = LE

    n_slack = sum(s != EQ for s in senses)
    n_art = sum(s != LE for s in senses)
    ncols = k + n_slack + n_art
    T = np.zeros((m + 2, ncols + 1))
    T[:m, :k] = A
    T[:m, -1] = b
    basis = [0] * m
    ident_col = [0] * m  # column holding +e_i in the initial tableau
    sc = k
    ac = k + n_slack
    art_cols = []
    for i, s in enumerate(senses):
        if s == LE:
            T[i, sc] = 1.0
            basis[i] = sc
            ident_col[i] = sc
            sc += 1
        else:
            if s == GE:
                T[i, sc] = -1.0
                sc += 1
            T[i, ac] = 1.0
            basis[i] = ac
            ident_col[i] = ac
            art_cols.append(ac)
            ac += 1
    is_art = np.zeros(ncols, dtype=bool)
    is_art[art_cols] = True

    cost = np.zeros(ncols)
    cost[:k] = std.c
    # phase-2 reduced costs; artificials carry zero cost
    T[m, :ncols] = cost
    T[m + 1, :ncols] = is_art.astype(float)
    for i in range(m):
        if is_art[basis[i]]:
            T[m + 1] -= T[i]

    iters = 0
    if art_cols:
        allowed = np.ones(ncols, dtype=bool)
        status, it = _simplex(T, basis, m + 1, allowed, max_iter)
        iters += it
        if status == Status.ITERATION_LIMIT:
            return SolveReport(Status.ITERATION_LIMIT, iterations=iters)
        scale = max(1.0, float(np.abs(b).max(initial=0.0)))
        if -T[m + 1, -1] > feas_tol * scale:
            return SolveReport(Status.INFEASIBLE, iterations=iters)
        # drive remaining artificials out of the basis
        for i in range(m):
            if is_art[basis[i]]:
                row = T[i, :ncols].copy()
                row[is_art] = 0.0
                cand = np.nonzero(np.abs(row) > 1e-9)[0]
                if cand.size:
                    e = int(cand[np.argmax(np.abs(row[cand]))])
                    _pivot(T, i, e)
                    basis[i] = e
    allowed = ~is_art
    status, it = _simplex(T, basis, m, allowed, max_iter - iters, pinned=is_art)
    iters += it
    if status != Status.OPTIMAL:
        return SolveReport(status, iterations=iters)

    # refine the basic solution and duals against the original data
    full = np.zeros((m, ncols))
    full[:, :k] = A
    sc = k
    ac = k + n_slack
    for i, s in enumerate(senses):
        if s == LE:
            full[i, sc] = 1.0
            sc += 1
        else:
            if s == GE:
                full[i, sc] = -1.0
                sc += 1
            full[i, ac] = 1.0
            ac += 1
    B = full[:, basis]
    zb = T[:m, -1].copy()
    pi = np.array([-T[m, ident_col[i]] for i in range(m)])
    try:
        zb_ref = np.linalg.solve(B, b)
        pi_ref = np.linalg.solve(B.T, cost[basis])
        resid = np.abs(B @ zb_ref - b).max(initial=0.0)
        if np.all(np.isfinite(zb_ref)) and resid <= 1e-9 * max(1.0, np.abs(b).max(initial=0.0)):
            zb, pi = zb_ref, pi_ref
    except np.linalg.LinAlgError:
        pass
    z = np.zeros(ncols)
    z[basis] = np.maximum(np.where(np.abs(zb) < 1e-13, 0.0, zb), 0.0)
    y = std.recover(z[:k])
    pi[flip] *= -1
    row_duals = pi[: std.n_orig_rows].copy()
    rc = p.c - row_duals @ p.A
    obj = float(p.c @ y)
    return SolveReport(Status.OPTIMAL, x=y, objective=obj, duals=row_duals,
                       reduced_costs=rc, iterations=iters)
