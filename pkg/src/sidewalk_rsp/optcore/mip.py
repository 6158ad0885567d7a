"""Best-first branch and bound with a lazy cutting-plane hook."""

from __future__ import annotations

import heapq
import itertools
import logging
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .lp import EQ, GE, LE, LpProblem, SolveReport, Status, solve_lp

log = logging.getLogger(__name__)

INT_TOL = 1e-6
GAP_TOL = 1e-6
CUT_CAP = 50


@dataclass
class MipProblem:
    lp: LpProblem
    integer_mask: np.ndarray

    def __post_init__(self):
        self.integer_mask = np.asarray(self.integer_mask, dtype=bool).ravel()
        if self.integer_mask.size != self.lp.n_vars:
            raise ValueError("integer mask length differs from variable count")
        masked = self.integer_mask
        if not (np.all(np.isfinite(self.lp.lo[masked])) and np.all(np.isfinite(self.lp.hi[masked]))):
            raise ValueError("integer variables need finite bounds")


@dataclass(frozen=True)
class Cut:
    """Linear inequality ``coeffs @ y  sense  rhs``."""

    coeffs: np.ndarray
    sense: str
    rhs: float

    def violation(self, y: np.ndarray) -> float:
        lhs = float(self.coeffs @ y)
        if self.sense == GE:
            return self.rhs - lhs
        if self.sense == LE:
            return lhs - self.rhs
        return abs(lhs - self.rhs)


CutOracle = Callable[[np.ndarray], Iterable[Cut]]
Heuristic = Callable[[np.ndarray], "tuple[np.ndarray, float] | None"]


def _fractionality(y, mask, tol):
    vals = y[mask]
    frac = np.abs(vals - np.round(vals))
    return np.nonzero(mask)[0], frac, bool(np.all(frac <= tol))


def solve_mip(p: MipProblem, cuts: CutOracle | None = None, *,
              node_limit: int = 20_000, gap_tol: float = GAP_TOL,
              int_tol: float = INT_TOL, cut_cap: int = CUT_CAP,
              cut_tol: float = 1e-9, heuristic: Heuristic | None = None,
              incumbent: "tuple[np.ndarray, float] | None" = None) -> SolveReport:
    """Minimize a mixed-integer program.

    Nodes are explored best-bound first and split on the most fractional
    integer variable (lowest index on ties).  When ``cuts`` is given it is
    called at every node LP solution and the returned inequalities, which
    must be valid for every feasible integer point, join a global pool.
    A node whose integer part is integral is accepted only once the
    oracle reports no violated cut.
    """
    base = p.lp
    mask = p.integer_mask
    pool_A: list[np.ndarray] = []
    pool_s: list[str] = []
    pool_b: list[float] = []

    best_x = None
    best_obj = np.inf
    if incumbent is not None:
        best_x, best_obj = np.asarray(incumbent[0], dtype=float), float(incumbent[1])

    def threshold():
        if not np.isfinite(best_obj):
            return np.inf
        return best_obj - gap_tol * max(1.0, abs(best_obj))

    def node_lp(lo, hi):
        lp = LpProblem(base.c, base.A, base.senses, base.b, lo, hi, base.names)
        if pool_A:
            lp = lp.with_rows(np.vstack(pool_A), pool_s, pool_b)
        return lp

    counter = itertools.count()
    heap = [(-np.inf, next(counter), base.lo.copy(), base.hi.copy())]
    nodes = 0
    lp_iters = 0
    n_cuts = 0
    unbounded = False

    while heap:
        bound, _, lo, hi = heapq.heappop(heap)
        if bound >= threshold():
            continue
        if nodes >= node_limit:
            heapq.heappush(heap, (bound, next(counter), lo, hi))
            break
        nodes += 1
        rounds = 0
        r = None
        accepted = False
        while True:
            r = solve_lp(node_lp(lo, hi))
            lp_iters += r.iterations
            if r.status != Status.OPTIMAL:
                break
            if r.objective >= threshold():
                break
            idx, frac, integral = _fractionality(r.x, mask, int_tol)
            new = []
            if cuts is not None:
                for cut in cuts(r.x):
                    scale = max(1.0, abs(cut.rhs))
                    if cut.violation(r.x) > cut_tol * scale:
                        new.append(cut)
            if not new:
                accepted = integral
                break
            if not integral and rounds >= cut_cap:
                break
            if integral and rounds >= 20 * cut_cap:
                log.warning("cut loop did not settle at an integral node")
                break
            for cut in new:
                pool_A.append(np.asarray(cut.coeffs, dtype=float))
                pool_s.append(cut.sense)
                pool_b.append(float(cut.rhs))
            n_cuts += len(new)
            rounds += 1

        if r.status == Status.UNBOUNDED:
            unbounded = True
            break
        if r.status != Status.OPTIMAL or r.objective >= threshold():
            continue
        idx, frac, integral = _fractionality(r.x, mask, int_tol)
        if accepted:
            x = r.x.copy()
            x[mask] = np.round(x[mask])
            best_x, best_obj = x, r.objective
            continue
        if integral:
            continue
        if heuristic is not None:
            cand = heuristic(r.x)
            if cand is not None and cand[1] < best_obj:
                best_x, best_obj = np.asarray(cand[0], dtype=float), float(cand[1])
                if r.objective >= threshold():
                    continue
        # most fractional: distance to 0.5 smallest, lowest index on ties
        dist = np.abs(frac - 0.5)
        cand = np.nonzero(frac > int_tol)[0]
        pick = cand[np.argmin(dist[cand])]
        j = int(idx[pick])
        v = r.x[j]
        down_hi = hi.copy()
        down_hi[j] = np.floor(v)
        up_lo = lo.copy()
        up_lo[j] = np.ceil(v)
        heapq.heappush(heap, (r.objective, next(counter), lo.copy(), down_hi))
        heapq.heappush(heap, (r.objective, next(counter), up_lo, hi.copy()))

    info = {"lp_iterations": lp_iters}
    if unbounded:
        return SolveReport(Status.UNBOUNDED, nodes=nodes, cuts_added=n_cuts, info=info)
    open_bounds = [h[0] for h in heap if h[0] < threshold()]
    if best_x is None:
        status = Status.NODE_LIMIT if open_bounds else Status.INFEASIBLE
        return SolveReport(status, nodes=nodes, cuts_added=n_cuts, info=info)
    lower = min(open_bounds) if open_bounds else best_obj
    gap = max(0.0, (best_obj - lower) / max(1.0, abs(best_obj)))
    status = Status.NODE_LIMIT if open_bounds else Status.OPTIMAL
    if status == Status.OPTIMAL:
        gap = min(gap, gap_tol)
    return SolveReport(status, x=best_x, objective=best_obj, nodes=nodes, gap=gap,
                       cuts_added=n_cuts, iterations=lp_iters, info=info)
