"""Shared pieces of the robust path solvers."""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field

import numpy as np

from ..network import Network, OdPair, Path, flow_constraints, shortest_path
from ..optcore import GE, LE, Cut, LpProblem, MipProblem, SolveReport

GAP_TOL = 1e-9


class SolverFailure(RuntimeError):
    def __init__(self, msg, report: SolveReport | None = None):
        super().__init__(msg)
        self.report = report


class Method(str, enum.Enum):
    NOMINAL = "nominal"
    BUDGETED = "budgeted"
    ELLIPSOIDAL = "ellipsoidal"
    SVC = "svc"
    MKL = "mkl"
    DRSP = "drsp"


@dataclass
class RobustSolution:
    path: Path
    objective: float
    method: Method
    parameter: float
    diagnostics: dict = field(default_factory=dict)


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0


def flow_master(network: Network, od: OdPair, n_extra: int, c_extra, lo_extra, hi_extra,
                c_x=None) -> MipProblem:
    """Flow-balance MILP over ``[x, extra...]`` with binary ``x``."""
    fc = flow_constraints(network, od)
    n = network.n
    A = np.hstack([fc.A_eq, np.zeros((fc.A_eq.shape[0], n_extra))])
    c = np.concatenate([np.zeros(n) if c_x is None else np.asarray(c_x, dtype=float),
                        np.asarray(c_extra, dtype=float)])
    lo = np.concatenate([fc.lo, np.asarray(lo_extra, dtype=float)])
    hi = np.concatenate([fc.hi, np.asarray(hi_extra, dtype=float)])
    lp = LpProblem(c, A, ["="] * A.shape[0], fc.b_eq, lo, hi)
    mask = np.zeros(n + n_extra, dtype=bool)
    mask[:n] = True
    return MipProblem(lp, mask)


def find_cycle(network: Network, chosen: set) -> list[int] | None:
    """Segment ids of some directed cycle among ``chosen`` segments."""
    out = {}
    for j in sorted(chosen):
        s = network.segments[j]
        out.setdefault(s.tail, []).append(s)
    color = {}
    for start in sorted(out):
        if color.get(start):
            continue
        stack = [(start, iter(out.get(start, [])))]
        trail = []
        color[start] = 1
        while stack:
            v, it = stack[-1]
            s = next(it, None)
            if s is None:
                color[v] = 2
                stack.pop()
                if trail:
                    trail.pop()
                continue
            w = s.head
            if color.get(w) == 1:
                cyc = [s.id]
                for seg in reversed(trail):
                    cyc.append(seg.id)
                    if seg.tail == w:
                        break
                return sorted(cyc)
            if not color.get(w):
                color[w] = 1
                trail.append(s)
                stack.append((w, iter(out.get(w, []))))
    return None


def cycle_cuts(network: Network, n_total: int, int_tol: float = 1e-6):
    """Oracle cutting off integral flows that contain a directed cycle."""
    n = network.n

    def oracle(y):
        x = y[:n]
        if np.any(np.abs(x - np.round(x)) > int_tol):
            return []
        cyc = find_cycle(network, {j for j in range(n) if x[j] > 0.5})
        if cyc is None:
            return []
        a = np.zeros(n_total)
        a[cyc] = 1.0
        return [Cut(a, LE, len(cyc) - 1.0)]

    return oracle


def combine(*oracles):
    def oracle(y):
        out = []
        for o in oracles:
            out.extend(o(y))
        return out
    return oracle


def integral_path(network: Network, y, od: OdPair) -> Path:
    from ..network import path_from_flow
    return path_from_flow(network, np.round(y[: network.n]), od)


class PathHeuristic:
    """Rounds an LP point by a shortest path on LP-biased costs.

    Each distinct path is evaluated once with the exact robust objective.
    """

    def __init__(self, network, od, base_costs, evaluate, embed):
        self.network, self.od = network, od
        self.base = np.maximum(np.asarray(base_costs, dtype=float), 1e-9)
        self.evaluate, self.embed = evaluate, embed
        self.cache = {}
        self.best = None

    def value(self, path: Path) -> float:
        key = path.segments
        if key not in self.cache:
            self.cache[key] = self.evaluate(path)
        return self.cache[key]

    def offer(self, path: Path):
        v = self.value(path)
        if self.best is None or v < self.best[1] - 1e-12:
            self.best = (path, v)
        return v

    def seed(self, cost_vectors):
        for c in cost_vectors:
            path, _ = shortest_path(self.network, np.maximum(c, 0.0), self.od)
            self.offer(path)
        return self.incumbent()

    def incumbent(self):
        if self.best is None:
            return None
        path, v = self.best
        return self.embed(path), v

    def __call__(self, y):
        x = np.clip(y[: self.network.n], 0.0, 1.0)
        path, _ = shortest_path(self.network, self.base * (1.5 - x), self.od)
        v = self.offer(path)
        return self.embed(path), v


def finish(report: SolveReport, network, od, method, param, evaluate, timer, extra=None):
    if report.x is None:
        raise SolverFailure(f"{method.value} solve ended with status {report.status.value}", report)
    path = integral_path(network, report.x, od)
    diag = {"status": report.status.value, "nodes": report.nodes, "gap": report.gap,
            "cuts": report.cuts_added, "wall_time": timer.seconds,
            "mip_objective": report.objective}
    if extra:
        diag.update(extra)
    return RobustSolution(path, float(evaluate(path)), method, float(param), diag)
