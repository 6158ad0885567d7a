"""Robust and distributionally robust shortest-path solvers."""

from __future__ import annotations

import logging

import numpy as np

from ..network import Network, OdPair, shortest_path
from ..optcore import GE, Cut, solve_mip
from ..usets import BudgetedSet, EllipsoidSet, WassersteinAmbiguity
from .common import (GAP_TOL, Method, PathHeuristic, RobustSolution, SolverFailure, Timer,
                     combine, cycle_cuts, finish, flow_master)
from .evaluate import drsp_value, mett
from .sets import SubsetSupport

log = logging.getLogger(__name__)

NODE_LIMIT = 20_000


def solve_nominal(network: Network, costs, od: OdPair) -> RobustSolution:
    with Timer() as tm:
        path, cost = shortest_path(network, costs, od)
    return RobustSolution(path, cost, Method.NOMINAL, 0.0, {"wall_time": tm.seconds})


def solve_budgeted(network: Network, bset: BudgetedSet, od: OdPair) -> RobustSolution:
    """Exact budgeted robust path from one nominal solve per distinct deviation.

    For threshold ``d_l`` (including zero) the subproblem uses costs
    ``c_lo + max(d - d_l, 0)`` and adds ``gamma * d_l``.  Thresholds are
    visited from the largest down; only a strictly better value replaces
    the current best, so ``gamma = 0`` reproduces the nominal path.
    """
    with Timer() as tm:
        thresholds = np.unique(np.concatenate([bset.d, [0.0]]))[::-1]
        best = None
        for dl in thresholds:
            costs = bset.c_lo + np.maximum(bset.d - dl, 0.0)
            path, val = shortest_path(network, costs, od)
            val += bset.gamma * dl
            if best is None or val < best[1] - 1e-12 * max(1.0, abs(best[1])):
                best = (path, val)
    path = best[0]
    return RobustSolution(path, bset.worst_case(path.incidence), Method.BUDGETED,
                          float(bset.gamma), {"wall_time": tm.seconds,
                                              "subproblems": int(thresholds.size)})


def budgeted_program(network: Network, bset: BudgetedSet, od: OdPair):
    """MILP with the inner maximisation dualised: vars ``[x, pi, rho]``."""
    n = network.n
    c_extra = np.concatenate([[bset.gamma], np.ones(n)])
    mip = flow_master(network, od, n + 1, c_extra, np.zeros(n + 1), np.full(n + 1, np.inf),
                      c_x=bset.c_lo)
    # rho_j + pi - d_j x_j >= 0
    A = np.zeros((n, 2 * n + 1))
    A[np.arange(n), np.arange(n)] = -bset.d
    A[:, n] = 1.0
    A[np.arange(n), n + 1 + np.arange(n)] = 1.0
    mip.lp = mip.lp.with_rows(A, [GE] * n, np.zeros(n))
    return mip


def solve_budgeted_milp(network: Network, bset: BudgetedSet, od: OdPair) -> RobustSolution:
    mip = budgeted_program(network, bset, od)
    with Timer() as tm:
        rep = solve_mip(mip, cycle_cuts(network, mip.lp.n_vars), gap_tol=GAP_TOL,
                        node_limit=NODE_LIMIT)
    return finish(rep, network, od, Method.BUDGETED, bset.gamma,
                  lambda p: bset.worst_case(p.incidence), tm)


def solve_ellipsoidal(network: Network, eset: EllipsoidSet, od: OdPair,
                      node_limit: int = NODE_LIMIT) -> RobustSolution:
    """Outer approximation of ``c^T x + sqrt(lam x^T S x)`` with tangent cuts.

    The variable layout is ``[x, z]``; each cut is ``z >= g^T x`` with
    ``g = lam S x_hat / f(x_hat)``, valid everywhere since ``f`` is convex
    and positively homogeneous.
    """
    n = network.n
    lam, S = eset.lambda_size, eset.shape
    mip = flow_master(network, od, 1, [1.0], [0.0], [np.inf], c_x=eset.center)

    def tangent(y):
        x = y[:n]
        f = float(np.sqrt(max(0.0, lam * (x @ S @ x))))
        a = np.zeros(n + 1)
        a[n] = 1.0
        if f <= 1e-10:
            return [Cut(a, GE, 0.0)]
        a[:n] = -lam * (S @ x) / f
        return [Cut(a, GE, 0.0)]

    def evaluate(p):
        return eset.worst_case(p.incidence)

    heur = PathHeuristic(network, od, eset.center, evaluate, lambda p: _embed(p, [f_of(p)]))

    def f_of(p):
        x = p.incidence.astype(float)
        return float(np.sqrt(max(0.0, lam * (x @ S @ x))))

    sd = np.sqrt(np.maximum(np.diag(S), 0.0))
    inc = heur.seed([eset.center, eset.center + np.sqrt(lam) * sd])
    with Timer() as tm:
        rep = solve_mip(mip, combine(tangent, cycle_cuts(network, n + 1)), gap_tol=GAP_TOL,
                        heuristic=heur, incumbent=inc, node_limit=node_limit)
    return finish(rep, network, od, Method.ELLIPSOIDAL, lam, evaluate, tm)


def _embed(path, extra):
    return np.concatenate([path.incidence.astype(float), np.asarray(extra, dtype=float)])


def _solve_subset_sets(network: Network, models, od: OdPair, method: Method, param,
                       node_limit: int = NODE_LIMIT, support: SubsetSupport | None = None):
    n = network.n
    sup = support or SubsetSupport(models, n=n)
    covered = np.sort(np.concatenate(sup.columns))
    if covered.size != n or np.any(covered != np.arange(n)):
        raise ValueError("subset models must cover every segment exactly once")
    F = len(sup)
    mip = flow_master(network, od, F, np.ones(F), np.full(F, -np.inf), np.full(F, np.inf))
    # start with one supporting point per subset so every beta is bounded
    A0 = np.zeros((F, n + F))
    for f, cols in enumerate(sup.columns):
        A0[f, cols] = -sup.anchor(f)
        A0[f, n + f] = 1.0
    mip.lp = mip.lp.with_rows(A0, [GE] * F, np.zeros(F))

    def epigraph(y):
        out = []
        for f, cols in enumerate(sup.columns):
            xf = y[cols]
            if not np.any(np.abs(xf) > 1e-12):
                continue
            val, u = sup.subset_value(f, xf)
            if not np.isfinite(val):
                raise SolverFailure("uncertainty set is unbounded along the path")
            if val - y[n + f] > 1e-9 * max(1.0, abs(val)):
                a = np.zeros(n + F)
                a[cols] = -u
                a[n + f] = 1.0
                out.append(Cut(a, GE, 0.0))
        return out

    def betas(p):
        x = p.incidence.astype(float)
        return [sup.subset_value(f, x[cols])[0] if x[cols].any() else 0.0
                for f, cols in enumerate(sup.columns)]

    center = np.zeros(n)
    for f, cols in enumerate(sup.columns):
        center[cols] = sup.anchor(f)
    heur = PathHeuristic(network, od, np.maximum(center, 1e-6), lambda p: sup.value(p.incidence),
                         lambda p: _embed(p, betas(p)))
    inc = heur.seed([np.maximum(center, 0.0)])
    with Timer() as tm:
        rep = solve_mip(mip, combine(epigraph, cycle_cuts(network, n + F)), gap_tol=GAP_TOL,
                        heuristic=heur, incumbent=inc, node_limit=node_limit)
    return finish(rep, network, od, method, param,
                  lambda p: sup.value(p.incidence.astype(float)), tm,
                  {"subsets": F})


def solve_svc_rsp(network: Network, models, od: OdPair, grouping=None, **kw) -> RobustSolution:
    """Robust path over the product of per-subset SVC sets (epigraph cuts)."""
    models = list(models) if not hasattr(models, "alpha") else [models]
    _check_grouping(models, grouping)
    nu = models[0].nu
    return _solve_subset_sets(network, models, od, Method.SVC, nu, **kw)


def solve_mkl_rsp(network: Network, models, od: OdPair, grouping=None, **kw) -> RobustSolution:
    models = list(models) if not hasattr(models, "alpha") else [models]
    _check_grouping(models, grouping)
    return _solve_subset_sets(network, models, od, Method.MKL, models[0].nu, **kw)


def _check_grouping(models, grouping):
    if grouping is None:
        return
    if len(grouping.subsets) != len(models) or any(
            tuple(m.columns) != tuple(s) for m, s in zip(models, grouping.subsets)):
        raise ValueError("models do not match the grouping")


def solve_mett(network: Network, samples, alpha: float, od: OdPair,
               node_limit: int = NODE_LIMIT, upper=None):
    """Minimise the empirical mean excess cost over paths.

    Variables ``[x, t, theta]`` with objective ``t + theta / alpha``;
    aggregated cuts ``theta >= mean_i 1[i in S] (xi_i^T x - t)`` are
    separated from the sample set of positive excesses.
    """
    S = np.asarray(samples, dtype=float)
    N, n = S.shape
    hi_t = float(S.max(axis=0).sum()) if upper is None else float(upper)
    mip = flow_master(network, od, 2, [1.0, 1.0 / alpha], [0.0, 0.0], [hi_t, np.inf])

    def cut_for(mask):
        a = np.zeros(n + 2)
        a[:n] = -S[mask].sum(axis=0) / N
        a[n] = mask.sum() / N
        a[n + 1] = 1.0
        return Cut(a, GE, 0.0)

    mip.lp = mip.lp.with_rows(cut_for(np.ones(N, bool)).coeffs[None, :], [GE], [0.0])

    def excess(y):
        x, t, th = y[:n], y[n], y[n + 1]
        r = S @ x - t
        pos = r > 0
        val = r[pos].sum() / N
        if val - th > 1e-9 * max(1.0, abs(val)):
            return [cut_for(pos)]
        return []

    def t_star(costs):
        c = np.sort(costs)[::-1]
        vals = c + (np.cumsum(c) - c * np.arange(1, N + 1)) / (alpha * N)
        k = int(np.argmin(vals))
        return c[k]

    def embed(p):
        costs = S @ p.incidence
        t = t_star(costs)
        return _embed(p, [t, np.maximum(costs - t, 0).sum() / N])

    mean = S.mean(axis=0)
    heur = PathHeuristic(network, od, mean, lambda p: mett(S @ p.incidence, alpha), embed)
    q = np.quantile(S, 1 - min(alpha, 1.0) / 2, axis=0)
    inc = heur.seed([mean, q, S.max(axis=0)])
    with Timer() as tm:
        rep = solve_mip(mip, combine(excess, cycle_cuts(network, n + 2)), gap_tol=GAP_TOL,
                        heuristic=heur, incumbent=inc, node_limit=node_limit)
    return rep, tm


def solve_drsp(network: Network, amb: WassersteinAmbiguity, od: OdPair,
               node_limit: int = NODE_LIMIT) -> RobustSolution:
    """Wasserstein distributionally robust mean-excess path.

    With the 1-norm ground metric and binary paths, the program's
    multiplier on the transport budget is optimal at 0 or 1, so the
    optimum is the smaller of the shortest path on support maxima and
    ``eps / alpha`` plus the empirical mean-excess optimum.  The second
    term is a MILP solved by cutting planes.
    """
    return solve_drsp_grid(network, [amb], od, node_limit=node_limit)[0]


def solve_drsp_grid(network: Network, ambs, od: OdPair,
                    node_limit: int = NODE_LIMIT) -> list[RobustSolution]:
    """``solve_drsp`` for several radii over the same samples.

    The mean-excess path does not depend on the radius, so it is solved
    once and combined with each radius afterwards.
    """
    ambs = list(ambs)
    first = ambs[0]
    for a in ambs[1:]:
        if a.alpha != first.alpha or a.samples is not first.samples and not (
                np.array_equal(a.samples, first.samples)
                and np.array_equal(a.support_hi, first.support_hi)):
            raise ValueError("grid members must share samples, support and alpha")
    with Timer() as tm:
        up_path, up_val = shortest_path(network, first.support_hi, od)
        rep, _ = solve_mett(network, first.samples, first.alpha, od, node_limit=node_limit)
    if rep.x is None:
        raise SolverFailure(f"drsp solve ended with status {rep.status.value}", rep)
    base = finish(rep, network, od, Method.DRSP, first.epsilon,
                  lambda p: mett(first.samples @ p.incidence, first.alpha), tm)
    tail0 = base.objective
    out = []
    for amb in ambs:
        tail = amb.epsilon / amb.alpha + tail0
        diag = dict(base.diagnostics, mett=tail0, upper_path_cost=up_val)
        if up_val < tail - 1e-12 * max(1.0, up_val):
            path, diag["branch"] = up_path, "support_max"
        else:
            path, diag["branch"] = base.path, "mean_excess"
        out.append(RobustSolution(path, drsp_value(path.incidence.astype(float), amb),
                                  Method.DRSP, float(amb.epsilon), diag))
    return out
