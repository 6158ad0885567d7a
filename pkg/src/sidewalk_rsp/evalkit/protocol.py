"""OD selection and the k-fold evaluation of robust path methods."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..network import Network, NetworkError, OdPair, shortest_path
from ..rsolve import (Method, SolverFailure, SubsetSupport, solve_budgeted, solve_drsp_grid,
                      solve_ellipsoidal, solve_mkl_rsp, solve_svc_rsp)
from ..scenarios import FreeFlowVector, ScenarioMatrix, kfold_split, normalized_delay
from ..svc import group_dimensions, train_mkl, tsc_ds
from ..usets import (DEFAULT_ALPHA, DEFAULT_N_SAMPLES, build_budgeted, build_ellipsoid,
                     build_wasserstein)
from .report import KpiReport, KpiRow, OdRow, PathRow, delay_stats

log = logging.getLogger(__name__)

METHOD_ALIASES = {"mkl-svc": Method.MKL.value, "mkl": Method.MKL.value}


class InsufficientCandidates(ValueError):
    pass


def canonical_method(name: str) -> str:
    name = name.strip().lower()
    name = METHOD_ALIASES.get(name, name)
    try:
        return Method(name).value
    except ValueError:
        raise ValueError(f"unknown method {name!r}") from None


def select_od_pairs(network: Network, D, pool_size: int = 500, keep: int = 100,
                    min_segments: int = 5, seed=0, costs=None) -> list[OdPair]:
    """Highest-variability OD pairs among a random candidate pool.

    Candidates are ordered pairs whose nominal shortest path (on ``costs``,
    by default the per-segment minimum of ``D``) has at least
    ``min_segments`` segments.  They are ranked by the standard deviation
    of that path's scenario travel time; ties keep lexicographic order.
    """
    if pool_size < keep:
        raise ValueError("pool_size must be at least keep")
    X = D.values if isinstance(D, ScenarioMatrix) else np.asarray(D, dtype=float)
    costs = X.min(axis=0) if costs is None else np.asarray(costs, dtype=float)
    rng = np.random.default_rng(seed)
    nodes = list(network.nodes)
    pairs = [(o, d) for o in nodes for d in nodes if o != d]
    order = rng.permutation(len(pairs))
    pool = []
    for k in order:
        od = OdPair(*pairs[k])
        try:
            path, _ = shortest_path(network, costs, od)
        except NetworkError:
            continue
        if len(path) >= min_segments:
            pool.append((od, path))
        if len(pool) == pool_size:
            break
    if len(pool) < keep:
        raise InsufficientCandidates(
            f"only {len(pool)} OD pairs have paths of at least {min_segments} segments")
    pool.sort(key=lambda t: (t[0].origin, t[0].destination))
    T = np.array([X @ p.incidence for _, p in pool])
    sd = T.std(axis=1)
    sd[sd <= 1e-12 * np.abs(T).max(axis=1)] = 0.0   # rounding noise on constant columns
    rank = sorted(range(len(pool)), key=lambda i: -sd[i])   # stable: ties stay lexicographic
    return [pool[i][0] for i in rank[:keep]]


@dataclass(frozen=True)
class EvalOptions:
    alpha: float = DEFAULT_ALPHA
    drsp_samples: int | None = DEFAULT_N_SAMPLES
    grouping: str = "hierarchical"
    mkl_kernels: int = 8
    worst5: str = "mean"
    seed: int = 0
    node_limit: int = 20_000


def _normalize_grids(grids) -> dict:
    out = {}
    for name, params in grids.items():
        m = canonical_method(name)
        out[m] = [float(p) for p in params] if m != Method.NOMINAL.value else [0.0]
    out.setdefault(Method.NOMINAL.value, [0.0])
    return out


def _solve_method(network, train, freeflow, method, params, ods, opt: EvalOptions, fold):
    """Paths per (parameter, od) for one method on one training split.

    Failures come back as ``None`` entries.
    """
    sols = {}

    def guard(p, od, fn):
        try:
            sols[(p, od)] = fn().path
        except (SolverFailure, ValueError, ArithmeticError, RuntimeError) as exc:
            log.warning("%s(%g) failed on %s in fold %d: %s", method, p, od, fold, exc)
            sols[(p, od)] = None

    if method == Method.NOMINAL.value:
        nominal = build_budgeted(train, 0)
        for od in ods:
            guard(0.0, od, lambda: solve_budgeted(network, nominal, od))
    elif method == Method.BUDGETED.value:
        for p in params:
            s = build_budgeted(train, int(p))
            for od in ods:
                guard(p, od, lambda: solve_budgeted(network, s, od))
    elif method == Method.ELLIPSOIDAL.value:
        for p in params:
            s = build_ellipsoid(train, p)
            for od in ods:
                guard(p, od, lambda: solve_ellipsoidal(network, s, od, node_limit=opt.node_limit))
    elif method == Method.DRSP.value:
        ambs = [build_wasserstein(train, freeflow, p, opt.alpha, opt.drsp_samples,
                                  seed=(opt.seed, fold)) for p in params]
        for od in ods:
            try:
                res = solve_drsp_grid(network, ambs, od, node_limit=opt.node_limit)
                for p, r in zip(params, res):
                    sols[(p, od)] = r.path
            except (SolverFailure, ValueError, ArithmeticError, RuntimeError) as exc:
                log.warning("drsp failed on %s in fold %d: %s", od, fold, exc)
                for p in params:
                    sols[(p, od)] = None
    elif method in (Method.SVC.value, Method.MKL.value):
        grouping = group_dimensions(train, opt.grouping, seed=(opt.seed, fold))
        for p in params:
            try:
                if method == Method.SVC.value:
                    models = tsc_ds(train, p, grouping)
                    solver = solve_svc_rsp
                else:
                    models = tsc_ds(train, p, grouping, learner=train_mkl,
                                    m_kernels=opt.mkl_kernels)
                    solver = solve_mkl_rsp
                support = SubsetSupport(models, n=network.n)
            except (ValueError, ArithmeticError, RuntimeError) as exc:
                log.warning("%s(%g) training failed in fold %d: %s", method, p, fold, exc)
                for od in ods:
                    sols[(p, od)] = None
                continue
            for od in ods:
                guard(p, od, lambda: solver(network, models, od, node_limit=opt.node_limit,
                                            support=support))
    else:
        raise ValueError(f"unknown method {method!r}")
    return sols


def _cell(args):
    network, values, freeflow, train_idx, method, params, ods, opt, fold = args
    train = ScenarioMatrix(values[train_idx])
    return (fold, method), _solve_method(network, train, freeflow, method, params, ods, opt, fold)


def evaluate(network: Network, D: ScenarioMatrix, freeflow: FreeFlowVector, grids: dict,
             ods, folds: int = 5, options: EvalOptions = EvalOptions(),
             jobs: int = 1) -> KpiReport:
    """K-fold protocol: train on k-1 folds, score fixed paths on the held-out rows.

    Delays are normalised by the free-flow time of the benchmark path (the
    nominal path of the same fold and OD).  Per-OD statistics are averaged
    over folds, then over ODs.  A failed solve turns that OD's entry into
    NaN, which propagates into the method's aggregate.
    """
    grids = _normalize_grids(grids)
    ods = list(ods)
    X = D.values
    ff = freeflow.values if isinstance(freeflow, FreeFlowVector) else np.asarray(freeflow)
    split = kfold_split(X.shape[0], folds, seed=options.seed)
    tasks = [(network, X, ff, split.training(f), m, grids[m], ods, options, f)
             for f in range(folds) for m in sorted(grids)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = dict(ex.map(_cell, tasks))
    else:
        results = dict(_cell(t) for t in tasks)

    nominal = Method.NOMINAL.value
    report = KpiReport()
    for m in sorted(grids):
        for p in grids[m]:
            od_stats = []
            for od in ods:
                per_fold = []
                for f in range(folds):
                    path = results[(f, m)][(p, od)]
                    bench = results[(f, nominal)][(0.0, od)]
                    if path is None or bench is None:
                        per_fold.append((np.nan,) * 3)
                        continue
                    report.paths.append(PathRow(m, p, f, od.origin, od.destination,
                                                path.segments))
                    T = X[split.validation(f)] @ path.incidence
                    t_ff = float(ff @ bench.incidence)
                    per_fold.append(delay_stats(normalized_delay(T, t_ff), options.worst5))
                s = np.mean(np.array(per_fold), axis=0)
                od_stats.append(s)
                report.per_od.append(OdRow(m, p, od.origin, od.destination, *map(float, s)))
            arr = np.array(od_stats).reshape(len(ods), 3)
            failed = int(np.count_nonzero(np.any(np.isnan(arr), axis=1)))
            agg = arr.mean(axis=0) if len(ods) else np.full(3, np.nan)
            report.kpis.append(KpiRow(m, p, *map(float, agg), len(ods), failed))
    return report.sorted()
