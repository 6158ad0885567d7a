"""Command-line entry point: simulate, build-sets, solve, evaluate, sweep.

Settings resolve in three layers: built-in defaults, then a ``--config``
file, then explicit flags.  Exit codes are 0 on success, 1 for solver or
numerical failures and 2 for usage, configuration or missing-file errors.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path as FsPath

from . import __version__
from .evalkit import (EvalOptions, InsufficientCandidates, SweepBase, SweepConfig, SweepError,
                      canonical_method, emit_report, evaluate, select_od_pairs,
                      sensitivity_sweep, write_improvements, write_manifest)
from .network import Network, NetworkError, OdPair, grid_network
from .rsolve import Method, SolverFailure, solution_row, solve, write_solutions
from .scenarios import ScenarioError, load_scenarios, write_freeflow, write_scenarios
from .simgen import BlockedGeometry, ConfigError, RunConfig, generate_from_config, load_config
from .svc import dumps_models, group_dimensions, loads_models, train_mkl, tsc_ds
from .usets import (DEFAULT_ALPHA, DEFAULT_EPSILONS, DEFAULT_GAMMAS, DEFAULT_LAMBDAS, build_budgeted,
                    build_ellipsoid, build_wasserstein, dumps_set, loads_set)

log = logging.getLogger("sidewalk_rsp")

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2
DEFAULT_NUS = (0.05, 0.1, 0.2, 0.3)


class UsageError(Exception):
    pass


def _existing(path) -> FsPath:
    p = FsPath(path)
    if not p.exists():
        raise FileNotFoundError(str(p))
    return p


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"not a comma-separated list of numbers: {text!r}") from exc


def _parse_od(text: str) -> OdPair:
    try:
        o, d = text.split(":")
        return OdPair(int(o), int(d))
    except (ValueError, NetworkError) as exc:
        raise UsageError(f"bad OD pair {text!r}; expected ORIGIN:DEST") from exc


def _run_config(args) -> RunConfig:
    rc = load_config(_existing(args.config)) if getattr(args, "config", None) else RunConfig()
    if getattr(args, "seed", None) is not None:
        rc = replace(rc, seed=args.seed)
    return rc


def _load_data(args):
    D, ff = load_scenarios(_existing(args.scenarios),
                           _existing(args.freeflow) if args.freeflow else None)
    return D, ff


# --- commands -----------------------------------------------------------------


def cmd_make_network(args) -> int:
    rows, _, cols = args.grid.partition("x")
    try:
        net = grid_network(int(rows), int(cols), seed=args.seed,
                           n_links=args.links)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = FsPath(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    net.to_csv(out)
    print(f"network: {len(net.nodes)} nodes, {net.n} segments -> {out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    net = Network.from_csv(_existing(args.network))
    rc = _run_config(args)
    D, ff = generate_from_config(net, rc, jobs=args.jobs, horizon=args.horizon)
    out = FsPath(args.out)
    out.mkdir(parents=True, exist_ok=True)
    files = [out / "scenarios.csv", out / "freeflow.csv"]
    write_scenarios(files[0], D)
    write_freeflow(files[1], ff)
    inputs = [args.network] + ([args.config] if args.config else [])
    write_manifest(out / "run.manifest", "simulate", rc.seed,
                   {"horizon": args.horizon, "config": vars(rc)}, inputs, files)
    print(f"scenarios: {D.n_scenarios} rows x {D.n_segments} segments -> {files[0]}")
    return EXIT_OK


def _build_model(method, param, D, ff, args):
    if method == Method.BUDGETED.value:
        return build_budgeted(D, int(param))
    if method == Method.ELLIPSOIDAL.value:
        return build_ellipsoid(D, param)
    if method == Method.DRSP.value:
        if ff is None:
            raise UsageError("drsp needs --freeflow")
        return build_wasserstein(D, ff, param, args.alpha, args.samples, seed=args.seed or 0)
    if method in (Method.SVC.value, Method.MKL.value):
        grouping = group_dimensions(D, args.grouping, seed=args.seed or 0)
        if method == Method.SVC.value:
            return tsc_ds(D, param, grouping)
        return tsc_ds(D, param, grouping, learner=train_mkl, m_kernels=args.kernels)
    return build_budgeted(D, 0)


def _serialize(model) -> str:
    return dumps_models(model) if isinstance(model, list) else dumps_set(model)


def _deserialize(text: str):
    return loads_models(text) if text.lstrip().startswith("===") else loads_set(text)


def _single_param(args, method):
    table = {Method.BUDGETED.value: args.gamma, Method.ELLIPSOIDAL.value: args.lam,
             Method.DRSP.value: args.epsilon, Method.SVC.value: args.nu,
             Method.MKL.value: args.nu, Method.NOMINAL.value: 0.0}
    p = table[method]
    if p is None:
        flag = {Method.BUDGETED.value: "--gamma", Method.ELLIPSOIDAL.value: "--lambda",
                Method.DRSP.value: "--epsilon"}.get(method, "--nu")
        raise UsageError(f"method {method} needs {flag}")
    return p


def cmd_build_sets(args) -> int:
    method = _method(args.method)
    D, ff = _load_data(args)
    model = _build_model(method, _single_param(args, method), D, ff, args)
    out = FsPath(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(_serialize(model))
    write_manifest(out.with_name("run.manifest"), "build-sets", args.seed or 0,
                   {"method": method, "param": _single_param(args, method)},
                   [args.scenarios] + ([args.freeflow] if args.freeflow else []), [out])
    print(f"{method} set -> {out}")
    return EXIT_OK


def _method(name):
    try:
        return canonical_method(name)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_solve(args) -> int:
    method = _method(args.method)
    net = Network.from_csv(_existing(args.network))
    D, ff = _load_data(args)
    if args.sets:
        model = _deserialize(_existing(args.sets).read_text())
        param = "from-sets"
    else:
        param = _single_param(args, method)
        model = _build_model(method, param, D, ff, args)
    if args.od:
        ods = [_parse_od(t) for t in args.od]
    else:
        ods = select_od_pairs(net, D, args.pool, args.ods, args.min_segments, seed=args.seed or 0)
    rows = []
    for od in ods:
        if method == Method.NOMINAL.value:
            sol = replace(solve(net, model, od), method=Method.NOMINAL)
        else:
            sol = solve(net, model, od)
        rows.append(solution_row(sol, od, 0))
    out = FsPath(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_solutions(out, rows)
    write_manifest(out.with_name("run.manifest"), "solve", args.seed or 0,
                   {"method": method, "param": param, "ods": " ".join(map(str, ods))},
                   [args.network, args.scenarios], [out])
    print(f"{len(rows)} solutions -> {out}")
    return EXIT_OK


def _grids(args, methods):
    table = {
        Method.NOMINAL.value: [0.0],
        Method.BUDGETED.value: _floats(args.gammas) if args.gammas else list(DEFAULT_GAMMAS),
        Method.ELLIPSOIDAL.value: _floats(args.lambdas) if args.lambdas else list(DEFAULT_LAMBDAS),
        Method.DRSP.value: _floats(args.epsilons) if args.epsilons else list(DEFAULT_EPSILONS),
        Method.SVC.value: _floats(args.nus) if args.nus else list(DEFAULT_NUS),
        Method.MKL.value: _floats(args.nus) if args.nus else list(DEFAULT_NUS),
    }
    return {m: table[m] for m in methods}


def _options(args) -> EvalOptions:
    return EvalOptions(alpha=args.alpha, drsp_samples=args.samples, grouping=args.grouping,
                       mkl_kernels=args.kernels, worst5=args.worst5, seed=args.seed or 0)


def cmd_evaluate(args) -> int:
    net = Network.from_csv(_existing(args.network))
    D, ff = _load_data(args)
    if ff is None:
        raise UsageError("evaluate needs --freeflow")
    methods = [_method(m) for m in args.methods.split(",")]
    grids = _grids(args, methods)
    ods = select_od_pairs(net, D, args.pool, args.ods, args.min_segments, seed=args.seed or 0)
    rep = evaluate(net, D, ff, grids, ods, args.folds, _options(args), jobs=args.jobs)
    files = emit_report(rep, args.out)
    write_manifest(FsPath(args.out) / "run.manifest", "evaluate", args.seed or 0,
                   {"folds": args.folds, "ods": args.ods, "pool": args.pool,
                    "grids": grids, "options": vars(_options(args))},
                   [args.network, args.scenarios, args.freeflow], files)
    for r in rep.kpis:
        print(f"{r.method:12s} {r.parameter:8g}  avg {r.avg_delay:.4f}  "
              f"worst {r.worst_delay:.4f}  worst5 {r.worst5_delay:.4f}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    net = Network.from_csv(_existing(args.network))
    rc = _run_config(args)
    levels = tuple(v.strip() for v in args.levels.split(",")) if args.levels else ()
    methods = tuple(_method(m) for m in args.methods.split(","))
    grids = {m: g for m, g in _grids(args, methods).items()}
    cfg = SweepConfig(args.factor, levels, methods, grids)
    base = SweepBase(net, rc, args.ods, args.pool, args.min_segments, args.folds, _options(args),
                     args.horizon, args.jobs)
    rows = sensitivity_sweep(cfg, base)
    out = FsPath(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"sweep_{cfg.factor.value}.csv"
    write_improvements(path, rows)
    write_manifest(out / "run.manifest", "sweep", rc.seed,
                   {"factor": cfg.factor.value, "levels": cfg.levels, "grids": grids},
                   [args.network] + ([args.config] if args.config else []), [path])
    print(f"{len(rows)} improvement rows -> {path}")
    return EXIT_OK


# --- argument parsing ---------------------------------------------------------


def _add_method_flags(p):
    p.add_argument("--gamma", type=int, help="budget for method budgeted")
    p.add_argument("--lambda", dest="lam", type=float, help="ellipsoid size")
    p.add_argument("--epsilon", type=float, help="Wasserstein radius for drsp")
    p.add_argument("--nu", type=float, help="outlier bound for svc and mkl-svc")


def _add_common_model_flags(p):
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA, help="drsp tail level")
    p.add_argument("--samples", type=int, default=500, help="drsp empirical sample count")
    p.add_argument("--grouping", choices=["random", "hierarchical"], default="hierarchical",
                   help="dimension grouping for svc sets")
    p.add_argument("--kernels", type=int, default=8, help="kernel count for mkl-svc")


def _add_od_flags(p):
    p.add_argument("--ods", type=int, default=100, help="number of OD pairs to keep")
    p.add_argument("--pool", type=int, default=500, help="random OD candidate pool size")
    p.add_argument("--min-segments", type=int, default=5, help="minimum nominal path length")


def _add_grid_flags(p):
    p.add_argument("--gammas", help="comma-separated budgeted grid")
    p.add_argument("--lambdas", help="comma-separated ellipsoidal grid")
    p.add_argument("--epsilons", help="comma-separated drsp grid")
    p.add_argument("--nus", help="comma-separated svc / mkl-svc grid")
    p.add_argument("--worst5", choices=["mean", "quantile"], default="mean",
                   help="tail statistic: mean of the worst 5%% or the 95th percentile")
    p.add_argument("--folds", type=int, default=5, help="cross-validation folds")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                        help="worker processes (default: logical processors)")
    ap = argparse.ArgumentParser(prog="sidewalk-rsp", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-network", parents=[common],
                       help="write a synthetic street grid")
    p.add_argument("--grid", default="5x6", help="ROWSxCOLS intersections")
    p.add_argument("--links", type=int, help="keep this many undirected links")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_make_network)

    p = sub.add_parser("simulate", parents=[common],
                       help="generate scenario and free-flow CSVs")
    p.add_argument("--network", required=True)
    p.add_argument("--config", help="key = value simulator config")
    p.add_argument("--seed", type=int, help="master seed (overrides sim.seed)")
    p.add_argument("--horizon", type=float, default=900.0, help="per-segment time limit (s)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("build-sets", parents=[common],
                       help="train and serialize one uncertainty model")
    p.add_argument("--scenarios", required=True)
    p.add_argument("--freeflow")
    p.add_argument("--method", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output file")
    _add_method_flags(p)
    _add_common_model_flags(p)
    p.set_defaults(func=cmd_build_sets)

    p = sub.add_parser("solve", parents=[common],
                       help="robust paths for OD pairs")
    p.add_argument("--network", required=True)
    p.add_argument("--scenarios", required=True)
    p.add_argument("--freeflow")
    p.add_argument("--method", required=True,
                   help="nominal, budgeted, ellipsoidal, svc, mkl-svc or drsp")
    p.add_argument("--sets", help="serialized model from build-sets (skips training)")
    p.add_argument("--od", action="append", help="ORIGIN:DEST (repeatable)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="solutions CSV")
    _add_method_flags(p)
    _add_common_model_flags(p)
    _add_od_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("evaluate", parents=[common],
                       help="k-fold KPI evaluation over parameter grids")
    p.add_argument("--network", required=True)
    p.add_argument("--scenarios", required=True)
    p.add_argument("--freeflow", required=True)
    p.add_argument("--methods", default="budgeted,ellipsoidal,svc,drsp")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="report directory")
    _add_common_model_flags(p)
    _add_od_flags(p)
    _add_grid_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", parents=[common],
                       help="one-factor sensitivity sweep (regenerates data)")
    p.add_argument("--network", required=True)
    p.add_argument("--config")
    p.add_argument("--factor", required=True,
                   help="robot_speed, robot_width, robot_behavior, ped_speed or ped_volume")
    p.add_argument("--levels", help="three comma-separated levels including the normal one")
    p.add_argument("--methods", default="ellipsoidal,drsp")
    p.add_argument("--seed", type=int)
    p.add_argument("--horizon", type=float, default=900.0)
    p.add_argument("--out", required=True)
    _add_common_model_flags(p)
    _add_od_flags(p)
    _add_grid_flags(p)
    p.set_defaults(func=cmd_sweep, ods=20, pool=100)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename or exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, ConfigError, SweepError, NetworkError, ScenarioError,
            InsufficientCandidates, BlockedGeometry) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverFailure, ArithmeticError, RuntimeError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
