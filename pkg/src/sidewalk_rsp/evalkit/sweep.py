"""One-factor-at-a-time sensitivity sweeps over simulator settings."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field, replace

import numpy as np

from ..network import Network
from ..simgen import Behavior, RunConfig, generate_from_config
from ..usets import DEFAULT_EPSILONS, DEFAULT_LAMBDAS
from .protocol import EvalOptions, canonical_method, evaluate, select_od_pairs
from .report import KPI_COLUMNS, IoError


class SweepFactor(str, enum.Enum):
    ROBOT_SPEED = "robot_speed"
    ROBOT_WIDTH = "robot_width"
    ROBOT_BEHAVIOR = "robot_behavior"
    PED_SPEED = "ped_speed"
    PED_VOLUME = "ped_volume"


# factor -> (RunConfig field, normal level, default levels)
FACTOR_TABLE = {
    SweepFactor.ROBOT_SPEED: ("robot_speed_kmh", 5.0, (5.0, 7.5, 10.0)),
    SweepFactor.ROBOT_WIDTH: ("robot_width_m", 0.5, (0.5, 0.75, 1.0)),
    SweepFactor.ROBOT_BEHAVIOR: ("robot_behavior", Behavior.NORMAL,
                                 (Behavior.CONSERVATIVE, Behavior.NORMAL, Behavior.AGGRESSIVE)),
    SweepFactor.PED_SPEED: ("ped_speed_factor", 1.0, (0.9, 1.0, 1.1)),
    SweepFactor.PED_VOLUME: ("demand_multiplier", 1.0, (1.0, 1.5, 2.0)),
}

SWEEP_METHODS = ("ellipsoidal", "drsp")


class SweepError(ValueError):
    pass


def _level(factor: SweepFactor, v):
    if factor is SweepFactor.ROBOT_BEHAVIOR:
        return v if isinstance(v, Behavior) else Behavior(str(v))
    return float(v)


@dataclass(frozen=True)
class SweepConfig:
    factor: SweepFactor
    levels: tuple = ()
    methods: tuple = SWEEP_METHODS
    grids: dict = field(default_factory=dict)

    def __post_init__(self):
        factor = SweepFactor(self.factor)
        object.__setattr__(self, "factor", factor)
        levels = self.levels or FACTOR_TABLE[factor][2]
        try:
            levels = tuple(_level(factor, v) for v in levels)
        except ValueError as exc:
            raise SweepError(str(exc)) from exc
        if len(levels) != 3:
            raise SweepError(f"a sweep needs exactly 3 levels, got {len(levels)}")
        normal = FACTOR_TABLE[factor][1]
        if normal not in levels:
            raise SweepError(f"levels must include the normal case {normal}")
        object.__setattr__(self, "levels", levels)
        methods = tuple(canonical_method(m) for m in self.methods)
        if any(m not in SWEEP_METHODS for m in methods):
            raise SweepError(f"sweep methods must be a subset of {SWEEP_METHODS}")
        object.__setattr__(self, "methods", methods)


@dataclass(frozen=True)
class SweepBase:
    """Everything a sweep level needs besides the varied factor."""

    network: Network
    run: RunConfig = RunConfig()
    n_ods: int = 20
    od_pool: int = 100
    min_segments: int = 5
    folds: int = 5
    options: EvalOptions = EvalOptions()
    horizon: float = 900.0
    jobs: int = 1


@dataclass(frozen=True)
class ImprovementRow:
    factor: str
    level: str
    method: str
    kpi: str
    best_parameter: float
    nominal: float
    robust: float
    improvement: float


def _level_str(v) -> str:
    return v.value if isinstance(v, Behavior) else repr(float(v))


def sensitivity_sweep(cfg: SweepConfig, base: SweepBase, generate=None) -> list[ImprovementRow]:
    """Nominal-minus-robust KPI per level; positive values favour the robust method.

    OD pairs are chosen once, on the normal level's data, and reused so
    that levels differ only in the varied factor.  ``generate`` maps a
    RunConfig to ``(ScenarioMatrix, FreeFlowVector)`` and defaults to the
    simulator.
    """
    generate = generate or (lambda rc: generate_from_config(base.network, rc, base.jobs,
                                                            base.horizon))
    name = FACTOR_TABLE[cfg.factor][0]
    normal = FACTOR_TABLE[cfg.factor][1]
    data = {lv: generate(replace(base.run, **{name: lv})) for lv in cfg.levels}
    D0 = data[normal][0]
    ods = select_od_pairs(base.network, D0, base.od_pool, base.n_ods, base.min_segments,
                          seed=base.options.seed)
    grids = {m: cfg.grids.get(m, _default_grid(m)) for m in cfg.methods}
    rows = []
    for lv in cfg.levels:
        D, ff = data[lv]
        rep = evaluate(base.network, D, ff, grids, ods, base.folds, base.options,
                       jobs=base.jobs)
        nom = rep.kpi("nominal", 0.0)
        for m in cfg.methods:
            for kpi in KPI_COLUMNS:
                try:
                    best = rep.best(m, kpi)
                    val, par = getattr(best, kpi), best.parameter
                except KeyError:
                    val, par = np.nan, np.nan
                rows.append(ImprovementRow(cfg.factor.value, _level_str(lv), m, kpi, par,
                                           getattr(nom, kpi), val, getattr(nom, kpi) - val))
    return rows


def _default_grid(method: str):
    return DEFAULT_LAMBDAS if method == "ellipsoidal" else DEFAULT_EPSILONS


IMPROVEMENT_HEADER = ("factor", "level", "method", "kpi", "best_parameter", "nominal", "robust",
                      "improvement")


def write_improvements(path, rows) -> None:
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(IMPROVEMENT_HEADER)
            for r in rows:
                w.writerow([r.factor, r.level, r.method, r.kpi, repr(r.best_parameter),
                            repr(r.nominal), repr(r.robust), repr(r.improvement)])
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
