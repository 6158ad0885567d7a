"""Social force parameters, robot presets and the key-value run config."""

from __future__ import annotations

import enum
from dataclasses import dataclass, fields, replace
from pathlib import Path as FsPath

import numpy as np

KMH = 1 / 3.6
ROBOT_SPEED_KMH = 5.0
ROBOT_WIDTH_M = 0.538
MEN_SPEED_KMH = (3.49, 5.83)
WOMEN_SPEED_KMH = (2.56, 4.28)
PED_SPEED_CAP = 1.3  # pedestrians may exceed their desired speed by 30 %


@dataclass(frozen=True)
class SfmParams:
    tau: float
    react_to_n: int
    a_soc_iso: float
    b_soc_iso: float
    lambda_aniso: float
    a_soc_mean: float
    b_soc_mean: float
    vd: float
    noise: float

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if not 0 <= self.lambda_aniso <= 1:
            raise ValueError("anisotropy must lie in [0, 1]")
        if self.react_to_n < 1:
            raise ValueError("react_to_n must be at least 1")
        if self.noise < 0:
            raise ValueError("noise must be nonnegative")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)], dtype=float)


PEDESTRIAN_DEFAULT = SfmParams(0.4, 8, 2.72, 0.2, 0.176, 0.4, 2.8, 3.0, 1.2)
ROBOT_DEFAULT = SfmParams(0.8, 8, 2.1, 0.35, 0.45, 0.4, 2.8, 3.0, 1.2)


class Behavior(str, enum.Enum):
    CONSERVATIVE = "conservative"
    NORMAL = "normal"
    AGGRESSIVE = "aggressive"


BEHAVIOR_PRESETS = {
    Behavior.CONSERVATIVE: replace(ROBOT_DEFAULT, tau=1.0),
    Behavior.NORMAL: ROBOT_DEFAULT,
    Behavior.AGGRESSIVE: PEDESTRIAN_DEFAULT,
}


@dataclass(frozen=True)
class RunConfig:
    """Options read from a ``key = value`` file (``#`` starts a comment)."""

    robot_speed_kmh: float = ROBOT_SPEED_KMH
    robot_width_m: float = ROBOT_WIDTH_M
    robot_behavior: Behavior = Behavior.NORMAL
    dt_s: float = 0.1
    seed: int = 0
    demand_multiplier: float = 1.0
    obstacle_fractions: tuple = (0.0, 0.0, 0.1, 0.1, 0.2, 0.2, 0.3, 0.3, 0.4, 0.4, 0.5, 0.5)
    days: tuple = tuple(range(7))
    hours: tuple = tuple(range(10, 22))
    ped_speed_factor: float = 1.0
    interior_obstacles: bool = False

    @property
    def robot_params(self) -> SfmParams:
        return BEHAVIOR_PRESETS[self.robot_behavior]


_KEYS = {
    "robot.speed_kmh": ("robot_speed_kmh", float),
    "robot.width_m": ("robot_width_m", float),
    "robot.behavior": ("robot_behavior", Behavior),
    "sim.dt_s": ("dt_s", float),
    "sim.seed": ("seed", int),
    "demand.multiplier": ("demand_multiplier", float),
    "demand.ped_speed_factor": ("ped_speed_factor", float),
    "obstacles.fractions": ("obstacle_fractions", lambda s: tuple(float(v) for v in s.split(","))),
    "obstacles.interior": ("interior_obstacles", lambda s: s.strip().lower() in ("1", "true", "yes")),
    "scenarios.days": ("days", lambda s: tuple(int(v) for v in s.split(","))),
    "scenarios.hours": ("hours", lambda s: tuple(int(v) for v in s.split(","))),
}


class ConfigError(ValueError):
    pass


def parse_config(text: str) -> RunConfig:
    kw = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key = key.strip()
        if not sep or key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown or malformed entry {raw!r}")
        name, conv = _KEYS[key]
        try:
            kw[name] = conv(val.strip())
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from exc
    cfg = RunConfig(**kw)
    if not 0 < cfg.dt_s <= 0.5:
        raise ConfigError("sim.dt_s must lie in (0, 0.5]")
    if any(not 0 <= f <= 1 for f in cfg.obstacle_fractions):
        raise ConfigError("obstacle fractions must lie in [0, 1]")
    return cfg


def load_config(path) -> RunConfig:
    path = FsPath(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    return parse_config(path.read_text())


def dump_config(cfg: RunConfig) -> str:
    out = []
    for key, (name, _) in _KEYS.items():
        v = getattr(cfg, name)
        if isinstance(v, tuple):
            v = ",".join(repr(x) if isinstance(x, float) else str(x) for x in v)
        elif isinstance(v, Behavior):
            v = v.value
        out.append(f"{key} = {v}")
    return "\n".join(out) + "\n"
