"""Segment corridor scenes, obstacle placement and scenario-matrix generation."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..network import Network, SegmentKind
from ..scenarios import Direction, FreeFlowVector, ScenarioMatrix, ScenarioMeta
from .forces import AgentKind, AgentState, Obstacle
from .kernel import CLEARANCE_M, run_corridor
from .params import (KMH, MEN_SPEED_KMH, PED_SPEED_CAP, PEDESTRIAN_DEFAULT, ROBOT_DEFAULT,
                     ROBOT_SPEED_KMH, ROBOT_WIDTH_M, WOMEN_SPEED_KMH, SfmParams)

log = logging.getLogger(__name__)

SIDEWALK_WIDTH_M = 3.0
CROSSING_WIDTH_M = 4.0
PED_RADIUS_M = 0.25
OBSTACLE_SIDE_M = (1.0, 1.4)
BASE_RATE = 0.05          # pedestrians per second and direction at multiplier 1
MAJOR_SHARE = 0.65        # share of pedestrians walking with the dominant flow
DWELL_S = 2.0


class BlockedGeometry(ValueError):
    """No obstacle gap is wide enough for the robot."""


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.1
    horizon: float = 900.0
    seed: int = 0
    dwell: float = DWELL_S

    def __post_init__(self):
        if not 0 < self.dt <= 0.5:
            raise ValueError("dt must lie in (0, 0.5]")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")


@dataclass(frozen=True)
class CorridorScene:
    """One segment as a straight corridor; the robot walks in ``+x``.

    ``ped_arrival_rate`` is the mean of the two directional rates;
    ``forward_share`` says how it splits between walking with (``+x``)
    and against the robot.
    """

    length: float
    width: float = SIDEWALK_WIDTH_M
    obstacles: tuple = ()
    ped_arrival_rate: float = 0.0
    ped_speed_dists: tuple = (tuple(v * KMH for v in MEN_SPEED_KMH),
                              tuple(v * KMH for v in WOMEN_SPEED_KMH))
    seed: int = 0
    forward_share: float = 0.5
    ped_params: SfmParams = PEDESTRIAN_DEFAULT

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError("corridor length must be positive")
        if self.ped_arrival_rate < 0:
            raise ValueError("arrival rate must be nonnegative")
        if not 0 <= self.forward_share <= 1:
            raise ValueError("forward share must lie in [0, 1]")
        for o in self.obstacles:
            h = o.side / 2
            if o.cx - h < 0 or o.cx + h > self.length or o.cy - h < -1e-12 \
                    or o.cy + h > self.width + 1e-12:
                raise ValueError(f"obstacle {o} leaves the corridor")

    def obstacle_array(self) -> np.ndarray:
        if not self.obstacles:
            return np.zeros((0, 3))
        return np.array([[o.cx, o.cy, o.side] for o in self.obstacles], dtype=float)


@dataclass(frozen=True)
class SegmentResult:
    time: float
    timed_out: bool
    pedestrians: int = 0


def default_robot(speed_kmh: float = ROBOT_SPEED_KMH, width_m: float = ROBOT_WIDTH_M,
                  params: SfmParams | None = None) -> AgentState:
    return AgentState(np.zeros(2), np.array([speed_kmh * KMH, 0.0]), speed_kmh * KMH,
                      np.array([1.0, 0.0]), width_m / 2, AgentKind.ROBOT,
                      params or ROBOT_DEFAULT)


def _check_gaps(scene: CorridorScene, rad: float) -> None:
    if scene.width <= 2 * rad:
        raise BlockedGeometry("corridor is narrower than the robot")
    for o in scene.obstacles:
        h = o.side / 2
        gap = max(o.cy - h, scene.width - (o.cy + h))
        if gap < 2 * rad + CLEARANCE_M:
            raise BlockedGeometry(f"obstacle at x={o.cx:.2f} leaves a {gap:.2f} m gap")


def _pedestrians(scene: CorridorScene, horizon: float, rng: np.random.Generator):
    """Spawn times, positions, directions and speeds of all pedestrians.

    The corridor starts at its steady-state occupancy: a Poisson number of
    walkers spread uniformly, followed by Poisson arrivals at both ends.
    """
    (m_lo, m_hi), (w_lo, w_hi) = scene.ped_speed_dists
    rates = (2 * scene.ped_arrival_rate * scene.forward_share,
             2 * scene.ped_arrival_rate * (1 - scene.forward_share))
    mean_speed = 0.25 * (m_lo + m_hi + w_lo + w_hi)
    t, x, y, sgn, v = [], [], [], [], []
    r = PED_RADIUS_M
    for rate, sign in zip(rates, (1.0, -1.0)):
        if rate <= 0:
            continue
        k0 = rng.poisson(rate * scene.length / mean_speed)
        na = rng.poisson(rate * horizon)
        arrive = np.sort(rng.uniform(0.0, horizon, size=na))
        t.extend([0.0] * k0 + list(arrive))
        start = 0.0 if sign > 0 else scene.length
        x.extend(list(rng.uniform(0.0, scene.length, size=k0)) + [start] * na)
        y.extend(rng.uniform(r, scene.width - r, size=k0 + na))
        sgn.extend([sign] * (k0 + na))
        men = rng.random(k0 + na) < 0.5
        v.extend(np.where(men, rng.uniform(m_lo, m_hi, k0 + na),
                          rng.uniform(w_lo, w_hi, k0 + na)))
    order = np.argsort(np.asarray(t, dtype=float), kind="stable")
    f = lambda a: np.ascontiguousarray(np.asarray(a, dtype=float)[order])  # noqa: E731
    return f(t), f(x), f(y), f(sgn), f(v)


def simulate_segment(scene: CorridorScene, robot: AgentState,
                     cfg: SimConfig = SimConfig()) -> SegmentResult:
    """Robot traversal time through ``scene`` by explicit Euler integration.

    When the horizon passes first the result carries ``timed_out=True``
    and the horizon as its time.
    """
    _check_gaps(scene, robot.radius)
    rng = np.random.default_rng(np.random.SeedSequence([int(scene.seed), int(cfg.seed)]))
    t, x, y, sgn, v = _pedestrians(scene, cfg.horizon, rng)
    kernel_seed = int(rng.integers(0, 2**31 - 1))
    time, out, spawned = run_corridor(
        float(scene.length), float(scene.width), scene.obstacle_array(),
        float(robot.desired_speed), float(robot.radius), float(scene.width / 2),
        robot.params.as_array(), scene.ped_params.as_array(),
        t, x, y, sgn, v, np.full(t.size, PED_RADIUS_M), float(cfg.dt), float(cfg.horizon),
        float(cfg.dwell), PED_SPEED_CAP, kernel_seed)
    return SegmentResult(float(time), bool(out), int(spawned))


# --- network-level generation -------------------------------------------------


@dataclass(frozen=True)
class ObstacleConfig:
    """Obstacles per segment id (at most one square each)."""

    fraction: float
    placements: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.placements)


def place_obstacles(network: Network, fraction: float, seed=0, interior: bool = False,
                    width: float = SIDEWALK_WIDTH_M) -> ObstacleConfig:
    """Put one square on ``ceil(fraction * #sidewalks)`` random sidewalks.

    Squares touch a sidewalk edge unless ``interior`` is set, in which case
    the lateral position is uniform across the width.
    """
    if not 0 <= fraction <= 1:
        raise ValueError("fraction must lie in [0, 1]")
    rng = np.random.default_rng(np.random.SeedSequence([0x0B57, *np.atleast_1d(seed)]))
    ids = network.sidewalk_ids()
    k = math.ceil(fraction * len(ids) - 1e-12)
    chosen = sorted(int(i) for i in rng.choice(ids, size=k, replace=False)) if k else []
    out = {}
    for sid in chosen:
        L = network.segments[sid].length
        side = float(rng.uniform(*OBSTACLE_SIDE_M))
        side = min(side, 0.5 * L)
        cx = float(rng.uniform(side / 2, L - side / 2))
        if interior:
            cy = float(rng.uniform(side / 2, width - side / 2))
        else:
            cy = side / 2 if rng.random() < 0.5 else width - side / 2
        out[sid] = Obstacle(cx, cy, side)
    return ObstacleConfig(fraction, out)


_HOURLY = {10: 0.7, 11: 0.9, 12: 1.3, 13: 1.2, 14: 0.9, 15: 0.9, 16: 1.1, 17: 1.5, 18: 1.4,
           19: 1.0, 20: 0.7, 21: 0.5}


def demand_profile(days=range(7), hours=range(10, 22), multiplier: float = 1.0) -> dict:
    """Volume multiplier per (day, hour): lunch and evening peaks, quieter weekends."""
    prof = {}
    for d in days:
        week = 0.75 if d >= 5 else 1.0
        for h in hours:
            prof[(int(d), int(h))] = multiplier * week * _HOURLY.get(int(h), 0.4)
    return prof


def segment_activity(network: Network, seed=0) -> np.ndarray:
    """Static per-segment popularity factors (lognormal, mean about one)."""
    rng = np.random.default_rng(np.random.SeedSequence([0xAC71, *np.atleast_1d(seed)]))
    return np.exp(rng.normal(-0.18, 0.6, size=network.n))


def _direction_code(d: Direction) -> int:
    return 0 if d is Direction.FORWARD else 1


def _scenes_for_row(network, meta, mult, obstacles, activity, base_rate, master, fwd_share,
                    ped_params, ped_speed_factor):
    scenes = []
    dists = (tuple(v * KMH * ped_speed_factor for v in MEN_SPEED_KMH),
             tuple(v * KMH * ped_speed_factor for v in WOMEN_SPEED_KMH))
    share = fwd_share if meta.direction is Direction.FORWARD else 1 - fwd_share
    for s in network.segments:
        crossing = s.kind is SegmentKind.CROSSING
        width = CROSSING_WIDTH_M if crossing else SIDEWALK_WIDTH_M
        obst = () if crossing or s.id not in obstacles else (obstacles[s.id],)
        seed = int(np.random.SeedSequence(
            [int(master), meta.day, meta.hour, meta.obstacle_config,
             _direction_code(meta.direction), s.id]).generate_state(1)[0])
        scenes.append(CorridorScene(s.length, width, obst, base_rate * mult * activity[s.id],
                                    dists, seed, share, ped_params))
    return scenes


def _run_row(args):
    scenes, robot, cfg = args
    res = [simulate_segment(sc, robot, cfg) for sc in scenes]
    return [r.time for r in res], sum(r.timed_out for r in res)


def generate_scenario_matrix(network: Network, demand: dict, obstacle_fractions, robot=None,
                             cfg: SimConfig = SimConfig(), *, base_rate: float = BASE_RATE,
                             interior: bool = False, forward_share: float = MAJOR_SHARE,
                             ped_params: SfmParams = PEDESTRIAN_DEFAULT,
                             ped_speed_factor: float = 1.0, jobs: int = 1):
    """Simulate every segment for each (day, hour, obstacle config, direction).

    ``demand`` maps ``(day, hour)`` to a volume multiplier.  Rows are
    ordered by day, hour, obstacle configuration and direction.  Each
    (row, segment) task seeds itself from the master seed and its
    identifiers, so the output does not depend on ``jobs``.
    """
    robot = robot or default_robot()
    fr = [float(f) for f in obstacle_fractions]
    if any(not 0 <= f <= 1 for f in fr):
        raise ValueError("obstacle fractions must lie in [0, 1]")
    configs = [place_obstacles(network, f, seed=(cfg.seed, k), interior=interior)
               for k, f in enumerate(fr)]
    activity = segment_activity(network, cfg.seed)
    metas, tasks = [], []
    for (day, hour) in sorted(demand):
        for k, oc in enumerate(configs):
            for d in (Direction.FORWARD, Direction.REVERSE):
                meta = ScenarioMeta(day, hour, k, d)
                metas.append(meta)
                scenes = _scenes_for_row(network, meta, demand[(day, hour)], oc.placements,
                                         activity, base_rate, cfg.seed, forward_share,
                                         ped_params, ped_speed_factor)
                tasks.append((scenes, robot, cfg))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_row, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        results = [_run_row(t) for t in tasks]
    values = np.array([r[0] for r in results], dtype=float).reshape(len(tasks), network.n)
    timeouts = sum(r[1] for r in results)
    if timeouts:
        log.warning("%d segment runs hit the horizon", timeouts)
    ff = free_flow_times(network, robot, cfg)
    return ScenarioMatrix(values, metas), FreeFlowVector(ff)


def free_flow_times(network: Network, robot=None, cfg: SimConfig = SimConfig()) -> np.ndarray:
    """Traversal times with no pedestrians and no obstacles."""
    robot = robot or default_robot()
    out = []
    for s in network.segments:
        width = CROSSING_WIDTH_M if s.kind is SegmentKind.CROSSING else SIDEWALK_WIDTH_M
        out.append(simulate_segment(CorridorScene(s.length, width), robot, cfg).time)
    return np.array(out)


def generate_from_config(network: Network, rc, jobs: int = 1, horizon: float = 900.0):
    """``generate_scenario_matrix`` driven by a parsed ``RunConfig``."""
    robot = default_robot(rc.robot_speed_kmh, rc.robot_width_m, rc.robot_params)
    demand = demand_profile(rc.days, rc.hours, rc.demand_multiplier)
    return generate_scenario_matrix(network, demand, rc.obstacle_fractions, robot,
                                    SimConfig(rc.dt_s, horizon, rc.seed),
                                    interior=rc.interior_obstacles,
                                    ped_speed_factor=rc.ped_speed_factor, jobs=jobs)
