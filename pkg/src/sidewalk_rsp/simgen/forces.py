"""Agent state, corridor geometry and the reference force evaluation."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .params import PEDESTRIAN_DEFAULT, SfmParams

VD_STEP_S = 0.1      # time base that turns VD into a step length
SENSE_RANGE_M = 10.0
SLOW_FRACTION = 0.9  # "below desired speed" means under this share of v0


class AgentKind(str, enum.Enum):
    PEDESTRIAN = "pedestrian"
    ROBOT = "robot"


@dataclass
class AgentState:
    position: np.ndarray
    velocity: np.ndarray
    desired_speed: float
    desired_direction: np.ndarray
    radius: float
    kind: AgentKind = AgentKind.PEDESTRIAN
    params: SfmParams = PEDESTRIAN_DEFAULT

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.velocity = np.asarray(self.velocity, dtype=float)
        self.desired_direction = np.asarray(self.desired_direction, dtype=float)
        if self.desired_speed <= 0 or self.radius <= 0:
            raise ValueError("desired speed and radius must be positive")
        if abs(np.linalg.norm(self.desired_direction) - 1.0) > 1e-9:
            raise ValueError("desired direction must be a unit vector")


@dataclass(frozen=True)
class Obstacle:
    """Axis-aligned square given by its centre and side length."""

    cx: float
    cy: float
    side: float

    def nearest_point(self, p) -> np.ndarray:
        h = self.side / 2
        return np.array([np.clip(p[0], self.cx - h, self.cx + h),
                         np.clip(p[1], self.cy - h, self.cy + h)])


@dataclass(frozen=True)
class Geometry:
    """Corridor ``[0, length] x [0, width]`` with two long walls."""

    length: float
    width: float
    obstacles: tuple = field(default_factory=tuple)

    def boundary_points(self, p) -> list[np.ndarray]:
        pts = [np.array([p[0], 0.0]), np.array([p[0], self.width])]
        pts.extend(o.nearest_point(p) for o in self.obstacles)
        return pts


def heading(agent: AgentState) -> np.ndarray:
    s = np.linalg.norm(agent.velocity)
    return agent.velocity / s if s > 1e-9 else agent.desired_direction


def elliptical_distance(d_vec, y_vec) -> float:
    """Semi-minor axis of the ellipse through ``d_vec`` with foci offset ``y_vec``."""
    d = np.linalg.norm(d_vec)
    dy = np.linalg.norm(d_vec - y_vec)
    y = np.linalg.norm(y_vec)
    return 0.5 * np.sqrt(max((d + dy) ** 2 - y ** 2, 0.0))


def total_force(agent: AgentState, neighbors, geometry: Geometry | None = None,
                rng: np.random.Generator | None = None, slow_time: float = 0.0,
                dwell: float = 2.0) -> np.ndarray:
    """Acceleration on ``agent``: driving, social, boundary and noise terms.

    ``neighbors`` should be ordered by distance; only the first
    ``react_to_n`` feel the isotropic term.  The mean term ignores
    agents behind the current heading.
    """
    p = agent.params
    F = (agent.desired_speed * agent.desired_direction - agent.velocity) / p.tau
    e = heading(agent)
    for k, nb in enumerate(neighbors):
        d_vec = agent.position - nb.position
        dist = np.linalg.norm(d_vec)
        if dist < 1e-12:
            continue
        n = d_vec / dist
        if k < p.react_to_n:
            gap = dist - agent.radius - nb.radius
            w = p.lambda_aniso + (1 - p.lambda_aniso) * (1 + e @ (-n)) / 2
            F = F + p.a_soc_iso * w * np.exp(-gap / p.b_soc_iso) * n
        if dist <= SENSE_RANGE_M and e @ (-d_vec) >= 0:
            b = elliptical_distance(d_vec, p.vd * VD_STEP_S * nb.velocity)
            gap = max(b - agent.radius - nb.radius, 0.0)
            F = F + p.a_soc_mean * np.exp(-gap / p.b_soc_mean) * n
    if geometry is not None:
        for q in geometry.boundary_points(agent.position):
            d_vec = agent.position - q
            dist = np.linalg.norm(d_vec)
            if dist < 1e-12:
                continue
            gap = dist - agent.radius
            F = F + p.a_soc_iso * np.exp(-gap / p.b_soc_iso) * d_vec / dist
    if rng is not None and p.noise > 0 and slow_time >= dwell:
        ang = rng.uniform(0, 2 * np.pi)
        F = F + rng.uniform(0, p.noise) * np.array([np.cos(ang), np.sin(ang)])
    return F
