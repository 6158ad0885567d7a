"""Social-force corridor simulator producing per-segment travel times."""

from .forces import (AgentKind, AgentState, Geometry, Obstacle, elliptical_distance, heading,
                     total_force)
from .generate import (BASE_RATE, CROSSING_WIDTH_M, SIDEWALK_WIDTH_M, BlockedGeometry,
                       CorridorScene, ObstacleConfig, SegmentResult, SimConfig, default_robot,
                       demand_profile, free_flow_times, generate_from_config,
                       generate_scenario_matrix, place_obstacles, segment_activity,
                       simulate_segment)
from .params import (BEHAVIOR_PRESETS, PEDESTRIAN_DEFAULT, ROBOT_DEFAULT, Behavior, ConfigError,
                     RunConfig, SfmParams, dump_config, load_config, parse_config)

__all__ = [
    "AgentKind", "AgentState", "Geometry", "Obstacle", "elliptical_distance", "heading",
    "total_force", "BASE_RATE", "CROSSING_WIDTH_M", "SIDEWALK_WIDTH_M", "BlockedGeometry",
    "CorridorScene", "ObstacleConfig", "SegmentResult", "SimConfig", "default_robot",
    "demand_profile", "free_flow_times", "generate_from_config", "generate_scenario_matrix",
    "place_obstacles", "segment_activity", "simulate_segment", "BEHAVIOR_PRESETS",
    "PEDESTRIAN_DEFAULT", "ROBOT_DEFAULT", "Behavior", "ConfigError", "RunConfig", "SfmParams",
    "dump_config", "load_config", "parse_config",
]
