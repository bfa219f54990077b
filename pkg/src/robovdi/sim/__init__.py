"""Synthetic scenes, simulated sensor frames and a ray-casting depth oracle."""

from .raycast import raycast_depth
from .scene import Scene, SensorFrame, Target, near_boundary, silhouette_boundary, simulate_sensor
from .scenarios import conveyor_scenario, default_camera, front_back_scene, handover_scenario, load_arm6

__all__ = [
    "Scene", "SensorFrame", "Target", "conveyor_scenario", "default_camera", "front_back_scene",
    "handover_scenario", "load_arm6", "near_boundary", "raycast_depth", "silhouette_boundary",
    "simulate_sensor",
]
