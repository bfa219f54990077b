"""Scenario description files (YAML).

Three kinds are understood::

    kind: conveyor          # box on a conveyor passing behind the arm
    duration: 3.0
    fps: 30
    speed: 0.3
    occlusion_window: [1.0, 2.0]   # default: middle third of the duration
    noise_sigma: 0.0
    seed: 0
    width: 160              # optional image size, default camera FOV
    height: 120
    camera: camera.yaml     # optional; path or inline mapping

    kind: handover          # hand behind the arm, keypoint tracked
    duration, fps, occlusion_window, noise_sigma, seed, width, height, camera

    kind: scene             # arbitrary robot, trajectory and static targets
    robot: robot.urdf
    trajectory: traj.csv
    camera: camera.yaml
    noise_sigma: 0.0
    seed: 0
    targets:
      - {name: front, box: [0.1, 0.1, 0.1], pose: [tx, ty, tz, qw, qx, qy, qz]}
      - {name: part, mesh: part.stl, scale: [1, 1, 1], pose: [...]}

Relative paths resolve against the scenario file's directory. Conveyor and
handover scenarios always use the bundled ``arm6`` robot.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from ..camera import CameraModel, camera_from_dict, load_camera
from ..errors import ConfigError
from ..kinematics import read_trajectory_csv
from ..mesh import box, read_stl
from ..transforms import RigidTransform
from ..urdf import load_urdf
from . import scenarios
from .scene import Scene, Target, simulate_sensor
from .scenarios import ARM6_JOINTS, ConveyorParams, Frame, HandoverParams


@dataclass
class LoadedScenario:
    kind: str
    frames: list
    camera: CameraModel
    robot_path: Path
    fps: float
    joint_names: list[str]


def _camera(spec, base: Path, width: int, height: int) -> CameraModel:
    if spec is None:
        return scenarios.default_camera(width, height)
    if isinstance(spec, dict):
        return camera_from_dict(spec)
    path = base / spec
    if not path.is_file():
        raise FileNotFoundError(f"camera config not found: {path}")
    return load_camera(path.read_text())


def _target(spec: dict, base: Path) -> Target:
    name = spec.get("name")
    if not name:
        raise ConfigError("target without name")
    if "box" in spec:
        mesh = box(spec["box"])
    elif "mesh" in spec:
        path = base / spec["mesh"]
        if not path.is_file():
            raise FileNotFoundError(f"target mesh not found: {path}")
        mesh = read_stl(path)
        if "scale" in spec:
            mesh = mesh.scaled(spec["scale"])
    else:
        raise ConfigError(f"target {name!r} needs 'box' or 'mesh'")
    pose = [float(x) for x in spec.get("pose", [0, 0, 0, 1, 0, 0, 0])]
    if len(pose) != 7:
        raise ConfigError(f"target {name!r}: pose must have 7 values")
    return Target(name, mesh, RigidTransform.from_quaternion(pose[3:], pose[:3]))


def load_scenario(path) -> LoadedScenario:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"scenario file not found: {path}")
    try:
        spec = yaml.safe_load(path.read_text()) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    if not isinstance(spec, dict):
        raise ConfigError(f"{path}: scenario must be a mapping")
    base = path.parent
    kind = spec.get("kind", "conveyor")
    width, height = int(spec.get("width", 160)), int(spec.get("height", 120))
    fps = float(spec.get("fps", 30.0))
    cam = _camera(spec.get("camera"), base, width, height)

    def window(duration):
        # default: the middle third of the run
        return tuple(spec.get("occlusion_window", (duration / 3.0, 2.0 * duration / 3.0)))

    if kind == "conveyor":
        duration = float(spec.get("duration", 3.0))
        p = ConveyorParams(
            duration=duration,
            fps=fps,
            speed=float(spec.get("speed", 0.3)),
            occlusion_window=window(duration),
            noise_sigma=float(spec.get("noise_sigma", 0.0)),
            seed=int(spec.get("seed", 0)),
        )
        frames = scenarios.conveyor_scenario(params=p, cam=cam)
        return LoadedScenario(kind, frames, cam, Path(str(scenarios.arm6_path())), fps, list(ARM6_JOINTS))
    if kind == "handover":
        duration = float(spec.get("duration", 2.0))
        p = HandoverParams(
            duration=duration,
            fps=fps,
            occlusion_window=window(duration),
            noise_sigma=float(spec.get("noise_sigma", 0.0)),
            seed=int(spec.get("seed", 0)),
        )
        frames = scenarios.handover_scenario(params=p, cam=cam)
        return LoadedScenario(kind, frames, cam, Path(str(scenarios.arm6_path())), fps, list(ARM6_JOINTS))
    if kind == "scene":
        for key in ("robot", "trajectory"):
            if key not in spec:
                raise ConfigError(f"scene scenario needs '{key}'")
        robot_path = base / spec["robot"]
        if not robot_path.is_file():
            raise FileNotFoundError(f"robot URDF not found: {robot_path}")
        traj_path = base / spec["trajectory"]
        if not traj_path.is_file():
            raise FileNotFoundError(f"trajectory not found: {traj_path}")
        robot = load_urdf(robot_path)
        states = read_trajectory_csv(traj_path)
        targets = [_target(t, base) for t in spec.get("targets", [])]
        noise = float(spec.get("noise_sigma", 0.0))
        rng = np.random.default_rng(int(spec.get("seed", 0)))
        frames = []
        for i, q in enumerate(states):
            sensor = simulate_sensor(Scene(robot, q, cam, targets, noise), rng)
            frames.append(Frame(i, q.timestamp, q, None, sensor))
        names = list(states[0].positions) if states else [j.name for j in robot.movable_joints]
        return LoadedScenario(kind, frames, cam, robot_path, fps, names)
    raise ConfigError(f"unknown scenario kind {kind!r}")
