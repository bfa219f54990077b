"""Scenario generators built on the bundled ``arm6`` robot.

World frame is the robot base frame (z up). The default camera sits in
front of the robot on the +x side, looking back at it from above.

Robot poses used here:

* ``PARKED`` folds the arm forward and low, below every camera ray that
  reaches the conveyor or the handover hand, so it occludes nothing.
* ``UPRIGHT`` (all zeros) stands the arm vertically at the origin, shadowing
  targets that pass behind it near ``y = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from ..camera import CameraModel, deproject, look_at, project
from ..kinematics import JointState, forward_kinematics, posed_meshes
from ..mesh import box
from ..occlusion import Label, region_occlusion_fraction
from ..transforms import RigidTransform
from ..urdf import RobotModel, load_urdf
from .raycast import raycast_depth
from .scene import Scene, SensorFrame, Target, simulate_sensor

ARM6_JOINTS = (
    "shoulder_pan_joint",
    "shoulder_lift_joint",
    "elbow_joint",
    "wrist_1_joint",
    "wrist_2_joint",
    "wrist_3_joint",
)
PARKED = (0.0, math.pi / 2, 0.0, 0.0, 0.0, 0.0)
UPRIGHT = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0)

CAMERA_EYE = (2.2, 0.0, 1.4)
CAMERA_LOOK = (0.0, 0.0, 0.45)


def arm6_path():
    return resources.files("robovdi") / "data" / "arm6.urdf"


def load_arm6() -> RobotModel:
    with resources.as_file(arm6_path()) as p:
        return load_urdf(p)


def arm6_state(values, t: float = 0.0) -> JointState:
    return JointState(t, dict(zip(ARM6_JOINTS, values)))


def default_camera(width: int = 160, height: int = 120, near: float = 0.5, far: float = 3.0) -> CameraModel:
    """Pinhole camera with a 640x480 / f=600 px field of view at any resolution."""
    s = width / 640.0
    return CameraModel(
        width, height, 600.0 * s, 600.0 * s, width / 2.0, height / 2.0, near, far,
        look_at(CAMERA_EYE, CAMERA_LOOK),
    )


# --- one target in front of the robot, one behind ----------------------------


def _depth_range(cam: CameraModel, meshes) -> tuple[float, float]:
    z = np.concatenate([(cam.world_to_camera @ tf).apply(m.vertices)[:, 2] for m, tf in meshes])
    return float(z.min()), float(z.max())


def front_back_scene(rng: np.random.Generator, robot: RobotModel | None = None,
                     cam: CameraModel | None = None, gap: float = 0.05,
                     max_tries: int = 200) -> Scene:
    """Random robot pose with box ``front`` nearer than the whole robot and box ``back`` behind it.

    Both boxes sit on the viewing ray through a random robot link, so each
    overlaps the robot silhouette. ``front`` clears the nearest robot point
    by ``gap``; ``back`` clears the link it is aimed at by ``gap``. Draws are
    repeated until :func:`separated` holds.
    """
    robot = robot or load_arm6()
    cam = cam or default_camera()
    c2w = cam.camera_to_world
    for _ in range(max_tries):
        q = rng.uniform(-1.2, 1.2, size=6)
        q[1] = rng.uniform(-0.9, 0.9)
        joints = arm6_state(q)
        meshes = posed_meshes(robot, forward_kinematics(robot, joints))
        zmin, _ = _depth_range(cam, meshes)
        anchor = meshes[rng.integers(2, len(meshes))]
        _, link_zmax = _depth_range(cam, [anchor])
        mesh, tf = anchor
        anchor_cam = (cam.world_to_camera @ tf).apply(mesh.vertices.mean(axis=0))
        ray = anchor_cam / anchor_cam[2]

        targets = []
        for name, size_rng in (("front", (0.06, 0.14)), ("back", (0.1, 0.25))):
            size = rng.uniform(*size_rng, size=3)
            rot = RigidTransform.from_rpy(rng.uniform(-math.pi, math.pi, size=3))
            half_depth = 0.5 * float(np.linalg.norm(size))  # bounding-sphere radius
            zc = zmin - gap - half_depth if name == "front" else link_zmax + gap + half_depth
            offset = rng.uniform(-0.04, 0.04, size=2)
            center_cam = ray * zc + np.array([offset[0], offset[1], 0.0])
            targets.append(Target(name, box(size), RigidTransform(rot.rotation, c2w.apply(center_cam))))
        scene = Scene(robot, joints, cam, targets)
        if separated(scene, gap):
            return scene
    raise RuntimeError(f"no separated front/back scene found in {max_tries} draws")


def separated(scene: Scene, gap: float = 0.0) -> bool:
    """Check the front/back layout of a :func:`front_back_scene`.

    ``front`` must lie wholly nearer than the robot; ``back`` must be farther
    than the robot by more than ``gap`` on every pixel where both are hit.
    Both boxes must sit inside the camera's depth range.
    """
    cam = scene.camera
    robot = scene.robot_meshes()
    zmin, _ = _depth_range(cam, robot)
    front, back = scene.targets[0], scene.targets[1]
    f = _depth_range(cam, [(front.mesh, front.pose)])
    b = _depth_range(cam, [(back.mesh, back.pose)])
    if not (f[0] > cam.near and f[1] < zmin - gap and b[1] < cam.far):
        return False
    rd = raycast_depth(robot, cam).data
    bd = raycast_depth([(back.mesh, back.pose)], cam).data
    both = (rd > 0) & (bd > 0)
    return bool(both.any() and (bd[both] > rd[both] + gap).all())


# --- time-sequenced scenarios ------------------------------------------------


@dataclass(frozen=True, eq=False)
class Frame:
    """One simulated frame of a tracking scenario.

    ``region`` is the target's own silhouette (what a detector's mask would
    cover). ``measurement`` is the detector's world-frame position estimate:
    truth plus noise when the target is clear, and the (wrong) deprojection of
    the region center through the robot when it is occluded.
    """

    index: int
    t: float
    joints: JointState
    truth: np.ndarray
    sensor: SensorFrame
    region: np.ndarray | None = None
    keypoint: tuple[int, int] | None = None
    expected_fraction: float = 0.0
    measurement: np.ndarray | None = None


@dataclass(frozen=True)
class ConveyorParams:
    duration: float = 3.0
    fps: float = 30.0
    speed: float = 0.3
    occlusion_window: tuple[float, float] = (1.0, 2.0)
    noise_sigma: float = 0.0
    seed: int = 0
    start: tuple[float, float, float] = (-0.45, -0.45, 0.3)
    size: tuple[float, float, float] = (0.12, 0.12, 0.12)
    width: int = 160
    height: int = 120


def _check_window(duration: float, window) -> tuple[float, float]:
    if duration < 0:
        raise ValueError("duration must be >= 0")
    if window is None:
        return (0.0, 0.0)
    a, b = (float(x) for x in window)
    if not (0.0 <= a <= b <= max(duration, 0.0)):
        raise ValueError(f"occlusion window {window} must satisfy 0 <= start <= end <= duration ({duration})")
    return a, b


def frame_times(duration: float, fps: float) -> np.ndarray:
    if fps <= 0:
        raise ValueError("fps must be > 0")
    n = int(math.floor(duration * fps + 1e-9))
    return np.arange(n) / fps


def _in_window(t: float, window) -> bool:
    return window[0] < window[1] and window[0] <= t < window[1]


def _region_center_measurement(cam, sensor: SensorFrame, region: np.ndarray):
    """Detector output when it trusts the raw depth at its mask's center pixel."""
    vs, us = np.nonzero(region)
    u, v = int(round(us.mean())), int(round(vs.mean()))
    d = sensor.actual.data[v, u]
    if not d > 0:
        return None
    return cam.camera_to_world.apply(deproject(cam, u, v, d))


def conveyor_scenario(duration: float = 3.0, speed: float = 0.3, occlusion_window=(1.0, 2.0),
                      params: ConveyorParams | None = None, robot: RobotModel | None = None,
                      cam: CameraModel | None = None, threshold: float = 0.05) -> list[Frame]:
    """A box moving along +y behind the robot; the arm stands upright (shadowing) inside the window.

    ``expected_fraction`` is the ground-truth share of the box's silhouette
    hidden by the robot.
    """
    p = params or ConveyorParams(duration=duration, speed=speed, occlusion_window=tuple(occlusion_window))
    window = _check_window(p.duration, p.occlusion_window)
    robot = robot or load_arm6()
    cam = cam or default_camera(p.width, p.height)
    rng = np.random.default_rng(p.seed)
    mesh = box(p.size)
    start = np.asarray(p.start, dtype=np.float64)
    frames = []
    for i, t in enumerate(frame_times(p.duration, p.fps)):
        truth = start + np.array([0.0, p.speed * t, 0.0])
        q = arm6_state(UPRIGHT if _in_window(t, window) else PARKED, t)
        scene = Scene(robot, q, cam, [Target("box", mesh, RigidTransform.from_translation(truth))],
                      noise_sigma=p.noise_sigma)
        sensor = simulate_sensor(scene, rng)
        region = sensor.target_depths["box"].data > 0
        fraction = region_occlusion_fraction(sensor.truth, region) if region.any() else 0.0
        if fraction > threshold and region.any():
            meas = _region_center_measurement(cam, sensor, region)
        else:
            meas = truth + (rng.normal(0.0, p.noise_sigma, 3) if p.noise_sigma > 0 else 0.0)
        frames.append(Frame(i, float(t), q, truth, sensor, region if region.any() else None, None, fraction, meas))
    return frames


@dataclass(frozen=True)
class HandoverParams:
    duration: float = 2.0
    fps: float = 30.0
    occlusion_window: tuple[float, float] = (0.7, 1.3)
    hand_start: tuple[float, float, float] = (-0.45, 0.0, 0.5)
    hand_velocity: tuple[float, float, float] = (0.0, 0.0, 0.05)
    hand_size: tuple[float, float, float] = (0.08, 0.08, 0.08)
    noise_sigma: float = 0.0
    seed: int = 0
    width: int = 160
    height: int = 120


def handover_scenario(params: HandoverParams | None = None, robot: RobotModel | None = None,
                      cam: CameraModel | None = None) -> list[Frame]:
    """A hand (box) behind the robot drifting upward; the arm stands between camera and hand in the window.

    The keypoint is the projection of the hand's camera-facing center.
    ``truth`` is the 3D point on the hand surface seen through the keypoint
    pixel; ``measurement`` is left to the consumer (deproject the keypoint).
    """
    p = params or HandoverParams()
    window = _check_window(p.duration, p.occlusion_window)
    robot = robot or load_arm6()
    cam = cam or default_camera(p.width, p.height)
    rng = np.random.default_rng(p.seed)
    mesh = box(p.hand_size)
    eye = cam.camera_to_world.translation
    frames = []
    for i, t in enumerate(frame_times(p.duration, p.fps)):
        center = np.asarray(p.hand_start) + np.asarray(p.hand_velocity) * t
        q = arm6_state(UPRIGHT if _in_window(t, window) else PARKED, t)
        scene = Scene(robot, q, cam, [Target("hand", mesh, RigidTransform.from_translation(center))],
                      noise_sigma=p.noise_sigma)
        sensor = simulate_sensor(scene, rng)
        towards_cam = eye - center
        face = center + 0.5 * np.asarray(p.hand_size) * np.sign(towards_cam) * (np.abs(towards_cam) == np.abs(towards_cam).max())
        u, v, _ = project(cam, face)
        kp = (int(round(u)), int(round(v)))
        hand_d = sensor.target_depths["hand"].data[kp[1], kp[0]]
        truth = cam.camera_to_world.apply(deproject(cam, kp[0], kp[1], hand_d)) if hand_d > 0 else center
        occluded = sensor.truth[kp] is Label.OCCLUDED
        frames.append(Frame(i, float(t), q, truth, sensor, None, kp, 1.0 if occluded else 0.0, None))
    return frames
