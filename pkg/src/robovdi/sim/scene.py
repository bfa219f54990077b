"""Synthetic scenes: a posed robot plus target objects seen by one camera."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from ..camera import CameraModel
from ..depth import DepthImage
from ..kinematics import JointState, forward_kinematics, posed_meshes
from ..mesh import TriangleMesh
from ..occlusion import Label, OcclusionMask
from ..raster import render_vdi
from ..transforms import RigidTransform
from ..urdf import RobotModel
from .raycast import raycast_depth


@dataclass(frozen=True, eq=False)
class Target:
    name: str
    mesh: TriangleMesh
    pose: RigidTransform = field(default_factory=RigidTransform.identity)


@dataclass(frozen=True, eq=False)
class Scene:
    robot: RobotModel
    joints: JointState
    camera: CameraModel
    targets: tuple[Target, ...] = ()
    noise_sigma: float = 0.0
    seed: int | None = 0

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        names = [t.name for t in self.targets]
        if len(set(names)) != len(names):
            raise ValueError(f"target names must be unique: {names}")
        if not self.noise_sigma >= 0:
            raise ValueError("noise_sigma must be >= 0")

    def robot_meshes(self):
        return posed_meshes(self.robot, forward_kinematics(self.robot, self.joints))

    def target_meshes(self):
        return [(t.mesh, t.pose) for t in self.targets]


@dataclass(frozen=True, eq=False)
class SensorFrame:
    """Simulated sensor output plus ground truth.

    ``robot_depth`` and ``target_depths`` are ray-cast (oracle) depth images
    of the robot and of each target rendered alone.
    """

    actual: DepthImage
    vdi: DepthImage
    truth: OcclusionMask
    robot_depth: DepthImage
    target_depths: dict[str, DepthImage]


def truth_mask(robot_depth: np.ndarray, target_depth: np.ndarray) -> OcclusionMask:
    """Geometric labels: Visible iff a target surface lies strictly in front of the robot."""
    r_ok = robot_depth > 0
    visible = r_ok & (target_depth > 0) & (target_depth < robot_depth)
    labels = np.full(robot_depth.shape, int(Label.NO_ROBOT), dtype=np.uint8)
    labels[r_ok] = Label.OCCLUDED
    labels[visible] = Label.VISIBLE
    return OcclusionMask(labels)


def add_noise(img: DepthImage, sigma: float, rng: np.random.Generator, near: float, far: float) -> DepthImage:
    """Additive Gaussian noise on valid pixels, clamped back into ``[near, far]``."""
    if sigma == 0:
        return img
    d = img.data.copy()
    ok = d > 0
    d[ok] = np.clip(d[ok] + rng.normal(0.0, sigma, size=int(ok.sum())), near, far)
    return DepthImage(d)


def simulate_sensor(scene: Scene, rng: np.random.Generator | None = None) -> SensorFrame:
    cam = scene.camera
    robot = scene.robot_meshes()
    targets = scene.target_meshes()
    vdi = render_vdi(robot, cam)
    actual = render_vdi(robot + targets, cam)
    if rng is None:
        rng = np.random.default_rng(scene.seed)
    actual = add_noise(actual, scene.noise_sigma, rng, cam.near, cam.far)

    robot_depth = raycast_depth(robot, cam)
    target_depths = {t.name: raycast_depth([(t.mesh, t.pose)], cam) for t in scene.targets}
    nearest = np.full(cam.shape, np.inf)
    for d in target_depths.values():
        nearest = np.where(d.data > 0, np.minimum(nearest, d.data), nearest)
    nearest[~np.isfinite(nearest)] = 0.0
    return SensorFrame(actual, vdi, truth_mask(robot_depth.data, nearest), robot_depth, target_depths)


# --- silhouette boundaries --------------------------------------------------

_EIGHT = np.ones((3, 3), dtype=bool)


def silhouette_boundary(hit: np.ndarray) -> np.ndarray:
    """Pixels on either side of a coverage change (8-neighbourhood)."""
    hit = np.asarray(hit, dtype=np.uint8)
    grown = ndimage.maximum_filter(hit, size=3, mode="nearest")
    shrunk = ndimage.minimum_filter(hit, size=3, mode="nearest")
    return grown != shrunk


def near_boundary(hit_masks, radius: int = 1) -> np.ndarray:
    """Union of silhouette boundaries, dilated by ``radius`` pixels (Chebyshev)."""
    hit_masks = list(hit_masks)
    acc = np.zeros(np.asarray(hit_masks[0]).shape, dtype=bool)
    for h in hit_masks:
        acc |= silhouette_boundary(h)
    if radius > 0 and acc.any():
        acc = ndimage.binary_dilation(acc, structure=_EIGHT, iterations=radius)
    return acc
