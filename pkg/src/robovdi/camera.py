"""Pinhole camera: intrinsics, view transform, near/far range.

Camera frame convention: x right, y down, z forward along the optical axis.
Depth values are camera-frame Z, not ray length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import yaml
from scipy.spatial.transform import Rotation

from .errors import ConfigError
from .transforms import RigidTransform


class BehindCameraError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CameraModel:
    width: int
    height: int
    fx: float
    fy: float
    cx: float
    cy: float
    near: float = 0.5
    far: float = 3.0
    world_to_camera: RigidTransform = field(default_factory=RigidTransform.identity)

    def __post_init__(self):
        for k in ("fx", "fy", "cx", "cy", "near", "far"):
            v = getattr(self, k)
            if not math.isfinite(v):
                raise ConfigError(f"camera {k} is not finite")
        if int(self.width) <= 0 or int(self.height) <= 0:
            raise ConfigError("camera width and height must be positive")
        if not 0.0 < self.near < self.far:
            raise ConfigError(f"camera range requires 0 < near < far (near={self.near}, far={self.far})")
        if self.fx <= 0 or self.fy <= 0:
            raise ConfigError("focal lengths must be positive")
        if not (0 < self.cx < self.width and 0 < self.cy < self.height):
            raise ConfigError("principal point must lie inside the image")
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))

    @property
    def shape(self) -> tuple[int, int]:
        return self.height, self.width

    @property
    def camera_to_world(self) -> RigidTransform:
        return self.world_to_camera.inverse()

    @property
    def K(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    def with_pose(self, world_to_camera: RigidTransform) -> CameraModel:
        return replace(self, world_to_camera=world_to_camera)

    def with_range(self, near: float, far: float) -> CameraModel:
        return replace(self, near=near, far=far)

    def scaled(self, factor: float) -> CameraModel:
        """Same field of view at ``factor`` times the resolution."""
        return replace(
            self,
            width=round(self.width * factor),
            height=round(self.height * factor),
            fx=self.fx * factor,
            fy=self.fy * factor,
            cx=self.cx * factor,
            cy=self.cy * factor,
        )


def project_camera(cam: CameraModel, p_cam) -> tuple[float, float, float]:
    X, Y, Z = (float(c) for c in np.asarray(p_cam, dtype=np.float64).reshape(3))
    if not Z > 0:
        raise BehindCameraError(f"point with camera-frame Z={Z} is not in front of the camera")
    return cam.fx * X / Z + cam.cx, cam.fy * Y / Z + cam.cy, Z


def project(cam: CameraModel, p_world) -> tuple[float, float, float]:
    """World point to ``(u, v, depth)`` in pixels and meters."""
    return project_camera(cam, cam.world_to_camera.apply(p_world))


def project_points(cam: CameraModel, pts_cam: np.ndarray) -> np.ndarray:
    """Vectorised projection of camera-frame points, no Z check. Returns (N, 3) u, v, Z."""
    pts = np.asarray(pts_cam, dtype=np.float64)
    Z = pts[:, 2]
    return np.column_stack([cam.fx * pts[:, 0] / Z + cam.cx, cam.fy * pts[:, 1] / Z + cam.cy, Z])


def deproject(cam: CameraModel, u: float, v: float, depth: float) -> np.ndarray:
    """Pixel plus depth to a camera-frame point."""
    if not (math.isfinite(depth) and depth > 0):
        raise ValueError(f"invalid depth {depth!r}")
    return np.array([depth * (u - cam.cx) / cam.fx, depth * (v - cam.cy) / cam.fy, depth])


def pixel_rays(cam: CameraModel, us=None, vs=None) -> np.ndarray:
    """Camera-frame ray directions with unit Z for the given pixel grid.

    Pixel (row i, column j) has its center at ``u = j, v = i``.
    """
    us = np.arange(cam.width, dtype=np.float64) if us is None else np.asarray(us, dtype=np.float64)
    vs = np.arange(cam.height, dtype=np.float64) if vs is None else np.asarray(vs, dtype=np.float64)
    uu, vv = np.meshgrid(us, vs)
    return np.stack([(uu - cam.cx) / cam.fx, (vv - cam.cy) / cam.fy, np.ones_like(uu)], axis=-1)


def gl_projection_matrix(cam: CameraModel) -> np.ndarray:
    """OpenGL-style projection with ``fx/cx`` and ``fy/cy`` scale terms.

    Only equivalent to the pixel-space :func:`project` when the principal
    point is the image center; kept for comparison with GL pipelines.
    """
    n, f = cam.near, cam.far
    return np.array(
        [
            [cam.fx / cam.cx, 0.0, 0.0, 0.0],
            [0.0, cam.fy / cam.cy, 0.0, 0.0],
            [0.0, 0.0, -(f + n) / (f - n), -2.0 * f * n / (f - n)],
            [0.0, 0.0, -1.0, 0.0],
        ]
    )


def look_at(eye, target, up=(0.0, 0.0, 1.0)) -> RigidTransform:
    """World-to-camera transform for a camera at ``eye`` looking at ``target``."""
    eye = np.asarray(eye, dtype=np.float64)
    z = np.asarray(target, dtype=np.float64) - eye
    z /= np.linalg.norm(z)
    x = np.cross(z, np.asarray(up, dtype=np.float64))
    if np.linalg.norm(x) < 1e-9:
        raise ValueError("view direction is parallel to up vector")
    x /= np.linalg.norm(x)
    y = np.cross(z, x)
    cam_to_world = RigidTransform(Rotation.from_matrix(np.column_stack([x, y, z])), eye)
    return cam_to_world.inverse()


_FIELDS = ("width", "height", "fx", "fy", "cx", "cy", "near", "far", "pose")


def camera_from_dict(cfg: dict) -> CameraModel:
    if not isinstance(cfg, dict):
        raise ConfigError("camera config must be a mapping")
    missing = [k for k in _FIELDS if k not in cfg]
    if missing:
        raise ConfigError(f"camera config missing field(s): {', '.join(missing)}")
    pose = cfg["pose"]
    if not isinstance(pose, (list, tuple)) or len(pose) != 7:
        raise ConfigError("pose must be [tx, ty, tz, qw, qx, qy, qz]")
    try:
        pose = [float(x) for x in pose]
        tf = RigidTransform.from_quaternion(pose[3:], pose[:3], tol=1e-6)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad camera pose: {exc}") from None
    try:
        return CameraModel(
            int(cfg["width"]), int(cfg["height"]),
            float(cfg["fx"]), float(cfg["fy"]), float(cfg["cx"]), float(cfg["cy"]),
            float(cfg["near"]), float(cfg["far"]), tf,
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad camera field: {exc}") from None


def load_camera(config_text: str) -> CameraModel:
    """Parse a key/value (YAML or JSON) camera description.

    ``pose`` is the world-to-camera transform as
    ``[tx, ty, tz, qw, qx, qy, qz]``.
    """
    try:
        cfg = yaml.safe_load(config_text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"camera config is not valid YAML: {exc}") from None
    return camera_from_dict(cfg)


def camera_to_dict(cam: CameraModel) -> dict:
    tf = cam.world_to_camera
    return {
        "width": cam.width, "height": cam.height,
        "fx": cam.fx, "fy": cam.fy, "cx": cam.cx, "cy": cam.cy,
        "near": cam.near, "far": cam.far,
        "pose": [float(x) for x in (*tf.translation, *tf.quaternion)],
    }


def dump_camera(cam: CameraModel) -> str:
    return yaml.safe_dump(camera_to_dict(cam), sort_keys=False)
