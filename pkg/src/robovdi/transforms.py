"""Rigid transforms stored as a unit quaternion plus translation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation


def _as_vec3(v) -> np.ndarray:
    a = np.array(v, dtype=np.float64).reshape(3)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """Maps points from a child frame into a parent frame: ``p' = R p + t``.

    ``rotation`` is a scipy ``Rotation`` (always unit-norm internally).
    Composition ``a @ b`` applies ``b`` first, matching matrix products.
    """

    rotation: Rotation = field(default_factory=Rotation.identity)
    translation: np.ndarray = field(default_factory=lambda: _as_vec3((0.0, 0.0, 0.0)))

    def __post_init__(self):
        object.__setattr__(self, "translation", _as_vec3(self.translation))

    @classmethod
    def identity(cls) -> RigidTransform:
        return cls()

    @classmethod
    def from_quaternion(cls, wxyz, translation=(0.0, 0.0, 0.0), tol: float = 1e-6) -> RigidTransform:
        """Build from a scalar-first quaternion; rejects non-unit input."""
        q = np.asarray(wxyz, dtype=np.float64).reshape(4)
        norm = np.linalg.norm(q)
        if not np.isfinite(norm) or abs(norm - 1.0) > tol:
            raise ValueError(f"quaternion {q.tolist()} is not unit norm (|q|={norm:.9g})")
        return cls(Rotation.from_quat(q[[1, 2, 3, 0]]), translation)

    @classmethod
    def from_rpy(cls, rpy, xyz=(0.0, 0.0, 0.0)) -> RigidTransform:
        # URDF rpy: fixed-axis roll about X, then pitch about Y, then yaw about Z.
        return cls(Rotation.from_euler("xyz", np.asarray(rpy, dtype=np.float64)), xyz)

    @classmethod
    def from_axis_angle(cls, axis, angle: float) -> RigidTransform:
        return cls(Rotation.from_rotvec(np.asarray(axis, dtype=np.float64) * angle))

    @classmethod
    def from_translation(cls, xyz) -> RigidTransform:
        return cls(Rotation.identity(), xyz)

    @classmethod
    def from_matrix(cls, m) -> RigidTransform:
        m = np.asarray(m, dtype=np.float64)
        return cls(Rotation.from_matrix(m[:3, :3]), m[:3, 3])

    @property
    def quaternion(self) -> np.ndarray:
        """Scalar-first unit quaternion (w, x, y, z) with w >= 0."""
        x, y, z, w = self.rotation.as_quat()
        q = np.array([w, x, y, z])
        return -q if w < 0 else q

    def as_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation.as_matrix()
        m[:3, 3] = self.translation
        return m

    def __matmul__(self, other: RigidTransform) -> RigidTransform:
        if not isinstance(other, RigidTransform):
            return NotImplemented
        return RigidTransform(
            self.rotation * other.rotation,
            self.rotation.apply(other.translation) + self.translation,
        )

    def inverse(self) -> RigidTransform:
        inv = self.rotation.inv()
        return RigidTransform(inv, -inv.apply(self.translation))

    def apply(self, points) -> np.ndarray:
        """Transform an (N, 3) array (or a single 3-vector) of points."""
        pts = np.asarray(points, dtype=np.float64)
        return self.rotation.apply(pts) + self.translation

    def is_close(self, other: RigidTransform, atol: float = 1e-9) -> bool:
        return bool(np.allclose(self.as_matrix(), other.as_matrix(), rtol=0.0, atol=atol))

    def __repr__(self):
        q = np.array2string(self.quaternion, precision=6)
        t = np.array2string(self.translation, precision=6)
        return f"RigidTransform(q={q}, t={t})"
