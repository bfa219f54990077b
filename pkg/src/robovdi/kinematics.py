"""Forward kinematics over a :class:`~robovdi.urdf.RobotModel`."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, ParseError
from .mesh import TriangleMesh
from .transforms import RigidTransform
from .urdf import Joint, RobotModel

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class JointState:
    timestamp: float = 0.0
    positions: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        pos = {str(k): float(v) for k, v in dict(self.positions).items()}
        for k, v in pos.items():
            if not math.isfinite(v):
                raise ConfigError(f"joint {k!r} has non-finite position {v}")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "timestamp", float(self.timestamp))


class LinkPoses(dict):
    """Mapping of link name to world pose.

    ``out_of_limits`` lists ``(joint, value, (lower, upper))`` for joints whose
    commanded value lies outside the declared limits. Those poses are still
    computed from the given value.
    """

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.out_of_limits: list[tuple[str, float, tuple[float, float]]] = []


def joint_motion(joint: Joint, q: float) -> RigidTransform:
    if joint.kind in ("revolute", "continuous"):
        return RigidTransform.from_axis_angle(joint.axis, q)
    if joint.kind == "prismatic":
        return RigidTransform.from_translation(joint.axis * q)
    return RigidTransform.identity()


def forward_kinematics(model: RobotModel, q: JointState) -> LinkPoses:
    """World pose of every link; the root link frame is the world frame."""
    poses = LinkPoses()
    for name, joint in model.walk():
        if joint is None:
            poses[name] = RigidTransform.identity()
            continue
        parent = poses[joint.parent_link]
        if not joint.movable:
            poses[name] = parent @ joint.origin
            continue
        try:
            value = q.positions[joint.name]
        except KeyError:
            raise ConfigError(f"joint state has no value for joint {joint.name!r}") from None
        if joint.limits is not None:
            lo, hi = joint.limits
            if not lo <= value <= hi:
                poses.out_of_limits.append((joint.name, value, joint.limits))
                log.warning("joint %s=%g outside limits [%g, %g]", joint.name, value, lo, hi)
        poses[name] = parent @ joint.origin @ joint_motion(joint, value)
    return poses


def posed_meshes(model: RobotModel, poses) -> list[tuple[TriangleMesh, RigidTransform]]:
    """Pair each meshed link with its world transform (link pose ∘ mesh offset)."""
    out = []
    for link in model.links:
        if link.mesh is None:
            continue
        if link.name not in poses:
            raise KeyError(f"no pose for meshed link {link.name!r}")
        out.append((link.mesh, poses[link.name] @ link.mesh_transform))
    return out


def zero_state(model: RobotModel, timestamp: float = 0.0) -> JointState:
    return JointState(timestamp, {j.name: 0.0 for j in model.movable_joints})


def read_trajectory_csv(path) -> list[JointState]:
    """Read ``t,<joint1>,...`` rows into joint states."""
    path = Path(path)
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path}: empty trajectory file") from None
        if not header or header[0] != "t":
            raise ParseError(f"{path}: first column must be 't'")
        names = header[1:]
        states = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}:{lineno}: expected {len(header)} columns, got {len(row)}")
            try:
                vals = [float(c) for c in row]
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-numeric value") from None
            states.append(JointState(vals[0], dict(zip(names, vals[1:]))))
    return states


def write_trajectory_csv(path, states, joint_names=None) -> None:
    states = list(states)
    if joint_names is None:
        joint_names = list(states[0].positions) if states else []
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["t", *joint_names])
        for s in states:
            w.writerow([repr(float(s.timestamp)), *(repr(float(s.positions[n])) for n in joint_names)])


def chain_vertices(model: RobotModel, q: JointState) -> np.ndarray:
    """All collision vertices in world coordinates, stacked in link order."""
    parts = [tf.apply(m.vertices) for m, tf in posed_meshes(model, forward_kinematics(model, q))]
    return np.concatenate(parts) if parts else np.zeros((0, 3))
