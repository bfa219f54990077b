"""Simulated dataset layout on disk.

::

    <dir>/manifest.json     kind, fps, robot URDF path, per-frame records
    <dir>/camera.yaml
    <dir>/trajectory.csv    t,<joint1>,...
    <dir>/actual/NNNNNN.png 16-bit millimeter depth
    <dir>/vdi/NNNNNN.png
    <dir>/truth/NNNNNN.png  occlusion mask
    <dir>/region/NNNNNN.png target silhouette (0/255), when the scenario has one

Frame records hold ``index``, ``t``, ``truth`` (world xyz or null),
``measurement`` (world xyz or null), ``keypoint`` ([u, v] or null),
``region`` (file name or null) and ``expected_fraction``.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .camera import CameraModel, dump_camera, load_camera
from .depth import DepthImage, read_depth, write_depth
from .errors import ParseError
from .kinematics import JointState, read_trajectory_csv, write_trajectory_csv
from .occlusion import OcclusionMask, read_mask, write_mask

MANIFEST = "manifest.json"
VERSION = 1


def frame_name(i: int, ext: str = ".png") -> str:
    return f"{i:06d}{ext}"


def _vec_or_none(v):
    return None if v is None else [float(x) for x in np.asarray(v).reshape(-1)]


def write_dataset(out_dir, kind: str, frames, cam: CameraModel, robot_path, fps: float, joint_names=None) -> Path:
    """Write scenario frames (see :mod:`robovdi.sim.scenarios`) as a replayable dataset."""
    out = Path(out_dir)
    for sub in ("actual", "vdi", "truth", "region"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    (out / "camera.yaml").write_text(dump_camera(cam))
    write_trajectory_csv(out / "trajectory.csv", [f.joints for f in frames], joint_names)
    records = []
    for f in frames:
        name = frame_name(f.index)
        write_depth(out / "actual" / name, f.sensor.actual)
        write_depth(out / "vdi" / name, f.sensor.vdi)
        write_mask(out / "truth" / name, f.sensor.truth)
        region = None
        if f.region is not None:
            Image.fromarray(np.where(f.region, 255, 0).astype(np.uint8)).save(out / "region" / name)
            region = name
        records.append(
            {
                "index": f.index,
                "t": f.t,
                "truth": _vec_or_none(f.truth),
                "measurement": _vec_or_none(f.measurement),
                "keypoint": None if f.keypoint is None else [int(f.keypoint[0]), int(f.keypoint[1])],
                "region": region,
                "expected_fraction": float(f.expected_fraction),
            }
        )
    manifest = {
        "version": VERSION,
        "kind": kind,
        "fps": fps,
        "robot": os.fspath(Path(robot_path).resolve()),
        "camera": "camera.yaml",
        "trajectory": "trajectory.csv",
        "frames": records,
    }
    (out / MANIFEST).write_text(json.dumps(manifest, indent=1))
    return out


@dataclass(frozen=True, eq=False)
class Dataset:
    root: Path
    manifest: dict
    camera: CameraModel
    trajectory: list[JointState]

    @property
    def kind(self) -> str:
        return self.manifest.get("kind", "")

    @property
    def frames(self) -> list[dict]:
        return self.manifest["frames"]

    @property
    def robot_path(self) -> Path:
        return Path(self.manifest["robot"])

    def __len__(self) -> int:
        return len(self.frames)

    def actual(self, i: int) -> DepthImage:
        return read_depth(self.root / "actual" / frame_name(i))

    def vdi(self, i: int) -> DepthImage:
        return read_depth(self.root / "vdi" / frame_name(i))

    def truth(self, i: int) -> OcclusionMask:
        return read_mask(self.root / "truth" / frame_name(i))

    def region(self, i: int) -> np.ndarray | None:
        name = self.frames[i].get("region")
        if not name:
            return None
        with Image.open(self.root / "region" / name) as im:
            return np.array(im) > 0


def read_dataset(path) -> Dataset:
    root = Path(path)
    mpath = root / MANIFEST
    if not mpath.is_file():
        raise FileNotFoundError(f"no {MANIFEST} in {root}")
    try:
        manifest = json.loads(mpath.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{mpath}: {exc}") from None
    if manifest.get("version") != VERSION or "frames" not in manifest:
        raise ParseError(f"{mpath}: unsupported dataset manifest")
    cam = load_camera((root / manifest.get("camera", "camera.yaml")).read_text())
    traj = read_trajectory_csv(root / manifest.get("trajectory", "trajectory.csv"))
    return Dataset(root, manifest, cam, traj)
