"""Depth images and their on-disk formats.

Files are either 16-bit single-channel PNGs in millimeters (0 = invalid) or a
lossless text format (``.txt``): a ``# depth <width> <height>`` header
followed by one row of ``%.17g`` values per image row.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DataConsistencyError, ParseError

INVALID = 0.0
MAX_MM = np.iinfo(np.uint16).max


@dataclass(frozen=True, eq=False)
class DepthImage:
    """Row-major (height, width) grid of metric depth, 0.0 marking invalid pixels."""

    data: np.ndarray

    def __post_init__(self):
        d = np.array(self.data, dtype=np.float64)
        if d.ndim != 2:
            raise ValueError(f"depth image must be 2-D, got shape {d.shape}")
        d[~np.isfinite(d) | (d < 0)] = INVALID
        d.setflags(write=False)
        object.__setattr__(self, "data", d)

    @classmethod
    def empty(cls, width: int, height: int) -> DepthImage:
        return cls(np.zeros((height, width)))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def valid(self) -> np.ndarray:
        return self.data > 0

    def count_valid(self) -> int:
        return int(np.count_nonzero(self.data))

    def __getitem__(self, uv) -> float:
        u, v = uv
        return float(self.data[v, u])

    def equals(self, other: DepthImage) -> bool:
        return self.shape == other.shape and np.array_equal(self.data, other.data)


def check_same_shape(*images) -> None:
    shapes = {im.shape for im in images}
    if len(shapes) > 1:
        raise DataConsistencyError(f"image dimensions differ: {sorted(shapes)}")


def to_millimeters(img: DepthImage) -> np.ndarray:
    mm = np.rint(img.data * 1000.0)
    if mm.max(initial=0) > MAX_MM:
        raise ValueError("depth exceeds 65.535 m, not representable as 16-bit millimeters")
    return mm.astype(np.uint16)


def write_depth(path, img: DepthImage) -> None:
    path = Path(path)
    if path.suffix.lower() == ".txt":
        with open(path, "w") as f:
            f.write(f"# depth {img.width} {img.height}\n")
            np.savetxt(f, img.data, fmt="%.17g")
        return
    Image.fromarray(to_millimeters(img)).save(path, compress_level=1)


def read_depth(path) -> DepthImage:
    path = Path(path)
    if path.suffix.lower() == ".txt":
        with open(path) as f:
            head = f.readline().split()
            if len(head) != 4 or head[:2] != ["#", "depth"]:
                raise ParseError(f"{path}: missing '# depth <width> <height>' header")
            w, h = int(head[2]), int(head[3])
            data = np.loadtxt(f, dtype=np.float64, ndmin=2)
        if data.shape != (h, w):
            raise ParseError(f"{path}: header says {w}x{h}, body is {data.shape[1]}x{data.shape[0]}")
        return DepthImage(data)
    with Image.open(path) as im:
        arr = np.array(im)
    if arr.ndim != 2:
        raise ParseError(f"{path}: depth image must be single-channel")
    return DepthImage(arr.astype(np.float64) / 1000.0)
