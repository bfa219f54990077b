"""Per-pixel occlusion classification from an actual and a virtual depth image.

A pixel covered by the robot (valid virtual depth ``dv``) is *Visible* when
the sensor measured something strictly nearer than the robot,
``d < dv - epsilon``, and *Occluded* otherwise. Two extra labels separate
pixels the robot does not cover (*NoRobot*) from sensor dropouts inside the
robot silhouette (*Unknown*).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .camera import CameraModel, deproject
from .depth import DepthImage, check_same_shape
from .errors import ConfigError, DataConsistencyError, ParseError


class Label(enum.IntEnum):
    """Pixel labels; values are the gray levels used in mask files."""

    NO_ROBOT = 0
    VISIBLE = 64
    UNKNOWN = 128
    OCCLUDED = 255


@dataclass(frozen=True)
class OcclusionConfig:
    epsilon: float = 0.01

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and self.epsilon >= 0):
            raise ConfigError(f"epsilon must be finite and >= 0, got {self.epsilon}")


def _is_valid(d) -> bool:
    return d is not None and math.isfinite(d) and d > 0


def classify_pixel(d, dv, cfg: OcclusionConfig) -> Label:
    """Label one pixel from sensor depth ``d`` and virtual depth ``dv``.

    Either depth may be ``None``, 0, negative or NaN to mean "no reading".
    """
    if not _is_valid(dv):
        return Label.NO_ROBOT
    if not _is_valid(d):
        return Label.UNKNOWN
    return Label.VISIBLE if d < dv - cfg.epsilon else Label.OCCLUDED


@dataclass(frozen=True, eq=False)
class OcclusionMask:
    labels: np.ndarray  # (H, W) uint8 holding Label values

    def __post_init__(self):
        lab = np.array(self.labels, dtype=np.uint8)
        if lab.ndim != 2:
            raise ValueError("mask must be 2-D")
        if not np.isin(lab, [int(x) for x in Label]).all():
            raise ValueError("mask holds values outside the label set")
        lab.setflags(write=False)
        object.__setattr__(self, "labels", lab)

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape

    def __getitem__(self, uv) -> Label:
        u, v = uv
        return Label(int(self.labels[v, u]))

    def is_label(self, label: Label) -> np.ndarray:
        return self.labels == int(label)

    def counts(self) -> dict[str, int]:
        return {lab.name: int(np.count_nonzero(self.labels == int(lab))) for lab in Label}

    def equals(self, other: OcclusionMask) -> bool:
        return self.shape == other.shape and np.array_equal(self.labels, other.labels)


def occlusion_mask(actual: DepthImage, vdi: DepthImage, cfg: OcclusionConfig) -> OcclusionMask:
    """Apply :func:`classify_pixel` to every pixel."""
    check_same_shape(actual, vdi)
    d, dv = actual.data, vdi.data
    d_ok, dv_ok = d > 0, dv > 0
    labels = np.full(d.shape, int(Label.NO_ROBOT), dtype=np.uint8)
    labels[dv_ok & ~d_ok] = Label.UNKNOWN
    both = dv_ok & d_ok
    visible = both & (d < dv - cfg.epsilon)
    labels[visible] = Label.VISIBLE
    labels[both & ~visible] = Label.OCCLUDED
    return OcclusionMask(labels)


class UnknownPolicy(str, enum.Enum):
    """How Unknown pixels count towards a region's occlusion fraction."""

    OCCLUDED = "occluded"
    VISIBLE = "visible"
    IGNORE = "ignore"


def region_pixels(mask_shape, region) -> np.ndarray:
    """Boolean (H, W) selection for a bounding box ``(x, y, w, h)`` or a boolean array."""
    h, w = mask_shape
    if isinstance(region, np.ndarray) and region.dtype == bool:
        if region.shape != (h, w):
            raise DataConsistencyError(f"region shape {region.shape} != mask shape {(h, w)}")
        sel = region
    else:
        x, y, rw, rh = (int(c) for c in region)
        if rw <= 0 or rh <= 0:
            raise ValueError("empty region")
        if x < 0 or y < 0 or x + rw > w or y + rh > h:
            raise ValueError(f"region {(x, y, rw, rh)} outside {w}x{h} image")
        sel = np.zeros((h, w), dtype=bool)
        sel[y:y + rh, x:x + rw] = True
    if not sel.any():
        raise ValueError("empty region")
    return sel


def region_occlusion_fraction(mask: OcclusionMask, region, unknown: UnknownPolicy | str = UnknownPolicy.OCCLUDED) -> float:
    """Fraction of the region's pixels that the robot hides.

    The denominator is every pixel of the region (NoRobot pixels are target
    pixels with nothing in front of them). ``unknown`` decides whether
    Unknown pixels count as occluded, as visible, or are left out entirely.
    """
    unknown = UnknownPolicy(unknown)
    sel = region_pixels(mask.shape, region)
    lab = mask.labels[sel]
    occluded = np.count_nonzero(lab == Label.OCCLUDED)
    n_unknown = np.count_nonzero(lab == Label.UNKNOWN)
    total = lab.size
    if unknown is UnknownPolicy.OCCLUDED:
        occluded += n_unknown
    elif unknown is UnknownPolicy.IGNORE:
        total -= n_unknown
    return occluded / total if total else 0.0


class Signal(enum.Enum):
    POINT = "point"
    OCCLUDED = "occluded"
    UNKNOWN = "unknown"


@dataclass(frozen=True, eq=False)
class Deprojection:
    """Outcome of :func:`safe_deproject`; ``point`` is set only for ``Signal.POINT``."""

    signal: Signal
    point: np.ndarray | None = None

    @property
    def ok(self) -> bool:
        return self.signal is Signal.POINT


def safe_deproject(u: int, v: int, actual: DepthImage, mask: OcclusionMask, cam: CameraModel) -> Deprojection:
    """Deproject pixel ``(u, v)`` only when its depth does not belong to the robot.

    Occluded pixels never yield a point: their depth is the robot surface.
    """
    if not (0 <= u < mask.width and 0 <= v < mask.height):
        raise IndexError(f"pixel ({u}, {v}) outside {mask.width}x{mask.height} image")
    check_same_shape(actual, mask)
    label = mask[u, v]
    if label is Label.OCCLUDED:
        return Deprojection(Signal.OCCLUDED)
    d = actual[u, v]
    if label is Label.UNKNOWN or not d > 0:
        return Deprojection(Signal.UNKNOWN)
    return Deprojection(Signal.POINT, deproject(cam, u, v, d))


TINT = (255, 0, 0)
ALPHA = 0.5


def overlay(mask: OcclusionMask, color_image: np.ndarray, tint=TINT, alpha: float = ALPHA) -> np.ndarray:
    """Blend ``tint`` into Occluded pixels of an (H, W, 3) uint8 image."""
    img = np.asarray(color_image)
    if img.shape[:2] != mask.shape or img.ndim != 3 or img.shape[2] != 3:
        raise DataConsistencyError(f"color image {img.shape} does not match mask {mask.shape}")
    out = img.astype(np.uint8, copy=True)
    occ = mask.is_label(Label.OCCLUDED)
    blended = (1.0 - alpha) * img[occ].astype(np.float64) + alpha * np.asarray(tint, dtype=np.float64)
    out[occ] = np.clip(np.rint(blended), 0, 255).astype(np.uint8)
    return out


def depth_to_gray(img: DepthImage, near: float, far: float) -> np.ndarray:
    """Grayscale RGB rendering of a depth image for overlays (near = bright)."""
    d = img.data
    g = np.where(d > 0, 255.0 * (far - np.clip(d, near, far)) / (far - near), 0.0)
    g = np.rint(g).astype(np.uint8)
    return np.repeat(g[:, :, None], 3, axis=2)


def write_mask(path, mask: OcclusionMask) -> None:
    Image.fromarray(mask.labels).save(Path(path), compress_level=1)


def read_mask(path) -> OcclusionMask:
    with Image.open(path) as im:
        arr = np.array(im)
    if arr.ndim != 2:
        raise ParseError(f"{path}: mask must be single-channel")
    try:
        return OcclusionMask(arr)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None
