"""Occlusion-handling policies for tracked targets.

``cv_update`` extrapolates at constant velocity while a target's occlusion
fraction is above a threshold. ``hold_update`` keeps the last target that
was seen unoccluded.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError


class Status(str, enum.Enum):
    MEASURED = "Measured"
    PREDICTED = "Predicted"
    EMPTY = "Empty"


@dataclass(frozen=True)
class PolicyConfig:
    occlusion_threshold: float = 0.05
    velocity_smoothing: float = 0.0

    def __post_init__(self):
        for name in ("occlusion_threshold", "velocity_smoothing"):
            v = getattr(self, name)
            if not (math.isfinite(v) and 0.0 <= v <= 1.0):
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")


def _vec(x) -> np.ndarray:
    a = np.array(x, dtype=np.float64).reshape(3)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TrackState:
    """Position-only track. ``orientation`` is carried along unchanged when predicting."""

    position: np.ndarray | None = None
    velocity: np.ndarray = np.zeros(3)
    timestamp: float | None = None
    status: Status = Status.EMPTY
    orientation: np.ndarray | None = None
    # False until a finite difference has been taken; the first one is not blended
    velocity_valid: bool = False

    def __post_init__(self):
        if self.status is Status.EMPTY:
            if self.position is not None:
                raise ValueError("Empty track cannot have a position")
        elif self.position is None:
            raise ValueError(f"{self.status.value} track needs a position")
        if self.position is not None:
            object.__setattr__(self, "position", _vec(self.position))
        object.__setattr__(self, "velocity", _vec(self.velocity))
        if not np.all(np.isfinite(self.velocity)):
            raise ValueError("velocity must be finite")

    @classmethod
    def empty(cls) -> TrackState:
        return cls()


def cv_update(
    state: TrackState,
    measurement,
    occlusion_fraction: float,
    t: float,
    cfg: PolicyConfig = PolicyConfig(),
    orientation=None,
) -> TrackState:
    """Advance a track to time ``t``.

    A measurement is accepted only when ``occlusion_fraction`` does not exceed
    the threshold; otherwise the last position is extrapolated with the last
    velocity.
    """
    if state.timestamp is not None and not t > state.timestamp:
        raise ValueError(f"timestamp {t} does not advance past {state.timestamp}")
    if measurement is not None:
        measurement = np.asarray(measurement, dtype=np.float64).reshape(3)
        if not np.all(np.isfinite(measurement)):
            raise ValueError("measurement is not finite")
    usable = measurement is not None and occlusion_fraction <= cfg.occlusion_threshold

    if state.status is Status.EMPTY:
        if not usable:
            return replace(state, timestamp=t)
        return TrackState(measurement, np.zeros(3), t, Status.MEASURED, orientation)

    dt = t - state.timestamp
    if usable:
        fd = (measurement - state.position) / dt
        if state.velocity_valid:
            s = cfg.velocity_smoothing
            velocity = (1.0 - s) * fd + s * state.velocity
        else:
            velocity = fd
        return TrackState(
            measurement, velocity, t, Status.MEASURED,
            orientation if orientation is not None else state.orientation, True,
        )
    return TrackState(
        state.position + state.velocity * dt, state.velocity, t, Status.PREDICTED,
        state.orientation, state.velocity_valid,
    )


def hold_update(state, target, occluded: bool):
    """Return ``target`` when it is present and unoccluded, else ``state``."""
    if not occluded and target is not None:
        return target
    return state
