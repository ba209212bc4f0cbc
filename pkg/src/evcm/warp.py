"""Warp events to the batch reference time under a 2D constant-velocity model."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .events import EventBatch


@dataclass(frozen=True)
class Velocity:
    """Motion parameters in pixels per normalized time unit."""

    vx: float
    vy: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.vx) and math.isfinite(self.vy)):
            raise ValueError(f"velocity must be finite, got ({self.vx}, {self.vy})")


@dataclass(frozen=True)
class WarpedEvent:
    """Event displaced to the reference time; sub-pixel, ROI-local coords."""

    xw: float
    yw: float
    norm_dt: float


@dataclass(frozen=True)
class WarpedBatch:
    """Column-oriented warped batch; iterates as WarpedEvent for convenience."""

    xs: np.ndarray   # float64
    ys: np.ndarray   # float64
    dts: np.ndarray  # float64, normalized

    def __len__(self) -> int:
        return int(self.xs.shape[0])

    def __iter__(self) -> Iterator[WarpedEvent]:
        for x, y, dt in zip(self.xs, self.ys, self.dts):
            yield WarpedEvent(float(x), float(y), float(dt))


def warp_event(x: float, y: float, norm_dt: float, v: Velocity) -> WarpedEvent:
    """Displace one event: x' = x - dt*vx, y' = y - dt*vy."""
    return WarpedEvent(x - norm_dt * v.vx, y - norm_dt * v.vy, norm_dt)


def warp_batch(batch: EventBatch, v: Velocity) -> WarpedBatch:
    """Warp every event in the batch; order preserved, coordinates unclamped."""
    dts = batch.norm_dts
    xs = batch.xs.astype(np.float64) - dts * v.vx
    ys = batch.ys.astype(np.float64) - dts * v.vy
    return WarpedBatch(xs, ys, dts)
