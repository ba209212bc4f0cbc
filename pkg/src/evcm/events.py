"""Event data model, text ingestion, batch construction and ROI filtering.

An event batch carries its events together with the reference time (the
batch midpoint) and per-event time offsets normalized to [-1, 1]. ROI
filtering re-bases coordinates to be relative to the ROI origin; the
normalization computed on the full batch is kept, so filtering never
changes the time scale.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np


class EventParseError(ValueError):
    """Malformed input line; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str) -> None:
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class EventValidationError(ValueError):
    """Event fields outside the declared sensor geometry."""

    def __init__(self, line_no: int, message: str) -> None:
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class Event:
    """One camera event: timestamp (microseconds), pixel coords, polarity."""

    t: int
    x: int
    y: int
    p: int  # -1 or +1 after ingestion

    def __post_init__(self) -> None:
        if self.p not in (-1, 1):
            raise ValueError(f"polarity must be -1 or +1, got {self.p}")


@dataclass(frozen=True)
class Roi:
    """Tracked region: origin (sub-pixel, real-valued) and integer size."""

    x0: float
    y0: float
    w: int
    h: int

    def __post_init__(self) -> None:
        if self.w < 2 or self.h < 2:
            raise ValueError(f"ROI must be at least 2x2, got {self.w}x{self.h}")

    @property
    def center(self) -> tuple[float, float]:
        return (self.x0 + self.w / 2.0, self.y0 + self.h / 2.0)


@dataclass(frozen=True)
class EventBatch:
    """Ordered event collection with derived reference time and normalized dts.

    Coordinates are relative to ``origin`` (global pixel offset); a batch
    built straight from the stream has origin (0, 0). ``extent`` is the
    (w, h) of the ROI the batch was filtered to, if any.
    """

    ts: np.ndarray        # int64, microseconds, non-decreasing
    xs: np.ndarray        # int64, origin-relative columns
    ys: np.ndarray        # int64, origin-relative rows
    ps: np.ndarray        # int8, -1/+1
    t_ref: float          # microseconds
    half_span_us: float   # (t_last - t_first) / 2
    norm_dts: np.ndarray  # float64 in [-1, 1]
    origin: tuple[int, int] = (0, 0)
    extent: tuple[int, int] | None = None

    def __len__(self) -> int:
        return int(self.ts.shape[0])

    @property
    def events(self) -> list[Event]:
        return [
            Event(int(t), int(x), int(y), int(p))
            for t, x, y, p in zip(self.ts, self.xs, self.ys, self.ps)
        ]


def _iter_lines(source) -> Iterator[str]:
    if isinstance(source, (str, Path)):
        with open(source, "rb") as fh:
            yield from (ln.decode("ascii", errors="replace") for ln in fh)
        return
    if isinstance(source, bytes):
        yield from io.BytesIO(source).read().decode("ascii", errors="replace").splitlines()
        return
    for ln in source:
        yield ln.decode("ascii", errors="replace") if isinstance(ln, bytes) else ln


def parse_events(
    source,
    fmt: str = "text",
    sensor_size: tuple[int, int] | None = None,
) -> list[Event]:
    """Parse a line-oriented ``t x y p`` event file.

    Timestamps containing a decimal point are seconds (rounded to integer
    microseconds); plain integers are microseconds. Polarity 0 maps to -1,
    1 to +1. Lines starting with ``#`` and blank lines are skipped.
    """
    if fmt != "text":
        raise ValueError(f"unsupported format: {fmt!r}")
    events: list[Event] = []
    for line_no, raw in enumerate(_iter_lines(source), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 4:
            raise EventParseError(line_no, f"expected 4 fields, got {len(parts)}")
        t_tok, x_tok, y_tok, p_tok = parts
        try:
            t = int(round(float(t_tok) * 1e6)) if "." in t_tok else int(t_tok)
            x = int(x_tok)
            y = int(y_tok)
            p = int(p_tok)
        except ValueError as exc:
            raise EventParseError(line_no, f"unparseable field: {exc}") from None
        if t < 0 or x < 0 or y < 0:
            raise EventValidationError(line_no, f"negative field in {line!r}")
        if p not in (0, 1, -1):
            raise EventParseError(line_no, f"polarity must be 0 or 1, got {p}")
        if sensor_size is not None:
            sw, sh = sensor_size
            if x >= sw or y >= sh:
                raise EventValidationError(
                    line_no, f"coordinates ({x}, {y}) outside sensor {sw}x{sh}"
                )
        events.append(Event(t, x, y, -1 if p == 0 else (1 if p == 1 else -1)))
    return events


def make_batch(events: Sequence[Event] | Iterable[Event]) -> EventBatch:
    """Build a batch: reference time at the midpoint, dts scaled to [-1, 1].

    A zero-span batch (all timestamps equal) gets all-zero normalized dts.
    """
    evs = list(events)
    if not evs:
        raise ValueError("cannot build a batch from an empty event sequence")
    ts = np.array([e.t for e in evs], dtype=np.int64)
    if np.any(np.diff(ts) < 0):
        raise ValueError("events must be sorted by timestamp")
    xs = np.array([e.x for e in evs], dtype=np.int64)
    ys = np.array([e.y for e in evs], dtype=np.int64)
    ps = np.array([e.p for e in evs], dtype=np.int8)
    t_first = float(ts[0])
    t_last = float(ts[-1])
    t_ref = t_first + (t_last - t_first) / 2.0
    half = (t_last - t_first) / 2.0
    if half > 0.0:
        norm_dts = (ts.astype(np.float64) - t_ref) / half
    else:
        norm_dts = np.zeros(len(evs), dtype=np.float64)
    return EventBatch(ts, xs, ys, ps, t_ref, half, norm_dts)


def filter_roi(batch: EventBatch, roi: Roi) -> EventBatch:
    """Keep events inside the ROI, re-based to ROI-local coordinates.

    The original batch's reference time and normalization scale are kept.
    The result may be empty; callers must handle that. Filtering an
    already-filtered batch with the same ROI is a no-op (the containment
    test is evaluated in the batch's own coordinate frame).
    """
    gx0 = int(np.floor(roi.x0))
    gy0 = int(np.floor(roi.y0))
    lx0 = gx0 - batch.origin[0]
    ly0 = gy0 - batch.origin[1]
    mask = (
        (batch.xs >= lx0)
        & (batch.xs < lx0 + roi.w)
        & (batch.ys >= ly0)
        & (batch.ys < ly0 + roi.h)
    )
    return replace(
        batch,
        ts=batch.ts[mask],
        xs=batch.xs[mask] - lx0,
        ys=batch.ys[mask] - ly0,
        ps=batch.ps[mask],
        norm_dts=batch.norm_dts[mask],
        origin=(gx0, gy0),
        extent=(roi.w, roi.h),
    )
