"""Bilinear voting and accumulation of the three gradient images.

Each warped event spreads over its four neighboring pixels with bilinear
weights; alongside the plain weight, every pixel receives the two velocity
derivatives of that weight. Two accumulators are provided:

* ``NaiveAccumulator`` sums contributions straight into dense grids.
* ``BankedAccumulator`` structurally emulates the hardware datapath:
  12 memory banks (3 image roles x 4 coordinate-parity banks), each a
  3-stage read-modify-write pipeline with a 3-entry forwarding buffer
  resolving same-address hazards, and clear-on-read semantics.

The banked accumulator must produce results bit-identical to the naive one
for any input; a forwarding-disabled variant exists only to demonstrate
the hazard it fixes.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .warp import WarpedBatch, WarpedEvent

# Accumulation pipeline: read, add, write-back. The forwarding buffer covers
# exactly the in-flight window.
PIPELINE_DEPTH = 3
FORWARD_DEPTH = 3

ROLES = ("iwe", "d_vx", "d_vy")


class VotingConfigError(ValueError):
    pass


@dataclass(frozen=True)
class VoteContribution:
    """One pixel's share of a warped event: weight plus its two velocity
    derivatives."""

    pixel: tuple[int, int]  # (i, j) ROI-local
    w: float
    dwx: float
    dwy: float


@dataclass
class ImageSet:
    """The three accumulated images over an ROI grid, plus accepted mass."""

    iwe: np.ndarray   # (h, w)
    d_vx: np.ndarray  # (h, w)
    d_vy: np.ndarray  # (h, w)
    in_bounds_mass: float

    @property
    def shape(self) -> tuple[int, int]:
        h, w = self.iwe.shape
        return (w, h)

    def write_pgm(self, path, which: str = "iwe", scale: float | None = None) -> None:
        grid = getattr(self, which)
        write_pgm(grid, path, scale=scale)


def write_pgm(grid: np.ndarray, path, scale: float | None = None) -> None:
    """Export a grid as 16-bit ASCII PGM; the scale factor applied to the
    raw values is recorded in a header comment."""
    if scale is None:
        peak = float(grid.max()) if grid.size else 0.0
        scale = 65535.0 / peak if peak > 0 else 1.0
    values = np.clip(np.rint(grid * scale), 0, 65535).astype(np.uint16)
    h, w = values.shape
    lines = [f"P2", f"# scale {scale!r}", f"{w} {h}", "65535"]
    lines.extend(" ".join(str(v) for v in row) for row in values)
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def bilinear_votes(we: WarpedEvent, shape: tuple[int, int]) -> list[VoteContribution]:
    """Vote contributions of one warped event to its four neighbor pixels.

    Pixels outside [0, w) x [0, h) are dropped. Weights follow the bilinear
    split of the fractional coordinates; the derivative entries are the
    weight's sensitivity to vx and vy (chain rule through x' = x - dt*v).
    """
    w_dim, h_dim = shape
    i = math.floor(we.xw)
    j = math.floor(we.yw)
    dx = we.xw - i
    dy = we.yw - j
    ndt = -we.norm_dt
    cells = (
        (i, j, (1.0 - dx) * (1.0 - dy), -(1.0 - dy), -(1.0 - dx)),
        (i + 1, j, dx * (1.0 - dy), (1.0 - dy), -dx),
        (i, j + 1, (1.0 - dx) * dy, -dy, (1.0 - dx)),
        (i + 1, j + 1, dx * dy, dy, dx),
    )
    out = []
    for ci, cj, w, dw_ddx, dw_ddy in cells:
        if 0 <= ci < w_dim and 0 <= cj < h_dim:
            out.append(VoteContribution((ci, cj), w, ndt * dw_ddx, ndt * dw_ddy))
    return out


def _vote_arrays(warped: WarpedBatch):
    """Vectorized vote stream for a whole warped batch.

    Returns (I, J, W, DWX, DWY), each of shape (n, 4) with the fixed pixel
    order (i,j), (i+1,j), (i,j+1), (i+1,j+1). No bounds filtering here.
    """
    xs, ys, dts = warped.xs, warped.ys, warped.dts
    ii = np.floor(xs).astype(np.int64)
    jj = np.floor(ys).astype(np.int64)
    dx = xs - ii
    dy = ys - jj
    one_dx = 1.0 - dx
    one_dy = 1.0 - dy
    I = np.stack([ii, ii + 1, ii, ii + 1], axis=1)
    J = np.stack([jj, jj, jj + 1, jj + 1], axis=1)
    W = np.stack([one_dx * one_dy, dx * one_dy, one_dx * dy, dx * dy], axis=1)
    ndt = (-dts)[:, None]
    DWX = ndt * np.stack([-one_dy, one_dy, -dy, dy], axis=1)
    DWY = ndt * np.stack([-one_dx, -dx, one_dx, dx], axis=1)
    return I, J, W, DWX, DWY


def _as_warped_batch(warped) -> WarpedBatch:
    if isinstance(warped, WarpedBatch):
        return warped
    evs = list(warped)
    return WarpedBatch(
        xs=np.array([e.xw for e in evs], dtype=np.float64),
        ys=np.array([e.yw for e in evs], dtype=np.float64),
        dts=np.array([e.norm_dt for e in evs], dtype=np.float64),
    )


class NaiveAccumulator:
    """Dense-grid reference accumulator with clear-on-read."""

    def __init__(self, shape: tuple[int, int]) -> None:
        w, h = shape
        if w < 2 or h < 2:
            raise VotingConfigError(f"grid must be at least 2x2, got {w}x{h}")
        self.shape = shape
        self._iwe = np.zeros(h * w, dtype=np.float64)
        self._dvx = np.zeros(h * w, dtype=np.float64)
        self._dvy = np.zeros(h * w, dtype=np.float64)

    def accumulate(self, warped) -> None:
        warped = _as_warped_batch(warped)
        if len(warped) == 0:
            return
        w_dim, h_dim = self.shape
        I, J, W, DWX, DWY = _vote_arrays(warped)
        mask = (I >= 0) & (I < w_dim) & (J >= 0) & (J < h_dim)
        flat = (J * w_dim + I)[mask]
        np.add.at(self._iwe, flat, W[mask])
        np.add.at(self._dvx, flat, DWX[mask])
        np.add.at(self._dvy, flat, DWY[mask])

    def read_and_clear(self) -> ImageSet:
        w_dim, h_dim = self.shape
        imgs = ImageSet(
            iwe=self._iwe.reshape(h_dim, w_dim).copy(),
            d_vx=self._dvx.reshape(h_dim, w_dim).copy(),
            d_vy=self._dvy.reshape(h_dim, w_dim).copy(),
            in_bounds_mass=float(self._iwe.sum()),
        )
        self._iwe[:] = 0.0
        self._dvx[:] = 0.0
        self._dvy[:] = 0.0
        return imgs


class _Bank:
    """One memory bank with a simulated 3-stage read-modify-write pipeline.

    Updates spend PIPELINE_DEPTH cycles in flight before the write-back
    lands. With forwarding enabled, an incoming address matching an
    in-flight entry reads the in-flight value instead of the stale memory
    word; disabling forwarding reproduces the lost-update hazard.
    """

    __slots__ = ("mem", "inflight", "forwarding", "writes")

    def __init__(self, n_words: int, forwarding: bool = True) -> None:
        self.mem = np.zeros(n_words, dtype=np.float64)
        self.inflight: deque[tuple[int, float]] = deque()
        self.forwarding = forwarding
        self.writes = 0

    def add(self, addr: int, value: float) -> None:
        base = None
        if self.forwarding:
            for a, v in reversed(self.inflight):
                if a == addr:
                    base = v
                    break
        if base is None:
            base = self.mem[addr]          # stage 1: memory read
        acc = base + value                 # stage 2: add
        self.inflight.append((addr, acc))  # stage 3 pending: write-back
        self.writes += 1
        if len(self.inflight) > FORWARD_DEPTH:
            a, v = self.inflight.popleft()
            self.mem[a] = v

    def flush(self) -> None:
        while self.inflight:
            a, v = self.inflight.popleft()
            self.mem[a] = v

    def clear(self) -> None:
        self.mem[:] = 0.0
        self.inflight.clear()


class BankedAccumulator:
    """Structural emulation of the banked accumulation datapath.

    3 image roles x 4 parity banks = 12 bank instances. A bilinear stencil's
    four pixels always have distinct coordinate parities, so one event's
    contributions land in four different banks and could be written in a
    single hardware cycle. Zero-valued contributions are not issued.

    ``read_and_clear`` models the clear-on-read BRAM scheme: it returns the
    accumulated grids and leaves every bank zeroed for the next iteration.
    """

    def __init__(self, shape: tuple[int, int], forwarding: bool = True) -> None:
        w, h = shape
        if w % 2 != 0 or h % 2 != 0:
            raise VotingConfigError(
                f"banked mode needs even grid dimensions, got {w}x{h}"
            )
        if w < 2 or h < 2:
            raise VotingConfigError(f"grid must be at least 2x2, got {w}x{h}")
        self.shape = shape
        n_words = (w // 2) * (h // 2)
        self._banks = {
            role: [_Bank(n_words, forwarding) for _ in range(4)] for role in ROLES
        }

    def accumulate(self, warped) -> None:
        warped = _as_warped_batch(warped)
        if len(warped) == 0:
            return
        w_dim, h_dim = self.shape
        half_w = w_dim // 2
        I, J, W, DWX, DWY = _vote_arrays(warped)
        iwe_banks = self._banks["iwe"]
        dvx_banks = self._banks["d_vx"]
        dvy_banks = self._banks["d_vy"]
        n = I.shape[0]
        for k in range(n):
            for c in range(4):
                i = I[k, c]
                j = J[k, c]
                if not (0 <= i < w_dim and 0 <= j < h_dim):
                    continue
                bank_idx = (i & 1) + 2 * (j & 1)
                addr = (j >> 1) * half_w + (i >> 1)
                w = W[k, c]
                if w != 0.0:
                    iwe_banks[bank_idx].add(addr, w)
                dwx = DWX[k, c]
                if dwx != 0.0:
                    dvx_banks[bank_idx].add(addr, dwx)
                dwy = DWY[k, c]
                if dwy != 0.0:
                    dvy_banks[bank_idx].add(addr, dwy)

    def bank_occupancy(self, role: str = "iwe") -> tuple[int, int, int, int]:
        """Non-zero updates issued per parity bank for one image role."""
        return tuple(b.writes for b in self._banks[role])  # type: ignore[return-value]

    def _assemble(self, role: str) -> np.ndarray:
        w_dim, h_dim = self.shape
        grid = np.empty((h_dim, w_dim), dtype=np.float64)
        banks = self._banks[role]
        # bank index = (i & 1) + 2 * (j & 1)
        grid[0::2, 0::2] = banks[0].mem.reshape(h_dim // 2, w_dim // 2)
        grid[0::2, 1::2] = banks[1].mem.reshape(h_dim // 2, w_dim // 2)
        grid[1::2, 0::2] = banks[2].mem.reshape(h_dim // 2, w_dim // 2)
        grid[1::2, 1::2] = banks[3].mem.reshape(h_dim // 2, w_dim // 2)
        return grid

    def read_and_clear(self) -> ImageSet:
        for banks in self._banks.values():
            for b in banks:
                b.flush()
        iwe = self._assemble("iwe")
        imgs = ImageSet(
            iwe=iwe,
            d_vx=self._assemble("d_vx"),
            d_vy=self._assemble("d_vy"),
            in_bounds_mass=float(iwe.sum()),
        )
        for banks in self._banks.values():
            for b in banks:
                b.clear()
        return imgs


def clear_on_read(acc) -> ImageSet:
    """Read the accumulated grids and reset the accumulator to zero."""
    return acc.read_and_clear()


def accumulate_naive(warped, shape: tuple[int, int]) -> ImageSet:
    acc = NaiveAccumulator(shape)
    acc.accumulate(warped)
    return acc.read_and_clear()


def accumulate_banked(warped, shape: tuple[int, int], forwarding: bool = True) -> ImageSet:
    acc = BankedAccumulator(shape, forwarding=forwarding)
    acc.accumulate(warped)
    return acc.read_and_clear()
