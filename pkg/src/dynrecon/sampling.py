"""Golden-angle line masks and fixed navigator lines on a Cartesian grid.

Sampling lines are straight lines through the centered-DC index, rasterized
by stepping the major axis one index at a time and rounding the minor axis.
Golden-angle lines advance by 180 / golden-ratio ~ 111.246 degrees per global
line index, so consecutive frames receive disjoint index ranges and distinct
masks.
Navigator lines are fixed horizontal/vertical lines near the center, identical
across frames; they are consumed only by the similarity graph, never by the
reconstruction k-space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

GOLDEN_ANGLE_DEG = 180.0 * (math.sqrt(5.0) - 1.0) / 2.0  # ~111.2461


@dataclass(frozen=True)
class SamplingPattern:
    """Per-frame binary k-space masks: union of rasterized center lines + DC."""

    masks: np.ndarray  # (nframes, height, width) uint8
    lines_per_frame: int

    def __post_init__(self):
        m = np.asarray(self.masks)
        if m.ndim != 3:
            raise ValueError(f"masks must be (frames, height, width), got {m.shape}")
        if not np.isin(m, (0, 1)).all():
            raise ValueError("mask entries must be 0 or 1")
        if (m.sum(axis=(1, 2)) < 1).any():
            raise ValueError("every frame needs at least one sampled location")

    @property
    def nframes(self) -> int:
        return self.masks.shape[0]

    @property
    def shape(self):
        return self.masks.shape


def _round_half_up(v: float) -> int:
    # avoids banker's rounding so masks are implementation-stable
    return int(math.floor(v + 0.5))


def line_mask(height: int, width: int, angle_deg: float) -> np.ndarray:
    """Rasterize one line through the centered-DC index (height//2, width//2)."""
    mask = np.zeros((height, width), dtype=np.uint8)
    cy, cx = height // 2, width // 2
    theta = math.radians(angle_deg % 180.0)
    c, s = math.cos(theta), math.sin(theta)
    if abs(c) >= abs(s):
        slope = s / c
        for col in range(width):
            row = _round_half_up(cy + (col - cx) * slope)
            if 0 <= row < height:
                mask[row, col] = 1
    else:
        slope = c / s
        for row in range(height):
            col = _round_half_up(cx + (row - cy) * slope)
            if 0 <= col < width:
                mask[row, col] = 1
    mask[cy, cx] = 1
    return mask


def golden_angle_pattern(
    nframes: int,
    height: int,
    width: int,
    lines_per_frame: int,
    start_index: int = 0,
) -> SamplingPattern:
    """Per-frame masks from consecutive golden-angle line indices.

    Line k of frame f has global index g = start_index + f * lines_per_frame + k
    and angle g * GOLDEN_ANGLE_DEG (mod 180).
    """
    if lines_per_frame < 1:
        raise ValueError("lines_per_frame must be >= 1")
    if lines_per_frame > max(height, width):
        raise ValueError(
            f"lines_per_frame={lines_per_frame} exceeds the {max(height, width)} "
            "distinct rasterizable lines for this grid"
        )
    masks = np.zeros((nframes, height, width), dtype=np.uint8)
    for f in range(nframes):
        for k in range(lines_per_frame):
            g = start_index + f * lines_per_frame + k
            masks[f] |= line_mask(height, width, g * GOLDEN_ANGLE_DEG)
    return SamplingPattern(masks=masks, lines_per_frame=lines_per_frame)


def navigator_lines(height: int, width: int, nlines: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Fixed navigator lines: alternating horizontal/vertical lines near center.

    Returns one (rows, cols) index pair per line, in a deterministic
    line-major, index-minor order. Identical for every frame by construction.
    """
    if nlines < 1:
        raise ValueError("need at least one navigator line")
    if nlines > height + width:
        raise ValueError("more navigator lines than distinct rows+columns")
    cy, cx = height // 2, width // 2
    lines = []
    for k in range(nlines):
        j = k // 2
        off = ((j + 1) // 2) * (1 if j % 2 else -1) if j else 0
        if k % 2 == 0:  # horizontal: one full row
            row = cy + off
            lines.append((np.full(width, row), np.arange(width)))
        else:  # vertical: one full column
            col = cx + off
            lines.append((np.arange(height), np.full(height, col)))
    return lines


def navigator_mask(height: int, width: int, nlines: int) -> np.ndarray:
    """Union mask of the fixed navigator lines (for isolation checks)."""
    mask = np.zeros((height, width), dtype=np.uint8)
    for rows, cols in navigator_lines(height, width, nlines):
        mask[rows, cols] = 1
    return mask
