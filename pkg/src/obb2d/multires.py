"""Coarse-to-fine pyramid of control polygons.

Each coarsening halves the control polygon with a 3-tap averaging filter
(1/4, 1/2, 1/4) anchored on even-indexed points, so segment i of a coarse
level always corresponds to segments (2i, 2i+1) of the next finer level.
The filter is injectable; any linear halving that keeps this dyadic
correspondence can be swapped in.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .contour import ClosedContour, SegmentId, _as_points

__all__ = [
    "ContourPyramid",
    "coarsen_once",
    "build_pyramid",
    "children_of",
    "leaf_descendants",
]


def coarsen_once(points) -> np.ndarray:
    """Halve a closed control polygon: out[i] = (p[2i-1] + 2 p[2i] + p[2i+1]) / 4."""
    pts = _as_points(points)
    if len(pts) < 8:
        raise ValueError(
            f"cannot coarsen {len(pts)} points: output would have fewer than 4"
        )
    if len(pts) % 2 != 0:
        raise ValueError(f"point count must be even, got {len(pts)}")
    prev = np.roll(pts, 1, axis=0)[::2]
    nxt = np.roll(pts, -1, axis=0)[::2]
    return (prev + 2.0 * pts[::2] + nxt) / 4.0


@dataclass(frozen=True)
class ContourPyramid:
    """Control polygons at resolutions min_level..top_level, keyed by level.

    levels[j] has 2**j points; levels[top_level] is the source polygon.
    """

    levels: dict[int, np.ndarray]
    min_level: int
    base: ClosedContour

    @property
    def top_level(self) -> int:
        return self.base.top_level

    def points_at(self, level: int) -> np.ndarray:
        if level not in self.levels:
            raise ValueError(
                f"level {level} not in pyramid range [{self.min_level}, {self.top_level}]"
            )
        return self.levels[level]

    def to_polygon_list(self) -> list[list[list[float]]]:
        """One polygon per level, coarsest first; used by the harness dump."""
        return [self.levels[j].tolist() for j in sorted(self.levels)]


def build_pyramid(
    contour: ClosedContour,
    min_level: int = 2,
    coarsen: Callable[[np.ndarray], np.ndarray] = coarsen_once,
) -> ContourPyramid:
    """Repeatedly coarsen the contour's control polygon down to min_level."""
    if min_level < 2:
        raise ValueError(f"min_level must be >= 2, got {min_level}")
    n = contour.top_level
    if n < min_level:
        raise ValueError(f"contour level {n} is below min_level {min_level}")
    levels = {n: np.asarray(contour.control_points)}
    for j in range(n, min_level, -1):
        levels[j - 1] = coarsen(levels[j])
    return ContourPyramid(levels=levels, min_level=min_level, base=contour)


def children_of(segment: SegmentId, top_level: int | None = None) -> tuple[SegmentId, SegmentId]:
    """The two segments of the next finer level that a segment splits into."""
    if top_level is not None and segment.level >= top_level:
        raise ValueError(
            f"segment at level {segment.level} has no children below top level {top_level}"
        )
    j, i = segment.level, segment.index
    return SegmentId(j + 1, 2 * i), SegmentId(j + 1, 2 * i + 1)


def leaf_descendants(segment: SegmentId, top_level: int) -> tuple[int, int]:
    """Half-open index range of the finest-level segments under `segment`."""
    if segment.level > top_level:
        raise ValueError(f"segment level {segment.level} exceeds top level {top_level}")
    width = 1 << (top_level - segment.level)
    return segment.index * width, (segment.index + 1) * width
