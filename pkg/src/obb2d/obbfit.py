"""Oriented box fitting.

Every box is fitted in three steps: choose axes from second-order statistics
(adaptation), size the box by projecting geometry onto those axes
(adjustment), and, for leaf boxes, inflate both half-extents by the segment's
roughness tolerance (increment).  Internal boxes get their axes either from
length-weighted statistics of the elementary boxes they cover or from the
matching segment of a coarser contour level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .contour import (
    ClosedContour,
    SegmentId,
    bspline_segment_points,
    sample_segment_arclength,
    sample_segment_uniform,
    segment_arc_length,
    segment_tolerance,
    _check_segment,
)
from .multires import ContourPyramid

__all__ = [
    "OrientedBox",
    "Covariance2",
    "PyramidLevelError",
    "covariance_of_points",
    "principal_axes",
    "fit_elementary_box",
    "superbox_axes_elementary",
    "superbox_axes_multires",
    "fit_superbox",
]

DEFAULT_ORIENTATION_SAMPLES = 5
DEFAULT_ADJUST_SAMPLES = 64

# Relative discriminant threshold below which a covariance matrix is treated
# as isotropic and the caller-provided fallback direction is used instead.
_DEGENERATE_REL = 1e-12


class PyramidLevelError(ValueError):
    """Requested box level is coarser than the pyramid provides; the caller
    must fall back to elementary-box adaptation."""


@dataclass(frozen=True)
class Covariance2:
    """2x2 covariance of a 2D point set, with its mean."""

    xx: float
    xy: float
    yy: float
    mean: np.ndarray


@dataclass(frozen=True)
class OrientedBox:
    """Oriented rectangle: center, orthonormal axes, half-extents.

    tolerance is the roughness band already folded into the extents (kept for
    the narrow phase); segment_length is the arc length of the bounded
    contour portion; leaf_range is the half-open range of finest-level
    segments the box covers.
    """

    center: np.ndarray
    axis1: np.ndarray
    axis2: np.ndarray
    half_extent1: float
    half_extent2: float
    tolerance: float = 0.0
    segment_length: float = 0.0
    leaf_range: tuple[int, int] = (0, 0)

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float).reshape(2)
        axis1 = np.asarray(self.axis1, dtype=float).reshape(2)
        axis2 = np.asarray(self.axis2, dtype=float).reshape(2)
        if abs(np.dot(axis1, axis1) - 1.0) > 1e-9 or abs(np.dot(axis2, axis2) - 1.0) > 1e-9:
            raise ValueError("box axes must be unit vectors")
        if abs(np.dot(axis1, axis2)) > 1e-9:
            raise ValueError("box axes must be orthogonal")
        if self.half_extent1 < 0.0 or self.half_extent2 < 0.0:
            raise ValueError("half extents must be non-negative")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "axis1", axis1)
        object.__setattr__(self, "axis2", axis2)
        object.__setattr__(self, "half_extent1", float(self.half_extent1))
        object.__setattr__(self, "half_extent2", float(self.half_extent2))

    @property
    def area(self) -> float:
        return 4.0 * self.half_extent1 * self.half_extent2

    def corners(self) -> np.ndarray:
        """The 4 corner vertices, counter-clockwise, as a (4, 2) array."""
        u = self.half_extent1 * self.axis1
        v = self.half_extent2 * self.axis2
        c = self.center
        return np.array([c + u + v, c - u + v, c - u - v, c + u - v])


def covariance_of_points(points) -> Covariance2:
    """Covariance from raw second moments: xy entry = mean(x*y) - mean(x)*mean(y)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise ValueError("need at least 2 points with shape (r, 2)")
    mean = pts.mean(axis=0)
    xx = float(np.mean(pts[:, 0] * pts[:, 0]) - mean[0] * mean[0])
    xy = float(np.mean(pts[:, 0] * pts[:, 1]) - mean[0] * mean[1])
    yy = float(np.mean(pts[:, 1] * pts[:, 1]) - mean[1] * mean[1])
    return Covariance2(xx=xx, xy=xy, yy=yy, mean=mean)


def _canonical(axis: np.ndarray) -> np.ndarray:
    # Deterministic sign: first nonzero component positive.
    if axis[0] < 0.0 or (axis[0] == 0.0 and axis[1] < 0.0):
        return -axis
    return axis


def _unit_or_none(vec: np.ndarray) -> np.ndarray | None:
    norm = float(np.hypot(vec[0], vec[1]))
    if norm <= 1e-300:
        return None
    return np.asarray(vec, dtype=float) / norm


def _axes_from_direction(direction: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    axis1 = _canonical(direction)
    axis2 = np.array([-axis1[1], axis1[0]])
    return axis1, axis2


def principal_axes(cov: Covariance2, fallback=None) -> tuple[np.ndarray, np.ndarray]:
    """Unit eigenvectors of the covariance matrix, major axis first.

    Near-isotropic or near-zero matrices carry no direction; the fallback
    direction (typically the chord of the bounded segment) is used then, and
    (1, 0) if that is degenerate too.
    """
    a, b, c = cov.xx, cov.xy, cov.yy
    trace = a + c
    disc = (a - c) * (a - c) + 4.0 * b * b  # squared eigenvalue gap
    if trace <= 0.0 or disc < _DEGENERATE_REL * trace * trace:
        direction = None if fallback is None else _unit_or_none(np.asarray(fallback, dtype=float))
        if direction is None:
            direction = np.array([1.0, 0.0])
        return _axes_from_direction(direction)
    if b == 0.0:
        direction = np.array([1.0, 0.0]) if a >= c else np.array([0.0, 1.0])
        return _axes_from_direction(direction)
    lam1 = 0.5 * (trace + np.sqrt(disc))
    direction = _unit_or_none(np.array([lam1 - c, b]))
    if direction is None:  # only reachable through pathological round-off
        direction = np.array([1.0, 0.0])
    return _axes_from_direction(direction)


def _box_from_projection(
    points: np.ndarray,
    origin: np.ndarray,
    axes: tuple[np.ndarray, np.ndarray],
    pad1: float,
    pad2: float,
    tolerance: float,
    segment_length: float,
    leaf_range: tuple[int, int],
) -> OrientedBox:
    axis1, axis2 = axes
    rel = points - origin
    s1 = rel @ axis1
    s2 = rel @ axis2
    lo1, hi1 = float(s1.min()), float(s1.max())
    lo2, hi2 = float(s2.min()), float(s2.max())
    center = origin + 0.5 * (lo1 + hi1) * axis1 + 0.5 * (lo2 + hi2) * axis2
    return OrientedBox(
        center=center,
        axis1=axis1,
        axis2=axis2,
        half_extent1=0.5 * (hi1 - lo1) + pad1,
        half_extent2=0.5 * (hi2 - lo2) + pad2,
        tolerance=tolerance,
        segment_length=segment_length,
        leaf_range=leaf_range,
    )


def _continuum_pad(
    contour: ClosedContour, segment: int, axes, step: float
) -> tuple[float, float]:
    """Per-axis bound on how far the smooth curve can bulge past its sampled
    polyline: the projected second derivative is linear in t, so its maximum
    sits at a segment endpoint, and the chord deviation is max|g''| * h^2 / 8."""
    m = len(contour.control_points)
    c = contour.control_points[np.arange(segment - 1, segment + 3) % m]
    second_start = c[0] - 2.0 * c[1] + c[2]
    second_end = c[1] - 2.0 * c[2] + c[3]
    factor = step * step / 8.0
    return (
        factor * max(abs(float(second_start @ axes[0])), abs(float(second_end @ axes[0]))),
        factor * max(abs(float(second_start @ axes[1])), abs(float(second_end @ axes[1]))),
    )


def fit_elementary_box(
    contour: ClosedContour,
    segment: int,
    r: int = DEFAULT_ORIENTATION_SAMPLES,
    adjust_samples: int = DEFAULT_ADJUST_SAMPLES,
    sampling: str = "parameter",
) -> OrientedBox:
    """Leaf box for one contour segment.

    Axes come from the covariance of r sampled points; extents from a dense
    projection of the smooth segment, widened by the certified polyline
    deviation bound so the continuous curve is covered; both half-extents are
    then inflated by the segment's roughness tolerance.
    """
    segment = _check_segment(contour, segment)
    if sampling == "parameter":
        samples = sample_segment_uniform(contour, segment, r)
    elif sampling == "arclength":
        samples = sample_segment_arclength(contour, segment, r)
    else:
        raise ValueError(f"unknown sampling mode {sampling!r}")
    cov = covariance_of_points(samples)
    chord = samples[-1] - samples[0]
    axes = principal_axes(cov, fallback=chord)
    dense = sample_segment_uniform(contour, segment, adjust_samples)
    bulge1, bulge2 = _continuum_pad(contour, segment, axes, 1.0 / (adjust_samples - 1))
    tolerance = segment_tolerance(contour, segment)
    return _box_from_projection(
        dense,
        origin=cov.mean,
        axes=axes,
        pad1=tolerance + bulge1,
        pad2=tolerance + bulge2,
        tolerance=tolerance,
        segment_length=segment_arc_length(contour, segment),
        leaf_range=(segment, segment + 1),
    )


def _weighted_centroid_stats(child_boxes) -> Covariance2:
    centroids = np.array([box.center for box in child_boxes])
    lengths = np.array([box.segment_length for box in child_boxes], dtype=float)
    total = float(lengths.sum())
    if total <= 0.0:
        raise ValueError("total segment length of the child boxes is zero")
    w = lengths / total
    mean = w @ centroids
    rel = centroids - mean
    xx = float(np.sum(w * rel[:, 0] * rel[:, 0]))
    xy = float(np.sum(w * rel[:, 0] * rel[:, 1]))
    yy = float(np.sum(w * rel[:, 1] * rel[:, 1]))
    return Covariance2(xx=xx, xy=xy, yy=yy, mean=mean)


def superbox_axes_elementary(child_boxes) -> tuple[np.ndarray, np.ndarray]:
    """Axes from the covariance of the covered elementary-box centroids,
    each weighted by its segment arc length."""
    child_boxes = list(child_boxes)
    if len(child_boxes) < 2:
        raise ValueError("need at least 2 elementary boxes")
    cov = _weighted_centroid_stats(child_boxes)
    chord = child_boxes[-1].center - child_boxes[0].center
    return principal_axes(cov, fallback=chord)


def superbox_axes_multires(
    pyramid: ContourPyramid, segment: SegmentId, r: int = DEFAULT_ORIENTATION_SAMPLES
) -> tuple[np.ndarray, np.ndarray]:
    """Axes from sampling the matching segment of the coarse contour at
    `segment.level`."""
    if segment.level < pyramid.min_level:
        raise PyramidLevelError(
            f"level {segment.level} is coarser than pyramid min level {pyramid.min_level};"
            " use elementary-box adaptation"
        )
    points = pyramid.points_at(segment.level)
    if r < 2:
        raise ValueError(f"need at least 2 sample points, got {r}")
    samples = bspline_segment_points(points, segment.index, np.linspace(0.0, 1.0, r))
    cov = covariance_of_points(samples)
    chord = samples[-1] - samples[0]
    return principal_axes(cov, fallback=chord)


def fit_superbox(axes: tuple[np.ndarray, np.ndarray], child_boxes) -> OrientedBox:
    """Internal box with the given axes, sized to cover all child corner vertices."""
    child_boxes = list(child_boxes)
    if not child_boxes:
        raise ValueError("need at least one child box")
    corners = np.vstack([box.corners() for box in child_boxes])
    lengths = np.array([box.segment_length for box in child_boxes], dtype=float)
    total = float(lengths.sum())
    if total > 0.0:
        origin = (lengths / total) @ np.array([box.center for box in child_boxes])
    else:
        origin = corners.mean(axis=0)
    return _box_from_projection(
        corners,
        origin=origin,
        axes=axes,
        pad1=0.0,
        pad2=0.0,
        tolerance=max(box.tolerance for box in child_boxes),
        segment_length=total,
        leaf_range=(
            min(box.leaf_range[0] for box in child_boxes),
            max(box.leaf_range[1] for box in child_boxes),
        ),
    )
