"""Closed periodic cubic B-spline contours with per-segment roughness.

A contour is a closed curve built from m control points (m a power of two),
where segment i is driven by control points (i-1, i, i+1, i+2) taken
cyclically.  Each segment carries a Gaussian roughness level sigma[i]; the
tolerance band used to inflate bounding boxes is q_factor * sigma[i].
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

__all__ = [
    "ClosedContour",
    "SegmentId",
    "evaluate_segment",
    "evaluate_contour",
    "sample_segment_uniform",
    "sample_segment_arclength",
    "segment_arc_length",
    "segment_tolerance",
    "synthesize_rough_polyline",
    "load_contour",
    "save_contour",
    "contour_from_dict",
    "contour_to_dict",
]


def _is_power_of_two(k: int) -> bool:
    return k >= 1 and (k & (k - 1)) == 0


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"expected an (m, 2) array of points, got shape {pts.shape}")
    return pts


@dataclass(frozen=True)
class ClosedContour:
    """Closed object boundary: control polygon, roughness, tolerance factor.

    control_points: (m, 2) array with m = 2**n, n >= 2.
    sigma: (m,) array of non-negative roughness standard deviations, one per
        curve segment.
    q_factor: positive multiplier; the tolerance band of segment i is
        q_factor * sigma[i].
    """

    control_points: np.ndarray
    sigma: np.ndarray
    q_factor: float = 3.0

    def __post_init__(self):
        pts = _as_points(self.control_points)
        m = len(pts)
        if m < 4 or not _is_power_of_two(m):
            raise ValueError(f"control point count must be a power of two >= 4, got {m}")
        sig = np.asarray(self.sigma, dtype=float)
        if sig.shape != (m,):
            raise ValueError(f"sigma must have one entry per segment ({m}), got shape {sig.shape}")
        if np.any(sig < 0.0):
            raise ValueError("sigma entries must be non-negative")
        if not self.q_factor > 0.0:
            raise ValueError(f"q_factor must be positive, got {self.q_factor}")
        pts = pts.copy()
        sig = sig.copy()
        pts.setflags(write=False)
        sig.setflags(write=False)
        object.__setattr__(self, "control_points", pts)
        object.__setattr__(self, "sigma", sig)
        object.__setattr__(self, "q_factor", float(self.q_factor))

    @property
    def segment_count(self) -> int:
        return len(self.control_points)

    @property
    def top_level(self) -> int:
        """Resolution index n with 2**n segments."""
        return self.segment_count.bit_length() - 1


@dataclass(frozen=True)
class SegmentId:
    """A segment at a given resolution level: index i among the 2**level segments."""

    level: int
    index: int

    def __post_init__(self):
        if self.level < 0:
            raise ValueError(f"level must be non-negative, got {self.level}")
        if not 0 <= self.index < 2**self.level:
            raise ValueError(f"segment index {self.index} out of range for level {self.level}")


# Uniform cubic B-spline basis, weights for control points (i-1, i, i+1, i+2).
def _basis_matrix(ts: np.ndarray) -> np.ndarray:
    ts = np.asarray(ts, dtype=float)
    s = 1.0 - ts
    t2 = ts * ts
    t3 = t2 * ts
    return np.stack(
        [s * s * s, 3.0 * t3 - 6.0 * t2 + 4.0, -3.0 * t3 + 3.0 * t2 + 3.0 * ts + 1.0, t3],
        axis=-1,
    ) / 6.0


def _basis_derivative_matrix(ts: np.ndarray) -> np.ndarray:
    ts = np.asarray(ts, dtype=float)
    s = 1.0 - ts
    t2 = ts * ts
    return np.stack(
        [-3.0 * s * s, 9.0 * t2 - 12.0 * ts, -9.0 * t2 + 6.0 * ts + 3.0, 3.0 * t2],
        axis=-1,
    ) / 6.0


@lru_cache(maxsize=64)
def _uniform_basis(count: int) -> np.ndarray:
    """Basis matrix for the uniform grid t = k/(count-1); grids recur constantly."""
    basis = _basis_matrix(np.linspace(0.0, 1.0, count))
    basis.setflags(write=False)
    return basis


def _segment_control(points: np.ndarray, segment: int) -> np.ndarray:
    m = len(points)
    idx = np.arange(segment - 1, segment + 3) % m
    return points[idx]


def bspline_segment_points(points: np.ndarray, segment: int, ts) -> np.ndarray:
    """Evaluate one segment of the closed cubic B-spline over `points` at local
    parameters `ts`; returns an (len(ts), 2) array."""
    return _basis_matrix(ts) @ _segment_control(points, segment)


def bspline_segment_tangents(points: np.ndarray, segment: int, ts) -> np.ndarray:
    """First derivative of the segment with respect to the local parameter."""
    return _basis_derivative_matrix(ts) @ _segment_control(points, segment)


def _check_segment(contour: ClosedContour, segment: int) -> int:
    segment = int(segment)
    if not 0 <= segment < contour.segment_count:
        raise ValueError(
            f"segment index {segment} out of range [0, {contour.segment_count})"
        )
    return segment


def evaluate_segment(contour: ClosedContour, segment: int, t: float) -> np.ndarray:
    """Smooth (noise-free) point of segment `segment` at local parameter t in [0, 1]."""
    segment = _check_segment(contour, segment)
    return bspline_segment_points(contour.control_points, segment, np.array([t]))[0]


def evaluate_contour(contour: ClosedContour, u: float) -> np.ndarray:
    """Point at global parameter u; the curve is periodic with period m."""
    m = contour.segment_count
    u = float(u) % m
    segment = int(u)
    return evaluate_segment(contour, segment % m, u - segment)


def sample_segment_uniform(contour: ClosedContour, segment: int, r: int = 5) -> np.ndarray:
    """r points of the smooth segment at parameters k/(r-1), k = 0..r-1."""
    segment = _check_segment(contour, segment)
    if r < 2:
        raise ValueError(f"need at least 2 sample points, got {r}")
    return _uniform_basis(r) @ _segment_control(contour.control_points, segment)


def sample_segment_arclength(contour: ClosedContour, segment: int, r: int, refine: int = 256) -> np.ndarray:
    """r points approximately equally spaced in arc length along the segment.

    A dense parameter-uniform polyline supplies the cumulative-length map that
    is then inverted by linear interpolation.
    """
    segment = _check_segment(contour, segment)
    if r < 2:
        raise ValueError(f"need at least 2 sample points, got {r}")
    ts = np.linspace(0.0, 1.0, refine + 1)
    pts = bspline_segment_points(contour.control_points, segment, ts)
    cum = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(pts, axis=0), axis=1))])
    total = cum[-1]
    if total <= 0.0:
        return np.repeat(pts[:1], r, axis=0)
    targets = np.linspace(0.0, total, r)
    t_of_s = np.interp(targets, cum, ts)
    return bspline_segment_points(contour.control_points, segment, t_of_s)


_ARC_REL_TOL = 1e-9


def segment_arc_length(contour: ClosedContour, segment: int) -> float:
    """Arc length of the smooth segment.

    Chord sums over successively doubled parameter grids until the relative
    change drops below 1e-9.
    """
    segment = _check_segment(contour, segment)
    pts = contour.control_points
    n = 8
    prev = _chord_sum(pts, segment, n)
    while n < (1 << 22):
        n *= 2
        length = _chord_sum(pts, segment, n)
        if abs(length - prev) <= _ARC_REL_TOL * max(length, 1e-30):
            return length
        prev = length
    return prev


def _chord_sum(points: np.ndarray, segment: int, n: int) -> float:
    ctrl = _segment_control(points, segment)
    # centering keeps the sum exact under translation (and exactly 0 for a
    # degenerate point-contour)
    sampled = _uniform_basis(n + 1) @ (ctrl - ctrl.mean(axis=0))
    steps = np.diff(sampled, axis=0)
    return float(np.sum(np.sqrt(steps[:, 0] ** 2 + steps[:, 1] ** 2)))


def segment_tolerance(contour: ClosedContour, segment: int) -> float:
    """Tolerance band of the segment: q_factor * sigma[segment]."""
    segment = _check_segment(contour, segment)
    return contour.q_factor * float(contour.sigma[segment])


def synthesize_rough_polyline(
    contour: ClosedContour, segment: int, r: int, seed: int
) -> np.ndarray:
    """Sampled segment with pseudo-random roughness applied along curve normals.

    Offsets are drawn from N(0, sigma[segment]**2); the draw is deterministic
    for a fixed seed.
    """
    segment = _check_segment(contour, segment)
    if r < 2:
        raise ValueError(f"need at least 2 sample points, got {r}")
    ts = np.linspace(0.0, 1.0, r)
    pts = bspline_segment_points(contour.control_points, segment, ts)
    tangents = bspline_segment_tangents(contour.control_points, segment, ts)
    speed = np.linalg.norm(tangents, axis=1)
    normals = np.zeros_like(tangents)
    ok = speed > 1e-300
    normals[ok, 0] = -tangents[ok, 1] / speed[ok]
    normals[ok, 1] = tangents[ok, 0] / speed[ok]
    rng = np.random.default_rng(seed)
    offsets = rng.normal(0.0, float(contour.sigma[segment]), size=r)
    return pts + offsets[:, None] * normals


def contour_to_dict(contour: ClosedContour) -> dict:
    return {
        "control_points": contour.control_points.tolist(),
        "sigma": contour.sigma.tolist(),
        "q_factor": contour.q_factor,
    }


def contour_from_dict(data: dict) -> ClosedContour:
    try:
        points = data["control_points"]
        sigma = data["sigma"]
    except KeyError as exc:
        raise ValueError(f"contour data missing required key: {exc}") from exc
    return ClosedContour(
        control_points=_as_points(points),
        sigma=np.asarray(sigma, dtype=float),
        q_factor=float(data.get("q_factor", 3.0)),
    )


def load_contour(path) -> ClosedContour:
    with open(Path(path), "r", encoding="utf-8") as fh:
        return contour_from_dict(json.load(fh))


def save_contour(contour: ClosedContour, path) -> None:
    with open(Path(path), "w", encoding="utf-8") as fh:
        json.dump(contour_to_dict(contour), fh, indent=2)
        fh.write("\n")
