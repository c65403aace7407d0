"""Interference detection: box overlap tests, dual-tree traversal, narrow phase.

The broad phase walks two box trees from the roots, pruning whenever a
separating line (parallel to a side of one of the boxes) is found, and
collects overlapping leaf pairs as candidates.  The narrow phase then
measures the distance between the candidate segments' dense polylines and
declares contact when the gap is within the summed roughness tolerances.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .boxtree import BoxTree, RigidPose
from .contour import ClosedContour, sample_segment_uniform, segment_tolerance
from .obbfit import OrientedBox

__all__ = [
    "EPS_SEP",
    "EPS_CONTACT",
    "NARROW_SAMPLES",
    "Status",
    "Contact",
    "InterferenceReport",
    "boxes_overlap",
    "traverse",
    "narrow_phase",
    "detect_scene",
    "polyline_min_distance",
]

# Projection gap beyond which an axis counts as separating (touching overlaps).
EPS_SEP = 1e-12
# Slack added to the summed tolerances in the contact rule.
EPS_CONTACT = 1e-9
# Polyline density used to verify candidate segment pairs.
NARROW_SAMPLES = 64


class Status(str, enum.Enum):
    SEPARATE = "separate"
    CANDIDATE = "candidate"
    INTERFERING = "interfering"


@dataclass(frozen=True)
class Contact:
    """Confirmed contact between two segments, with the minimizing point pair."""

    segment_a: int
    segment_b: int
    point_a: np.ndarray
    point_b: np.ndarray
    distance: float

    def to_dict(self) -> dict:
        return {
            "segments": [self.segment_a, self.segment_b],
            "point_a": np.asarray(self.point_a, dtype=float).tolist(),
            "point_b": np.asarray(self.point_b, dtype=float).tolist(),
            "distance": self.distance,
        }


@dataclass
class InterferenceReport:
    """Outcome of one object-pair query."""

    boxes_tested: int = 0
    candidate_pairs: list[tuple[int, int]] = field(default_factory=list)
    contacts: list[Contact] = field(default_factory=list)
    status: Status = Status.SEPARATE

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "boxes_tested": self.boxes_tested,
            "candidate_pairs": [list(pair) for pair in self.candidate_pairs],
            "contacts": [contact.to_dict() for contact in self.contacts],
        }


def _separated(a1, a2, e1a, e2a, b1, b2, e1b, e2b, dx, dy, eps):
    # Candidate separating lines are parallel to a side of one of the boxes,
    # so only the 4 axis directions need testing.
    for ux, uy in (a1, a2, b1, b2):
        ra = e1a * abs(ux * a1[0] + uy * a1[1]) + e2a * abs(ux * a2[0] + uy * a2[1])
        rb = e1b * abs(ux * b1[0] + uy * b1[1]) + e2b * abs(ux * b2[0] + uy * b2[1])
        if abs(ux * dx + uy * dy) - (ra + rb) > eps:
            return True
    return False


def boxes_overlap(a: OrientedBox, b: OrientedBox, eps_sep: float = EPS_SEP) -> bool:
    """Separating-axis overlap test for two world-frame boxes.

    Touching boxes count as overlapping; an axis separates only when the
    projection gap exceeds eps_sep.
    """
    return not _separated(
        (float(a.axis1[0]), float(a.axis1[1])),
        (float(a.axis2[0]), float(a.axis2[1])),
        a.half_extent1,
        a.half_extent2,
        (float(b.axis1[0]), float(b.axis1[1])),
        (float(b.axis2[0]), float(b.axis2[1])),
        b.half_extent1,
        b.half_extent2,
        float(b.center[0]) - float(a.center[0]),
        float(b.center[1]) - float(a.center[1]),
        eps_sep,
    )


class _WorldNodes:
    """All nodes of a tree placed into the world frame, as flat float lists."""

    __slots__ = ("cx", "cy", "a1x", "a1y", "a2x", "a2y", "e1", "e2", "area")

    def __init__(self, tree: BoxTree, pose: RigidPose):
        flat = tree.flat_arrays()
        rot_t = pose.matrix.T
        centers = flat["centers"] @ rot_t + pose.translation
        axes1 = flat["axes1"] @ rot_t
        axes2 = flat["axes2"] @ rot_t
        extents = flat["extents"]
        self.cx = centers[:, 0].tolist()
        self.cy = centers[:, 1].tolist()
        self.a1x = axes1[:, 0].tolist()
        self.a1y = axes1[:, 1].tolist()
        self.a2x = axes2[:, 0].tolist()
        self.a2y = axes2[:, 1].tolist()
        self.e1 = extents[:, 0].tolist()
        self.e2 = extents[:, 1].tolist()
        self.area = (4.0 * extents[:, 0] * extents[:, 1]).tolist()


def traverse(
    tree_a: BoxTree,
    pose_a: RigidPose,
    tree_b: BoxTree,
    pose_b: RigidPose,
    eps_sep: float = EPS_SEP,
) -> InterferenceReport:
    """Dual-tree descent from the roots; prunes on disjoint boxes.

    At mixed levels the node with the larger area is split.  Children are
    visited in index order, so the candidate list is deterministic.
    boxes_tested counts every box-pair overlap test performed.
    """
    return _traverse_world(
        _WorldNodes(tree_a, pose_a),
        tree_a.leaf_count - 1,
        _WorldNodes(tree_b, pose_b),
        tree_b.leaf_count - 1,
        eps_sep,
    )


def _traverse_world(
    wa: _WorldNodes,
    leaf_base_a: int,
    wb: _WorldNodes,
    leaf_base_b: int,
    eps_sep: float,
) -> InterferenceReport:
    tested = 0
    candidates: list[tuple[int, int]] = []

    def recurse(ka: int, kb: int) -> None:
        nonlocal tested
        tested += 1
        if _separated(
            (wa.a1x[ka], wa.a1y[ka]),
            (wa.a2x[ka], wa.a2y[ka]),
            wa.e1[ka],
            wa.e2[ka],
            (wb.a1x[kb], wb.a1y[kb]),
            (wb.a2x[kb], wb.a2y[kb]),
            wb.e1[kb],
            wb.e2[kb],
            wb.cx[kb] - wa.cx[ka],
            wb.cy[kb] - wa.cy[ka],
            eps_sep,
        ):
            return
        leaf_a = ka >= leaf_base_a
        leaf_b = kb >= leaf_base_b
        if leaf_a and leaf_b:
            candidates.append((ka - leaf_base_a, kb - leaf_base_b))
            return
        if leaf_b or (not leaf_a and wa.area[ka] >= wb.area[kb]):
            recurse(2 * ka + 1, kb)
            recurse(2 * ka + 2, kb)
        else:
            recurse(ka, 2 * kb + 1)
            recurse(ka, 2 * kb + 2)

    recurse(0, 0)
    status = Status.CANDIDATE if candidates else Status.SEPARATE
    return InterferenceReport(
        boxes_tested=tested, candidate_pairs=candidates, contacts=[], status=status
    )


_TINY = 1e-30


def _segment_pairs_closest(p1, p2, q1, q2):
    """Closest points for each segment pair (p1[k], p2[k]) vs (q1[k], q2[k]).

    Clamped segment-segment solve; degenerate (zero-length) segments reduce
    to point projections.  Returns (gap2, points_a, points_b).
    """
    d1 = p2 - p1
    d2 = q2 - q1
    r = p1 - q1
    a = np.sum(d1 * d1, axis=-1)
    e = np.sum(d2 * d2, axis=-1)
    b = np.sum(d1 * d2, axis=-1)
    c = np.sum(d1 * r, axis=-1)
    f = np.sum(d2 * r, axis=-1)

    a_ok = a > _TINY
    e_ok = e > _TINY
    a_safe = np.where(a_ok, a, 1.0)
    e_safe = np.where(e_ok, e, 1.0)
    denom = a * e - b * b
    parallel = denom <= 1e-14 * a_safe * e_safe
    s = np.where(parallel, 0.0, np.clip((b * f - c * e) / np.where(parallel, 1.0, denom), 0.0, 1.0))
    t_raw = (b * s + f) / e_safe
    s = np.where(t_raw < 0.0, np.clip(-c / a_safe, 0.0, 1.0), s)
    s = np.where(t_raw > 1.0, np.clip((b - c) / a_safe, 0.0, 1.0), s)
    t = np.clip(t_raw, 0.0, 1.0)
    # Degenerate segments: project the surviving point instead.
    s = np.where(a_ok, s, 0.0)
    t = np.where(e_ok, t, 0.0)
    t = np.where(e_ok & ~a_ok, np.clip(f / e_safe, 0.0, 1.0), t)
    s = np.where(a_ok & ~e_ok, np.clip(-c / a_safe, 0.0, 1.0), s)

    pts_a = p1 + s[..., None] * d1
    pts_b = q1 + t[..., None] * d2
    gap2 = np.sum((pts_a - pts_b) ** 2, axis=-1)
    return gap2, pts_a, pts_b


def polyline_min_distance(pa: np.ndarray, pb: np.ndarray):
    """Minimum distance between two polylines over all chord pairs.

    Returns (distance, point_on_a, point_on_b).  The vertex-distance matrix
    brackets each chord pair's distance (within the two chord lengths), so the
    exact clamped solve only runs on pairs that can still hold the minimum.
    """
    diff = pa[:, None, :] - pb[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    vert = np.sqrt(
        np.minimum(
            np.minimum(d2[:-1, :-1], d2[1:, :-1]),
            np.minimum(d2[:-1, 1:], d2[1:, 1:]),
        )
    )
    len_a = np.linalg.norm(pa[1:] - pa[:-1], axis=1)
    len_b = np.linalg.norm(pb[1:] - pb[:-1], axis=1)
    # chord-pair distance lies in [vert - slack, vert]
    slack = len_a[:, None] + len_b[None, :]
    ia, ib = np.nonzero(vert <= vert.min() + slack)
    gap2, pts_a, pts_b = _segment_pairs_closest(
        pa[ia], pa[ia + 1], pb[ib], pb[ib + 1]
    )
    k = int(np.argmin(gap2))
    return float(np.sqrt(gap2[k])), pts_a[k].copy(), pts_b[k].copy()


def narrow_phase(
    contour_a: ClosedContour,
    seg_a: int,
    pose_a: RigidPose,
    contour_b: ClosedContour,
    seg_b: int,
    pose_b: RigidPose,
    samples: int = NARROW_SAMPLES,
    eps_contact: float = EPS_CONTACT,
) -> Contact | None:
    """Verify one candidate segment pair numerically.

    Contact is declared when the polyline distance is at most the sum of the
    two segments' roughness tolerances (plus eps_contact slack).
    """
    pts_a = pose_a.apply_points(sample_segment_uniform(contour_a, seg_a, samples))
    pts_b = pose_b.apply_points(sample_segment_uniform(contour_b, seg_b, samples))
    distance, point_a, point_b = polyline_min_distance(pts_a, pts_b)
    threshold = (
        segment_tolerance(contour_a, seg_a)
        + segment_tolerance(contour_b, seg_b)
        + eps_contact
    )
    if distance <= threshold:
        return Contact(seg_a, seg_b, point_a, point_b, distance)
    return None


def detect_scene(
    objects,
    eps_sep: float = EPS_SEP,
    eps_contact: float = EPS_CONTACT,
    narrow_samples: int = NARROW_SAMPLES,
) -> list[InterferenceReport]:
    """Broad + narrow phase for every unordered object pair.

    objects: list of (BoxTree, ClosedContour, RigidPose) triples.  Returns one
    report per pair, ordered (0,1), (0,2), ..., (1,2), ...
    """
    objects = list(objects)
    if len(objects) < 2:
        raise ValueError("need at least 2 objects")
    caches: list[dict[int, np.ndarray]] = [{} for _ in objects]

    def posed_polyline(k: int, seg: int) -> np.ndarray:
        cache = caches[k]
        if seg not in cache:
            _, contour, pose = objects[k]
            cache[seg] = pose.apply_points(
                sample_segment_uniform(contour, seg, narrow_samples)
            )
        return cache[seg]

    world = [_WorldNodes(tree, pose) for tree, _, pose in objects]
    reports = []
    for ia in range(len(objects)):
        tree_a, contour_a, pose_a = objects[ia]
        for ib in range(ia + 1, len(objects)):
            tree_b, contour_b, pose_b = objects[ib]
            report = _traverse_world(
                world[ia],
                tree_a.leaf_count - 1,
                world[ib],
                tree_b.leaf_count - 1,
                eps_sep,
            )
            for sa, sb in report.candidate_pairs:
                distance, point_a, point_b = polyline_min_distance(
                    posed_polyline(ia, sa), posed_polyline(ib, sb)
                )
                threshold = (
                    segment_tolerance(contour_a, sa)
                    + segment_tolerance(contour_b, sb)
                    + eps_contact
                )
                if distance <= threshold:
                    report.contacts.append(Contact(sa, sb, point_a, point_b, distance))
            if report.contacts:
                report.status = Status.INTERFERING
            reports.append(report)
    return reports
