"""Binary hierarchy of oriented boxes over a closed contour.

Leaves bound single segments; node (level j, index i) bounds segments
(2i, 2i+1) of level j+1 and, transitively, a dyadic block of leaves.  Trees
are built once in the object's local frame; rigid poses are applied at query
time.  Nodes are stored in heap order: node k has children 2k+1 and 2k+2.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .contour import ClosedContour, SegmentId
from .multires import ContourPyramid, leaf_descendants
from .obbfit import (
    DEFAULT_ADJUST_SAMPLES,
    DEFAULT_ORIENTATION_SAMPLES,
    OrientedBox,
    fit_elementary_box,
    fit_superbox,
    superbox_axes_elementary,
    superbox_axes_multires,
)

__all__ = [
    "FitMethod",
    "RigidPose",
    "BoxTree",
    "build_tree",
    "total_box_area",
    "world_box",
    "transform_box",
    "tree_to_dict",
]


class FitMethod(str, enum.Enum):
    """How internal-node axes are chosen."""

    ELEMENTARY = "elementary"
    MULTIRESOLUTION = "multires"


@dataclass(frozen=True)
class RigidPose:
    """Rigid placement: rotation (radians, wrapped to (-pi, pi]) then translation."""

    rotation: float = 0.0
    translation: np.ndarray = (0.0, 0.0)

    def __post_init__(self):
        angle = float(np.arctan2(np.sin(self.rotation), np.cos(self.rotation)))
        t = np.asarray(self.translation, dtype=float).reshape(2)
        object.__setattr__(self, "rotation", angle)
        object.__setattr__(self, "translation", t)

    @property
    def matrix(self) -> np.ndarray:
        c, s = np.cos(self.rotation), np.sin(self.rotation)
        return np.array([[c, -s], [s, c]])

    def apply_points(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=float) @ self.matrix.T + self.translation

    def rotate(self, vec: np.ndarray) -> np.ndarray:
        return self.matrix @ np.asarray(vec, dtype=float)

    def compose(self, inner: "RigidPose") -> "RigidPose":
        """Pose equivalent to applying `inner` first, then this pose."""
        return RigidPose(
            rotation=self.rotation + inner.rotation,
            translation=self.rotate(inner.translation) + self.translation,
        )

    @staticmethod
    def identity() -> "RigidPose":
        return RigidPose(0.0, (0.0, 0.0))


@dataclass
class BoxTree:
    """Complete binary tree of oriented boxes in the object's body frame.

    nodes has 2 * leaf_count - 1 entries in heap order; leaf i sits at
    position leaf_count - 1 + i and bounds contour segment i.
    """

    nodes: list[OrientedBox]
    leaf_count: int
    method: FitMethod
    _flat: dict | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if len(self.nodes) != 2 * self.leaf_count - 1:
            raise ValueError(
                f"node count {len(self.nodes)} != 2 * {self.leaf_count} - 1"
            )

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def depth(self) -> int:
        """Leaf level; the root is level 0."""
        return self.leaf_count.bit_length() - 1

    def is_leaf(self, node: int) -> bool:
        return node >= self.leaf_count - 1

    def leaf_segment(self, node: int) -> int:
        return node - (self.leaf_count - 1)

    def leaf_node(self, segment: int) -> int:
        return self.leaf_count - 1 + segment

    def node_id(self, node: int) -> SegmentId:
        """Level/index coordinates of a heap position."""
        level = (node + 1).bit_length() - 1
        return SegmentId(level, node - ((1 << level) - 1))

    def level_slice(self, level: int) -> slice:
        if not 0 <= level <= self.depth:
            raise ValueError(f"level {level} out of range [0, {self.depth}]")
        start = (1 << level) - 1
        return slice(start, start + (1 << level))

    def flat_arrays(self) -> dict:
        """Stacked per-node arrays (body frame), built once per tree."""
        if self._flat is None:
            self._flat = {
                "centers": np.array([b.center for b in self.nodes]),
                "axes1": np.array([b.axis1 for b in self.nodes]),
                "axes2": np.array([b.axis2 for b in self.nodes]),
                "extents": np.array(
                    [[b.half_extent1, b.half_extent2] for b in self.nodes]
                ),
            }
        return self._flat


def build_tree(
    contour: ClosedContour,
    pyramid: ContourPyramid | None = None,
    method: FitMethod = FitMethod.ELEMENTARY,
    r: int = DEFAULT_ORIENTATION_SAMPLES,
    adjust_samples: int = DEFAULT_ADJUST_SAMPLES,
    sampling: str = "parameter",
) -> BoxTree:
    """Fit the full hierarchy: elementary leaves, then internal levels bottom-up.

    With the multiresolution method, internal axes at levels the pyramid
    covers come from the matching coarse segment; coarser levels (and the
    whole tree under the elementary method) use length-weighted statistics of
    the covered elementary boxes.  Extents always come from projecting the
    two direct children's corners.
    """
    method = FitMethod(method)
    if method is FitMethod.MULTIRESOLUTION:
        if pyramid is None:
            raise ValueError("multiresolution fitting requires a contour pyramid")
        if not np.array_equal(pyramid.points_at(pyramid.top_level), contour.control_points):
            raise ValueError("pyramid was built over a different contour")
    m = contour.segment_count
    n = contour.top_level
    leaves = [
        fit_elementary_box(contour, i, r=r, adjust_samples=adjust_samples, sampling=sampling)
        for i in range(m)
    ]
    nodes: list[OrientedBox | None] = [None] * (2 * m - 1)
    nodes[m - 1 :] = leaves
    for j in range(n - 1, -1, -1):
        for i in range(1 << j):
            pos = (1 << j) - 1 + i
            children = (nodes[2 * pos + 1], nodes[2 * pos + 2])
            if method is FitMethod.MULTIRESOLUTION and j >= pyramid.min_level:
                axes = superbox_axes_multires(pyramid, SegmentId(j, i), r=r)
            else:
                start, stop = leaf_descendants(SegmentId(j, i), n)
                axes = superbox_axes_elementary(leaves[start:stop])
            nodes[pos] = fit_superbox(axes, children)
    return BoxTree(nodes=nodes, leaf_count=m, method=method)


def total_box_area(tree: BoxTree, level: int | None = None) -> float:
    """Summed area of all nodes, or of the nodes at one level."""
    if level is None:
        selected = tree.nodes
    else:
        selected = tree.nodes[tree.level_slice(level)]
    return float(sum(box.area for box in selected))


def transform_box(box: OrientedBox, pose: RigidPose) -> OrientedBox:
    rot = pose.matrix
    return OrientedBox(
        center=rot @ box.center + pose.translation,
        axis1=rot @ box.axis1,
        axis2=rot @ box.axis2,
        half_extent1=box.half_extent1,
        half_extent2=box.half_extent2,
        tolerance=box.tolerance,
        segment_length=box.segment_length,
        leaf_range=box.leaf_range,
    )


def world_box(tree: BoxTree, node: int, pose: RigidPose) -> OrientedBox:
    """Node box placed into the world frame."""
    if not 0 <= node < tree.node_count:
        raise ValueError(f"node index {node} out of range [0, {tree.node_count})")
    return transform_box(tree.nodes[node], pose)


def tree_to_dict(tree: BoxTree) -> dict:
    return {
        "method": tree.method.value,
        "leaf_count": tree.leaf_count,
        "nodes": [
            {
                "center": box.center.tolist(),
                "axis1": box.axis1.tolist(),
                "axis2": box.axis2.tolist(),
                "half_extents": [box.half_extent1, box.half_extent2],
                "tolerance": box.tolerance,
                "segment_length": box.segment_length,
                "leaf_range": list(box.leaf_range),
            }
            for box in tree.nodes
        ],
    }
