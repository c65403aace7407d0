import numpy as np
import pytest

from obb2d import (
    BoxTree,
    ClosedContour,
    FitMethod,
    OrientedBox,
    RigidPose,
    build_pyramid,
    build_tree,
    generate_fixture,
    total_box_area,
    transform_box,
    tree_to_dict,
    world_box,
)
from obb2d.contour import bspline_segment_points

from conftest import rigid
from oracles import points_in_box


@pytest.fixture(scope="module")
def blob64():
    return generate_fixture("blob", 64, 0.0, seed=3)


@pytest.fixture(scope="module")
def blob64_trees(blob64):
    pyramid = build_pyramid(blob64)
    return (
        build_tree(blob64, method=FitMethod.ELEMENTARY),
        build_tree(blob64, pyramid=pyramid, method=FitMethod.MULTIRESOLUTION),
    )


class TestStructure:
    def test_octagon_node_count(self, octagon):
        tree = build_tree(octagon)
        assert tree.node_count == 15
        assert tree.leaf_count == 8
        assert tree.depth == 3

    def test_levels_and_leaf_indexing(self, octagon):
        tree = build_tree(octagon)
        assert tree.level_slice(0) == slice(0, 1)
        assert tree.level_slice(3) == slice(7, 15)
        for seg in range(8):
            node = tree.leaf_node(seg)
            assert tree.is_leaf(node)
            assert tree.leaf_segment(node) == seg
            assert tree.nodes[node].leaf_range == (seg, seg + 1)

    def test_root_covers_everything(self, blob64_trees):
        for tree in blob64_trees:
            assert tree.nodes[0].leaf_range == (0, 64)
            for node in range(tree.leaf_count - 1):
                left = tree.nodes[2 * node + 1].leaf_range
                right = tree.nodes[2 * node + 2].leaf_range
                assert left[1] == right[0]
                assert tree.nodes[node].leaf_range == (left[0], right[1])

    def test_node_id_coordinates(self, octagon):
        tree = build_tree(octagon)
        ids = [tree.node_id(k) for k in range(tree.node_count)]
        assert (ids[0].level, ids[0].index) == (0, 0)
        assert (ids[7].level, ids[7].index) == (3, 0)
        assert (ids[14].level, ids[14].index) == (3, 7)

    def test_node_count_validation(self, octagon):
        tree = build_tree(octagon)
        with pytest.raises(ValueError):
            BoxTree(nodes=tree.nodes[:-1], leaf_count=8, method=tree.method)


class TestBuildMethods:
    def test_leaves_identical_between_methods(self, blob64, blob64_trees):
        elem, multi = blob64_trees
        for seg in range(64):
            a = elem.nodes[elem.leaf_node(seg)]
            b = multi.nodes[multi.leaf_node(seg)]
            assert np.array_equal(a.center, b.center)
            assert np.array_equal(a.axis1, b.axis1)
            assert a.half_extent1 == b.half_extent1
            assert a.half_extent2 == b.half_extent2

    def test_internal_axes_differ_between_methods(self, blob64_trees):
        elem, multi = blob64_trees
        diffs = sum(
            not np.allclose(elem.nodes[k].axis1, multi.nodes[k].axis1, atol=1e-9)
            for k in range(elem.leaf_count - 1)
        )
        assert diffs > 0

    def test_multires_requires_pyramid(self, octagon):
        with pytest.raises(ValueError, match="pyramid"):
            build_tree(octagon, method=FitMethod.MULTIRESOLUTION)

    def test_pyramid_contour_mismatch(self, octagon):
        other = ClosedContour(octagon.control_points * 2.0, octagon.sigma)
        pyramid = build_pyramid(other)
        with pytest.raises(ValueError, match="different contour"):
            build_tree(octagon, pyramid=pyramid, method=FitMethod.MULTIRESOLUTION)

    def test_method_accepts_strings(self, octagon):
        tree = build_tree(octagon, method="elementary")
        assert tree.method is FitMethod.ELEMENTARY

    def test_determinism(self, blob64):
        a = build_tree(blob64)
        b = build_tree(blob64)
        for na, nb in zip(a.nodes, b.nodes):
            assert np.array_equal(na.center, nb.center)
            assert np.array_equal(na.axis1, nb.axis1)
            assert na.half_extent1 == nb.half_extent1
            assert na.half_extent2 == nb.half_extent2
            assert na.segment_length == nb.segment_length


class TestContainment:
    def test_children_inside_parent_both_methods(self, blob64_trees):
        for tree in blob64_trees:
            for node in range(tree.leaf_count - 1):
                parent = tree.nodes[node]
                for child in (2 * node + 1, 2 * node + 2):
                    assert points_in_box(parent, tree.nodes[child].corners(), 1e-9)

    def test_smooth_samples_inside_leaves(self, blob64, blob64_trees):
        ts = np.linspace(0.0, 1.0, 256)
        for tree in blob64_trees:
            for seg in range(64):
                pts = bspline_segment_points(blob64.control_points, seg, ts)
                assert points_in_box(tree.nodes[tree.leaf_node(seg)], pts, 1e-9)

    def test_axes_orthonormal_everywhere(self, blob64_trees):
        for tree in blob64_trees:
            for box in tree.nodes:
                assert abs(np.linalg.norm(box.axis1) - 1.0) < 1e-12
                assert abs(np.linalg.norm(box.axis2) - 1.0) < 1e-12
                assert abs(box.axis1 @ box.axis2) < 1e-12


class TestArea:
    def test_level_sum(self, octagon):
        tree = build_tree(octagon)
        assert total_box_area(tree, 0) == pytest.approx(tree.nodes[0].area)
        leaf_area = sum(tree.nodes[k].area for k in range(7, 15))
        assert total_box_area(tree, 3) == pytest.approx(leaf_area)
        assert total_box_area(tree) == pytest.approx(
            sum(total_box_area(tree, j) for j in range(4))
        )

    def test_leaf_area_method_independent(self, blob64_trees):
        elem, multi = blob64_trees
        assert total_box_area(elem, elem.depth) == pytest.approx(
            total_box_area(multi, multi.depth), rel=1e-12
        )

    def test_bad_level(self, octagon):
        tree = build_tree(octagon)
        with pytest.raises(ValueError):
            total_box_area(tree, 4)


class TestPose:
    def test_identity_pose(self, octagon):
        tree = build_tree(octagon)
        box = world_box(tree, 0, RigidPose.identity())
        assert np.allclose(box.center, tree.nodes[0].center, atol=1e-15)
        assert np.allclose(box.axis1, tree.nodes[0].axis1, atol=1e-15)

    def test_pure_translation(self, octagon):
        tree = build_tree(octagon)
        pose = RigidPose(0.0, (5.0, -3.0))
        box = world_box(tree, 3, pose)
        assert np.allclose(box.center, tree.nodes[3].center + [5.0, -3.0], atol=1e-12)
        assert np.allclose(box.axis1, tree.nodes[3].axis1, atol=1e-15)

    def test_quarter_turn_rotates_axes(self):
        base = OrientedBox(np.zeros(2), np.array([1.0, 0.0]), np.array([0.0, 1.0]), 1.0, 0.5)
        box = transform_box(base, RigidPose(np.pi / 2, (0.0, 0.0)))
        assert np.allclose(box.axis1, [0.0, 1.0], atol=1e-12)
        assert box.half_extent1 == base.half_extent1

    def test_pose_preserves_containment(self, blob64_trees):
        pose = RigidPose(2.2, (-4.0, 11.0))
        for tree in blob64_trees:
            for node in range(tree.leaf_count - 1):
                parent = world_box(tree, node, pose)
                for child in (2 * node + 1, 2 * node + 2):
                    assert points_in_box(parent, world_box(tree, child, pose).corners(), 1e-9)

    def test_rotation_normalized(self):
        pose = RigidPose(2 * np.pi + 0.25, (0.0, 0.0))
        assert pose.rotation == pytest.approx(0.25)

    def test_compose(self):
        inner = RigidPose(0.4, (1.0, 2.0))
        outer = RigidPose(-1.1, (3.0, -2.0))
        pts = np.random.default_rng(0).normal(size=(5, 2))
        combined = outer.compose(inner)
        assert np.allclose(
            combined.apply_points(pts), outer.apply_points(inner.apply_points(pts)), atol=1e-12
        )

    def test_node_bounds(self, octagon):
        tree = build_tree(octagon)
        with pytest.raises(ValueError):
            world_box(tree, 15, RigidPose.identity())


class TestDump:
    def test_dump_schema_and_values(self, octagon, tmp_path):
        tree = build_tree(octagon)
        data = tree_to_dict(tree)
        assert data["method"] == "elementary"
        assert data["leaf_count"] == 8
        assert len(data["nodes"]) == 15
        node = data["nodes"][0]
        assert set(node) == {
            "center",
            "axis1",
            "axis2",
            "half_extents",
            "tolerance",
            "segment_length",
            "leaf_range",
        }
        assert node["leaf_range"] == [0, 8]
        # identical rebuild gives an identical dump
        assert tree_to_dict(build_tree(octagon)) == data
