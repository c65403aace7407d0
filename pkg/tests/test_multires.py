import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from obb2d import (
    ClosedContour,
    SegmentId,
    build_pyramid,
    children_of,
    coarsen_once,
    leaf_descendants,
)

from conftest import rigid
from oracles import coarsen_3tap, polygon_turning


class TestCoarsenOnce:
    def test_constant_polygon_stays_constant(self):
        pts = np.tile([2.5, -1.0], (8, 1))
        assert np.allclose(coarsen_once(pts), np.tile([2.5, -1.0], (4, 1)), atol=1e-15)

    def test_octagon_becomes_scaled_square(self, octagon):
        out = coarsen_once(octagon.control_points)
        # even-indexed points shrink radially by (2 + 2 cos 45) / 4
        scale = (2.0 + 2.0 * np.cos(np.pi / 4)) / 4.0
        expected = octagon.control_points[::2] * scale
        assert np.allclose(out, expected, atol=1e-14)
        assert np.allclose(out, coarsen_3tap(octagon.control_points), atol=1e-15)

    def test_matches_hand_filter(self, octagon):
        pts = octagon.control_points * 3.0 + np.array([1.0, -2.0])
        assert np.allclose(coarsen_once(pts), coarsen_3tap(pts), atol=1e-13)

    def test_translation_equivariance(self, octagon):
        shift = np.array([5.0, -3.0])
        base = coarsen_once(octagon.control_points)
        moved = coarsen_once(octagon.control_points + shift)
        assert np.allclose(moved, base + shift, atol=1e-13)

    def test_too_small_input_raises(self):
        with pytest.raises(ValueError, match="fewer than 4"):
            coarsen_once(np.zeros((4, 2)))

    def test_odd_input_raises(self):
        with pytest.raises(ValueError):
            coarsen_once(np.zeros((10, 2))[:9])


class TestBuildPyramid:
    def test_single_level_when_already_minimal(self, square):
        pyramid = build_pyramid(square, min_level=2)
        assert set(pyramid.levels) == {2}
        assert np.array_equal(pyramid.points_at(2), square.control_points)

    def test_512_gives_full_ladder(self):
        theta = 2.0 * np.pi * np.arange(512) / 512
        contour = ClosedContour(
            10.0 * np.stack([np.cos(theta), np.sin(theta)], axis=1), np.zeros(512)
        )
        pyramid = build_pyramid(contour, min_level=2)
        sizes = [len(pyramid.points_at(j)) for j in sorted(pyramid.levels, reverse=True)]
        assert sizes == [512, 256, 128, 64, 32, 16, 8, 4]

    def test_level_matches_single_filter_step(self, octagon):
        pyramid = build_pyramid(octagon, min_level=2)
        assert np.allclose(pyramid.points_at(2), coarsen_3tap(octagon.control_points), atol=1e-15)

    def test_min_level_validation(self, square):
        with pytest.raises(ValueError):
            build_pyramid(square, min_level=3)
        with pytest.raises(ValueError):
            build_pyramid(square, min_level=1)

    def test_top_level_is_source(self, octagon):
        pyramid = build_pyramid(octagon)
        assert pyramid.top_level == 3
        assert np.array_equal(pyramid.points_at(3), octagon.control_points)

    def test_injectable_filter(self, octagon):
        def decimate(points):
            return np.asarray(points, dtype=float)[::2]

        pyramid = build_pyramid(octagon, coarsen=decimate)
        assert np.array_equal(pyramid.points_at(2), octagon.control_points[::2])

    def test_rigid_equivariance(self, octagon):
        pyramid = build_pyramid(octagon)
        moved = build_pyramid(
            ClosedContour(rigid(octagon.control_points, 1.2, (4.0, 9.0)), octagon.sigma)
        )
        for level in pyramid.levels:
            expected = rigid(pyramid.points_at(level), 1.2, (4.0, 9.0))
            assert np.allclose(moved.points_at(level), expected, atol=1e-12)

    def test_dump_polygons(self, octagon):
        pyramid = build_pyramid(octagon)
        polys = pyramid.to_polygon_list()
        assert [len(p) for p in polys] == [4, 8]


class TestSegmentCorrespondence:
    def test_children_double_the_index(self):
        for j, i in ((3, 0), (5, 5), (7, 100)):
            left, right = children_of(SegmentId(j, i))
            assert (left.level, left.index) == (j + 1, 2 * i)
            assert (right.level, right.index) == (j + 1, 2 * i + 1)

    def test_grandchildren_cover_four_indices(self):
        left, right = children_of(SegmentId(4, 6))
        grand = [c.index for node in (left, right) for c in children_of(node)]
        assert grand == [24, 25, 26, 27]

    def test_leaf_level_rejected_when_top_known(self):
        with pytest.raises(ValueError, match="no children"):
            children_of(SegmentId(5, 3), top_level=5)

    def test_leaf_descendants_blocks(self):
        assert leaf_descendants(SegmentId(2, 1), 5) == (8, 16)
        assert leaf_descendants(SegmentId(5, 9), 5) == (9, 10)
        assert leaf_descendants(SegmentId(0, 0), 9) == (0, 512)

    def test_descendants_match_recursive_expansion(self):
        top = 6
        seg = SegmentId(3, 5)
        frontier = [seg]
        while frontier[0].level < top:
            frontier = [c for node in frontier for c in children_of(node, top)]
        start, stop = leaf_descendants(seg, top)
        assert [node.index for node in frontier] == list(range(start, stop))


@given(st.integers(0, 8), st.integers(0, 255))
@settings(deadline=None, max_examples=80)
def test_property_children_partition(level, index):
    index = index % (2**level)
    left, right = children_of(SegmentId(level, index))
    top = level + 3
    ls, lstop = leaf_descendants(left, top)
    rs, rstop = leaf_descendants(right, top)
    ps, pstop = leaf_descendants(SegmentId(level, index), top)
    assert (ls, rstop) == (ps, pstop)
    assert lstop == rs


def test_smoothing_reduces_turning_on_convex_fixtures():
    for m, stretch in ((32, 1.0), (64, 2.5), (128, 0.4)):
        theta = 2.0 * np.pi * np.arange(m) / m
        pts = np.stack([stretch * np.cos(theta), np.sin(theta)], axis=1)
        contour = ClosedContour(pts, np.zeros(m))
        pyramid = build_pyramid(contour)
        levels = sorted(pyramid.levels, reverse=True)
        for fine, coarse in zip(levels, levels[1:]):
            assert polygon_turning(pyramid.points_at(coarse)) <= (
                polygon_turning(pyramid.points_at(fine)) + 1e-9
            )
