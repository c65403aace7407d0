import numpy as np
import pytest

from obb2d import ClosedContour


@pytest.fixture
def square():
    return ClosedContour(
        control_points=np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]),
        sigma=np.zeros(4),
    )


@pytest.fixture
def octagon():
    theta = 2.0 * np.pi * np.arange(8) / 8
    return ClosedContour(
        control_points=np.stack([np.cos(theta), np.sin(theta)], axis=1),
        sigma=np.zeros(8),
    )


def rounded_rect_points():
    """16 points around a 5x3 rectangle; the long runs are equally spaced and
    collinear, so the segments they drive are exactly straight."""
    bottom = [(float(x), 0.0) for x in range(6)]
    right = [(5.0, 1.0), (5.0, 2.0)]
    top = [(float(x), 3.0) for x in range(5, -1, -1)]
    left = [(0.0, 2.0), (0.0, 1.0)]
    return np.array(bottom + right + top + left)


@pytest.fixture
def rounded_rect():
    return ClosedContour(control_points=rounded_rect_points(), sigma=np.zeros(16))


@pytest.fixture
def degenerate():
    return ClosedContour(control_points=np.ones((4, 2)), sigma=np.zeros(4))


def rigid(points, angle, shift):
    c, s = np.cos(angle), np.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    return np.asarray(points, dtype=float) @ rot.T + np.asarray(shift, dtype=float)
