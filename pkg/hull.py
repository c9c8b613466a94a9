"""
Convex minorant of grid paths and its last-segment statistics.
"""

import math
from dataclasses import dataclass

import numpy as np

from config import COLLINEAR_TOL
from sampler import GridPath


@dataclass(frozen=True)
class Minorant:
    """Vertices (time, value) of a convex minorant, both path endpoints included."""

    times: np.ndarray
    values: np.ndarray

    @property
    def slopes(self):
        return np.diff(self.values) / np.diff(self.times)

    def evaluate(self, times):
        """Piecewise-linear minorant at the given times."""
        return np.interp(times, self.times, self.values)

    def __len__(self):
        return self.times.size


def _turn(o, a, b):
    # sine of the angle from (a - o) to (b - o); > 0 for a strict left turn
    ax, ay = a[0] - o[0], a[1] - o[1]
    bx, by = b[0] - o[0], b[1] - o[1]
    return (ax * by - ay * bx) / (math.hypot(ax, ay) * math.hypot(bx, by))


def convex_minorant(p):
    """
    Lower convex hull of the points (t_i, values[i]) by the monotone chain.

    Three points whose turn has sine at most COLLINEAR_TOL count as collinear
    and the middle one is dropped, so the test does not depend on the scale of
    the path.

    Args:
        p (GridPath): Path with N >= 1

    Returns:
        Minorant: Vertices with strictly increasing slopes
    """
    times = p.times
    hull = []
    for point in zip(times, p.values):
        while len(hull) >= 2 and _turn(hull[-2], hull[-1], point) <= COLLINEAR_TOL:
            hull.pop()
        hull.append(point)
    vertices = np.asarray(hull, dtype=float)
    return Minorant(vertices[:, 0], vertices[:, 1])


def last_slope(m):
    """Slope of the final segment."""
    return float((m.values[-1] - m.values[-2]) / (m.times[-1] - m.times[-2]))


def segment_count(m):
    return len(m) - 1


def minorant_path(m, N):
    """
    Sample the minorant on a uniform grid.

    Args:
        m (Minorant): Minorant
        N (int): Number of steps

    Returns:
        GridPath: Piecewise-linear path through the vertices
    """
    duration = float(m.times[-1])
    return GridPath(duration, m.evaluate(np.linspace(0.0, duration, N + 1)))
