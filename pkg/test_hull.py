import numpy as np
import pytest
from hypothesis import given
import hypothesis.strategies as st

from hull import convex_minorant, last_slope, minorant_path, segment_count
from sampler import GridPath

paths = st.lists(st.integers(min_value=-5, max_value=5), min_size=1, max_size=30).map(
    lambda vs: GridPath(float(len(vs)), [0.0] + [float(v) for v in vs])
)


def test_minorant_example():
    m = convex_minorant(GridPath(3.0, [0.0, 1.0, -1.0, 0.0]))
    assert list(m.times) == [0.0, 2.0, 3.0]
    assert list(m.values) == [0.0, -1.0, 0.0]
    assert last_slope(m) == 1.0
    assert segment_count(m) == 2


def test_collinear_points_merge():
    m = convex_minorant(GridPath(3.0, [0.0, 1.0, 2.0, 3.0]))
    assert segment_count(m) == 1
    assert last_slope(m) == pytest.approx(1.0)


def test_minorant_path_samples_vertices():
    m = convex_minorant(GridPath(3.0, [0.0, 1.0, -1.0, 0.0]))
    p = minorant_path(m, 6)
    assert p.duration == 3.0
    assert np.allclose(p.values, [0.0, -0.25, -0.5, -0.75, -1.0, -0.5, 0.0])


@given(paths)
def test_minorant_lies_below_path(p):
    m = convex_minorant(p)
    assert m.times[0] == 0.0 and m.times[-1] == p.duration
    assert np.all(m.evaluate(p.times) <= p.values + 1e-9)


@given(paths)
def test_minorant_slopes_increase(p):
    slopes = convex_minorant(p).slopes
    assert np.all(np.diff(slopes) > 0)


@given(paths)
def test_minorant_is_idempotent(p):
    m = convex_minorant(p)
    again = convex_minorant(minorant_path(m, p.n))
    assert len(again) == len(m)
    assert np.allclose(again.times, m.times)
    assert np.allclose(again.values, m.values)


@pytest.mark.parametrize('scale', [1e-7, 1.0, 1e6])
def test_minorant_is_scale_invariant(scale):
    m = convex_minorant(GridPath(3.0 * scale, np.array([0.0, 1.0, -1.0, 0.0]) * scale))
    assert segment_count(m) == 2
    assert np.allclose(m.times / scale, [0.0, 2.0, 3.0])
    assert np.allclose(m.values / scale, [0.0, -1.0, 0.0])
