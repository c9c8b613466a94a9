import numpy as np
import pytest
from hypothesis import given
import hypothesis.strategies as st

from lattice import Walk, vervaat_walk
from sampler import GridPath, sample_bm
from transform import (
    first_hit,
    last_exit_index,
    local_time_estimate,
    occupation_quantile,
    path_to_walk,
    quantile_transform_bm,
    shift,
    vervaat,
    walk_to_path,
)
from utils import InvalidArgumentError

walks = st.lists(st.sampled_from([-1, 1]), min_size=1, max_size=40).map(lambda steps: Walk(tuple(steps)))


def test_vervaat_example():
    result = vervaat(GridPath(4.0, [0.0, 1.0, -1.0, 0.5, -0.5]))
    assert result.argmin_index == 2
    assert result.split_time == 2.0
    assert np.allclose(result.path.values, [0.0, 1.5, 0.5, 1.5, -0.5])


def test_vervaat_needs_zero_start():
    with pytest.raises(InvalidArgumentError):
        vervaat(GridPath(1.0, [0.1, 0.0]))


@given(walks)
def test_vervaat_agrees_with_lattice(w):
    result = vervaat(walk_to_path(w))
    v, k = vervaat_walk(w)
    assert path_to_walk(result.path) == v
    assert result.split_time == k


def test_vervaat_of_bm(stream):
    p = sample_bm(256, 1.0, stream)
    v = vervaat(p).path
    assert v.values[0] == 0.0
    assert v.values[-1] == p.values[-1]
    assert v.values.min() >= min(0.0, p.values[-1])


def test_shift_preserves_endpoint(stream):
    p = sample_bm(64, 1.0, stream)
    shifted = shift(p, 0.3)
    assert shifted.values[0] == 0.0
    assert np.isclose(shifted.values[-1], p.values[-1])
    assert shift(p, 0.0) == p
    with pytest.raises(InvalidArgumentError):
        shift(p, 1.5)


def test_first_hit_and_last_exit():
    p = GridPath(1.0, [0.0, 0.5, -0.2, 0.3, -1.0])
    assert first_hit(p, 0.0) == 2
    assert first_hit(p, 0.0, from_index=2) == 4
    assert first_hit(p, -2.0) is None
    assert last_exit_index(p, 0.0) == 2
    assert last_exit_index(p, -5.0) is None


def test_occupation_quantile():
    p = GridPath(3.0, [0.0, 1.0, 2.0, 3.0])
    assert occupation_quantile(p, 0.0) == 0.0
    assert occupation_quantile(p, 1.5) == 2.0
    with pytest.raises(InvalidArgumentError):
        occupation_quantile(p, 3.0)


def test_local_time_estimate():
    p = GridPath(3.0, [0.0, 0.0, 0.0, 1.0])
    assert local_time_estimate(p, 0.0, 0.5) == 3.0


def test_quantile_transform_shape(stream):
    p = sample_bm(1024, 1.0, stream)
    q = quantile_transform_bm(p)
    assert q.n == p.n
    assert np.all(np.isfinite(q.values))
    with pytest.raises(InvalidArgumentError):
        quantile_transform_bm(GridPath(2.0, p.values))


def test_local_time_uses_left_endpoint_cells():
    p = GridPath(2.0, [0.0, 0.0, 5.0])
    assert local_time_estimate(p, 5.0, 0.5) == 0.0
    assert local_time_estimate(p, 0.0, 0.5) == 2.0
