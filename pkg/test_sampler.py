import numpy as np
import pytest
from scipy import stats

from sampler import (
    GridPath,
    RngStream,
    as_generator,
    concat,
    run_replicas,
    sample_bessel3,
    sample_bessel3_bridge,
    sample_bessel3_bridge_at,
    sample_bm,
    sample_bridge,
    sample_excursion,
    sample_fp_bridge,
    sample_meander,
)
from stat_tests import ks_one_sample, moment_ztest
from utils import InvalidArgumentError


def _endpoint(stream):
    return sample_bm(16, 1.0, stream).values[-1]


def _meander_end(stream):
    return sample_meander(32, 1.0, stream).values[-1]


def test_grid_path_basics():
    p = GridPath(2.0, [0.0, 1.0, -1.0, 0.5, 0.0])
    assert p.n == 4
    assert p.dt == 0.5
    assert p.index_of(0.76) == 2
    assert p.at(1.5) == 0.5
    with pytest.raises(ValueError):
        p.values[0] = 1.0


def test_grid_path_rejects_bad_input():
    with pytest.raises(InvalidArgumentError):
        GridPath(1.0, [0.0])
    with pytest.raises(InvalidArgumentError):
        GridPath(1.0, [0.0, np.nan])
    with pytest.raises(InvalidArgumentError):
        GridPath(0.0, [0.0, 1.0])


def test_streams_are_reproducible():
    a = RngStream(7, 3).generator().standard_normal(5)
    b = RngStream(7, 3).generator().standard_normal(5)
    c = RngStream(7, 4).generator().standard_normal(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_as_generator_rejects_unknown_sources():
    with pytest.raises(InvalidArgumentError):
        as_generator('seed')


def test_bridge_endpoints_pinned(stream):
    p = sample_bridge(64, 2.0, -1.5, stream)
    assert p.values[0] == 0.0
    assert p.values[-1] == -1.5
    assert p.duration == 2.0


def test_bessel_bridge_endpoints_and_sign(gen):
    p = sample_bessel3_bridge(128, 1.0, 0.5, 1.5, gen)
    assert p.values[0] == 0.5
    assert p.values[-1] == 1.5
    assert np.all(p.values >= 0)
    with pytest.raises(InvalidArgumentError):
        sample_bessel3_bridge_at([0.0, 0.5, 0.5], 0.0, 0.0, gen)


def test_excursion_and_first_passage_bridge(gen):
    excursion = sample_excursion(64, 0.5, gen)
    assert excursion.values[0] == excursion.values[-1] == 0.0
    assert np.all(excursion.values[1:-1] > 0)
    bridge = sample_fp_bridge(64, 1.0, -1.0, gen)
    assert bridge.values[0] == 0.0
    assert bridge.values[-1] == -1.0
    assert np.all(bridge.values[:-1] >= -1.0)


def test_bessel_process_is_nonnegative(gen):
    p = sample_bessel3(64, 0.5, gen)
    assert p.values[0] == 0.0
    assert np.all(p.values >= 0)


def test_concat_offsets_second_piece():
    p1 = GridPath(0.5, [0.0, 1.0, 2.0])
    p2 = GridPath(0.5, [2.0, 1.0, 0.0])
    joined = concat(p1, p2)
    assert joined.duration == 1.0
    assert joined.n == 4
    assert np.allclose(joined.values, [0.0, 1.0, 2.0, 1.0, 0.0])


def test_concat_rejects_junction_mismatch():
    with pytest.raises(InvalidArgumentError):
        concat(GridPath(1.0, [0.0, 1.0]), GridPath(1.0, [0.5, 0.0]))


def test_run_replicas_orders_by_index():
    results = run_replicas(_endpoint, 5, 11, start=3)
    expected = [_endpoint(RngStream(11, i)) for i in range(3, 8)]
    assert results == expected


def test_bm_endpoint_variance():
    ends = np.array(run_replicas(_endpoint, 4000, 5))
    assert moment_ztest(ends, 1.0, 'second').passed
    assert moment_ztest(ends, 0.0, 'mean').passed


def test_meander_endpoint_is_rayleigh():
    ends = np.array(run_replicas(_meander_end, 2000, 9))
    assert ks_one_sample(ends, stats.rayleigh.cdf).passed
