import numpy as np
import pytest

import decomp
from decomp import (
    above_chord,
    build_vb,
    build_vervaat_bridge_neg,
    build_vervaat_bridge_pos,
    conditioned_above_line,
    direct_vb,
    direct_vervaat_bridge,
    sample_law,
)
from laws import fztilde
from sampler import GridPath, RngStream
from stat_tests import ks_one_sample
from transform import first_hit, last_exit_index
from utils import InvalidArgumentError, ResourceLimitError


@pytest.mark.parametrize('assembly', ['grid', 'concat'])
def test_negative_build_shape(stream, assembly):
    sample = build_vervaat_bridge_neg(-1.0, 256, stream, assembly)
    values = sample.path.values
    assert sample.path.n == 256
    assert values[0] == 0.0
    assert values[-1] == -1.0
    assert 0.0 < sample.latent['Z'] < 1.0
    assert np.all(values >= -1.0 - 1e-12)


def test_negative_build_returns_after_z():
    for i in range(20):
        sample = build_vervaat_bridge_neg(-1.0, 128, RngStream(3, i))
        hit = first_hit(sample.path, 0.0)
        assert hit * sample.path.dt >= sample.latent['Z']


def test_positive_build_exits_before_zhat():
    for i in range(20):
        sample = build_vervaat_bridge_pos(1.0, 128, RngStream(4, i))
        assert sample.path.values[-1] == 1.0
        last = last_exit_index(sample.path, 1.0)
        if last is not None:
            assert last * sample.path.dt <= sample.latent['Zhat']


def test_builders_check_arguments(stream):
    with pytest.raises(InvalidArgumentError):
        build_vervaat_bridge_neg(1.0, 64, stream)
    with pytest.raises(InvalidArgumentError):
        build_vervaat_bridge_pos(-1.0, 64, stream)
    with pytest.raises(InvalidArgumentError):
        build_vervaat_bridge_neg(-1.0, 64, stream, assembly='spline')


def test_direct_bridge_is_seeded():
    a = direct_vervaat_bridge(-1.0, 64, RngStream(1, 0), refine=4)
    b = direct_vervaat_bridge(-1.0, 64, RngStream(1, 0), refine=4)
    assert a.path == b.path
    assert a.path.n == 64
    assert set(a.latent) == {'A', 'Z'}
    assert 0.0 <= a.latent['A'] <= a.latent['Z']
    assert set(direct_vervaat_bridge(1.0, 64, RngStream(1, 0)).latent) == {'A', 'Zhat'}
    with pytest.raises(InvalidArgumentError):
        direct_vervaat_bridge(-1.0, 64, RngStream(1, 0), refine=0)


def test_direct_vb_zero_exists_iff_endpoint_nonpositive():
    for i in range(50):
        sample = direct_vb(64, RngStream(2, i), refine=2)
        assert (sample.latent['T0'] is None) == (sample.path.values[-1] > 0)


def test_build_vb_pieces(stream):
    sample = build_vb(256, stream)
    a = sample.latent['A']
    path = sample.path
    assert path.values[0] == 0.0
    assert path.values[-1] == pytest.approx(sample.latent['m1_end'] - sample.latent['m2_end'])
    assert np.all(path.values[path.times < a] >= 0)
    assert np.all(path.values[path.times > a] >= path.values[-1])


def test_above_chord():
    assert above_chord(GridPath(1.0, [0.0, 0.0, -1.0]), -1.0)
    assert not above_chord(GridPath(1.0, [0.0, -0.6, -1.0]), -1.0)


def test_conditioned_sampler_accepts_above_chord(stream):
    sample = conditioned_above_line(-1.0, 128, stream)
    assert above_chord(sample.path, -1.0)
    assert sample.counters['attempts'] >= 1
    assert sample.counters['acceptance_rate'] == 1.0 / sample.counters['attempts']
    assert 'Ztilde' in sample.latent


def test_conditioned_sampler_budget(monkeypatch, stream):
    below = decomp.DecompSample(GridPath(1.0, [0.0, -0.9, -1.0]), {'Z': 0.5}, 'neg')
    monkeypatch.setattr(decomp, 'build_vervaat_bridge_neg', lambda lam, N, rng: below)
    with pytest.raises(ResourceLimitError):
        conditioned_above_line(-1.0, 2, stream, max_attempts=3)


def test_sample_law_dispatch(stream):
    assert sample_law('vb', 0.0, 32, stream).branch == 'vb'
    assert sample_law('vbridge-pos', 1.0, 32, stream).branch == 'pos'
    with pytest.raises(InvalidArgumentError):
        sample_law('levy', -1.0, 32, stream)


def test_conditioned_sampler_law():
    lam = -1.0
    samples = [conditioned_above_line(lam, 512, RngStream(12, i)) for i in range(300)]
    assert all(above_chord(s.path, lam) for s in samples)
    ztilde = np.array([s.latent['Ztilde'] for s in samples])
    assert ks_one_sample(ztilde, fztilde(lam).cdf).passed
