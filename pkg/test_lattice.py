import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
import hypothesis.strategies as st

from lattice import (
    Walk,
    brute_count_first_passage,
    count_first_passage,
    discrete_limit_report,
    empirical_z_pmf,
    enumerate_bridges,
    enumerate_walks,
    in_target_set,
    nearest_endpoint,
    quantile_walk,
    sample_bridge_walk,
    verify_bijection,
    verify_helper_uniform,
    verify_q_equals_v,
    verify_z_pmf,
    vervaat_walk,
    z_pmf,
)
from utils import InvalidArgumentError, ResourceLimitError

walks = st.lists(st.sampled_from([-1, 1]), min_size=1, max_size=30).map(lambda steps: Walk(tuple(steps)))


def test_walk_rejects_bad_steps():
    with pytest.raises(InvalidArgumentError):
        Walk((1, 2))
    with pytest.raises(InvalidArgumentError):
        Walk(())


def test_enumeration_counts():
    assert len(set(enumerate_walks(6))) == 64
    bridges = enumerate_bridges(8, -2)
    assert len(bridges) == math.comb(8, 3)
    assert all(w.endpoint == -2 for w in bridges)


def test_enumeration_guard():
    with pytest.raises(ResourceLimitError):
        enumerate_walks(17)
    with pytest.raises(ResourceLimitError):
        verify_bijection(17, -1)


def test_vervaat_walk_example():
    w = Walk.from_positions([0, 1, 0, -1, 0, -1])
    v, k = vervaat_walk(w)
    # first minimum at index 3, so K = 5 - 3
    assert k == 2
    assert v.positions == (0, 1, 0, 1, 0, -1)
    assert v.first_hit(-1) == 5


@given(walks)
def test_vervaat_walk_properties(w):
    v, k = vervaat_walk(w)
    assert v.endpoint == w.endpoint
    assert sorted(v.increments) == sorted(w.increments)
    assert min(v.positions[: k + 1]) >= 0
    assert min(v.positions) >= min(0, w.endpoint)


@given(walks)
def test_quantile_walk_preserves_increments(w):
    q = quantile_walk(w)
    assert q.n == w.n
    assert q.endpoint == w.endpoint
    assert sorted(q.increments) == sorted(w.increments)


@pytest.mark.parametrize('l', [1, 3, 5, 7, 9, 11])
def test_first_passage_count_matches_enumeration(l):
    assert count_first_passage(l) == brute_count_first_passage(l)


def test_first_passage_count_needs_odd_length():
    with pytest.raises(InvalidArgumentError):
        count_first_passage(4)


@pytest.mark.parametrize('n,a', [(1, -1), (5, -1), (8, -2), (10, -4), (13, -3)])
def test_z_pmf_matches_enumeration(n, a):
    exact = z_pmf(n, a)
    assert exact == empirical_z_pmf(n, a)
    assert exact.total == Fraction(1)
    assert all(l % 2 == 1 for l in exact.support)


def test_z_pmf_rejects_bad_endpoints():
    with pytest.raises(InvalidArgumentError):
        z_pmf(5, -2)
    with pytest.raises(InvalidArgumentError):
        z_pmf(6, 2)


def test_verifiers_pass():
    assert verify_bijection(8, -2).passed
    assert verify_helper_uniform(9, -3).passed
    assert verify_q_equals_v(8).passed
    assert verify_z_pmf(12, -4).passed


def test_in_target_set_of_images():
    for w in enumerate_bridges(7, -1):
        v, k = vervaat_walk(w)
        assert in_target_set(v, k, -1)


def test_sample_bridge_walk(gen):
    w = sample_bridge_walk(50, -8, gen)
    assert w.n == 50
    assert w.endpoint == -8


def test_nearest_endpoint():
    assert nearest_endpoint(2000, -1.0) == -44
    assert nearest_endpoint(50, -1.0) % 2 == 0


def test_discrete_limit_within_tolerance():
    report = discrete_limit_report(2000, -1.0, 0.02)
    assert report.passed
    assert np.isfinite(report.statistic)
