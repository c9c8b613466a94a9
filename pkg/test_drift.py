import math

import numpy as np
import pytest

from decomp import build_vervaat_bridge_neg, build_vervaat_bridge_pos, direct_vb
from drift import (
    compensator_bridge_neg,
    compensator_bridge_pos,
    compensator_vb,
    dphi,
    increment_reports,
    j_neg,
    j_neg_log_derivative,
    j_vb,
    phi,
    phi_bar,
    phi_eval,
    phidot_bar,
    residual_reports,
    suffix_minima,
    theta_path,
)
from config import GUARD_TIME
from sampler import GridPath, RngStream
from utils import InvalidArgumentError

GRID = [(0.0, 0.5), (0.3, 0.2), (0.3, 1.5), (0.7, 0.8)]


def _wiggle_path():
    times = np.linspace(0.0, 1.0, 65)
    return GridPath(1.0, np.sqrt(times) * (1.0 + 0.4 * np.sin(20.0 * times)))


@pytest.mark.parametrize('t,y', GRID)
def test_j_closed_forms_match_quadrature(t, y):
    for family in (lambda m: j_neg(-1.0, t, y, m), lambda m: j_vb(t, y, m)):
        closed, quad_ = family('closed'), family('quad')
        assert closed[0] == pytest.approx(quad_[0], rel=1e-7)
        assert closed[1] == pytest.approx(quad_[1], rel=1e-7)


@pytest.mark.parametrize('t,y', GRID)
def test_j_derivative_identity(t, y):
    h = 1e-5 * y
    for family in (lambda x: j_neg(-2.0, t, x), lambda x: j_vb(t, x)):
        slope = (family(y + h)[0] - family(y - h)[0]) / (2.0 * h)
        assert slope == pytest.approx(-y * family(y)[1], rel=1e-5)


def test_j_log_derivative():
    j, ring = j_neg(-1.0, 0.4, 0.7)
    assert float(j_neg_log_derivative(-1.0, 0.4, 0.7)) == pytest.approx(0.7 * ring / j, rel=1e-12)


def test_j_rejects_bad_arguments():
    with pytest.raises(InvalidArgumentError):
        j_neg(1.0, 0.5, 0.5)
    with pytest.raises(InvalidArgumentError):
        j_vb(1.0, 0.5)


def test_phi_continuous_with_derivative_jump():
    lam, t, theta = 1.0, 0.6, 0.2
    lo, hi = np.nextafter(lam, 0.0), np.nextafter(lam, 2.0)
    assert abs(phi(lam, t, hi, theta) - phi(lam, t, lo, theta)) < 1e-10
    jump = dphi(lam, t, lam, theta, 'right') - dphi(lam, t, lam, theta, 'left')
    expected = (t - theta) * math.exp(lam * lam / 2.0) / (lam * (1.0 - t) ** 1.5)
    assert jump == pytest.approx(expected, rel=1e-8)


def test_phi_at_origin_is_one():
    assert phi(1.0, 0.0, 1e-7, 0.0) == pytest.approx(1.0, abs=1e-6)


def test_phi_domain():
    with pytest.raises(InvalidArgumentError):
        phi(1.0, 0.3, 0.5, 0.4)
    with pytest.raises(InvalidArgumentError):
        phi(-1.0, 0.3, 0.5, 0.1)


def test_suffix_minima():
    idx, val = suffix_minima([0.0, 2.0, 1.0, 3.0, 2.5])
    assert list(idx) == [0, 2, 4]
    assert list(val) == [0.0, 1.0, 2.5]


def test_phi_bar_exact_matches_quadrature():
    path = _wiggle_path()
    assert phi_bar(0.5, path) == pytest.approx(phi_bar(0.5, path, 'quad'), rel=1e-5)
    assert phidot_bar(0.5, path) == pytest.approx(phidot_bar(0.5, path, 'quad'), rel=1e-5)


def test_phi_bar_needs_positive_terminal_value():
    with pytest.raises(InvalidArgumentError):
        phi_bar(0.5, GridPath(1.0, [0.0, -0.1, 0.2]))


def test_theta_path():
    theta = theta_path(GridPath(3.0, [0.0, 2.0, 0.5, 3.0]), 1.0)
    assert list(theta) == [0.0, 0.0, 2.0, 2.0]


def test_negative_compensator_regimes():
    sample = build_vervaat_bridge_neg(-1.0, 512, RngStream(8, 0))
    compensated = compensator_bridge_neg(sample, -1.0)
    left = sample.path.times[:-1]
    assert not np.any(compensated.mask & (left > 1.0 - GUARD_TIME))
    assert compensated.stop_index * sample.path.dt >= sample.latent['Z'] - 1e-9
    first = compensated.regime == 1
    assert np.all(left[first] < sample.latent['Z'])
    assert np.all(np.isfinite(compensated.residual))


def test_positive_and_vb_compensators_run():
    pos = compensator_bridge_pos(build_vervaat_bridge_pos(1.0, 256, RngStream(9, 0)), 1.0)
    assert pos.increments().size > 0
    assert np.all(np.isfinite(pos.residual))
    vb = compensator_vb(direct_vb(256, RngStream(9, 1)))
    assert vb.increments(1).size > 0
    assert np.all(np.isfinite(vb.residual))


def test_increment_reports_on_gaussian_noise():
    dt = 1.0 / 4096
    increments = np.random.default_rng(0).normal(0.0, math.sqrt(dt), 200000)
    reports = increment_reports(increments, dt, 'noise')
    assert len(reports) == 3
    assert all(r.passed for r in reports)
    with pytest.raises(InvalidArgumentError):
        increment_reports(np.array([]), dt, 'empty')


def test_residual_reports_pool_paths():
    paths = [compensator_bridge_neg(build_vervaat_bridge_neg(-1.0, 256, RngStream(10, i)), -1.0) for i in range(5)]
    reports = residual_reports(paths, 'bridge')
    assert [r.name for r in reports] == ['bridge qv ratio', 'bridge mean increment', 'bridge increment ks']


def test_phi_eval_bundles_value_and_one_sided_derivative():
    lam, t, theta = 1.0, 0.6, 0.2
    right = phi_eval(lam, t, lam, theta)
    left = phi_eval(lam, t, lam, theta, 'left')
    assert (right.t, right.y, right.theta) == (t, lam, theta)
    assert right.value == left.value == phi(lam, t, lam, theta)
    assert right.derivative == dphi(lam, t, lam, theta, 'right')
    assert right.derivative - left.derivative == pytest.approx(
        (t - theta) * math.exp(lam * lam / 2.0) / (lam * (1.0 - t) ** 1.5), rel=1e-8)
    with pytest.raises(InvalidArgumentError):
        phi_eval(lam, 0.3, 0.5, 0.4)
