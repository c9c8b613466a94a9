import math

import numpy as np
import pytest
from hypothesis import given
import hypothesis.strategies as st
from scipy import stats
from scipy.integrate import trapezoid

from laws import (
    arcsine,
    end_given_t0,
    fa,
    fz,
    fz_pdf,
    fzhat,
    fztilde,
    identity_checks,
    last_exit_bin_masses,
    mean_z,
    meander_marginal,
    meander_moments,
    named_law,
    nonmarkov_ratio,
    slope_cdf,
    stay_above_chord_prob,
    stay_above_prob,
    tabulate,
    vb_moments,
)
from utils import InvalidArgumentError


def test_fz_pdf_value():
    assert fz_pdf(-1.0, 0.5) == pytest.approx(0.9679, abs=1e-4)


@pytest.mark.parametrize('lam', [-0.5, -1.0, -2.0])
def test_fz_normalized_with_matching_mean(lam):
    law = fz(lam)
    assert law.total_mass() == pytest.approx(1.0, rel=1e-6)
    assert law.mean() == pytest.approx(mean_z(lam), rel=1e-6)
    assert law.cdf(1.0) == pytest.approx(1.0)
    assert law.integrate(law.pdf, 0.0, 0.4) == pytest.approx(law.cdf(0.4), abs=1e-7)


def test_fz_needs_negative_lambda():
    with pytest.raises(InvalidArgumentError):
        fz(0.5)


def test_fz_sampler_mean(gen):
    samples = fz(-1.0).sample(gen, 20000)
    assert np.all((samples > 0) & (samples < 1))
    assert abs(samples.mean() - mean_z(-1.0)) < 4 * samples.std() / math.sqrt(samples.size)


def test_derived_laws_normalized():
    assert fzhat(1.0).total_mass() == pytest.approx(1.0, rel=1e-6)
    assert fztilde(-1.0).total_mass() == pytest.approx(1.0, rel=1e-6)
    assert fa(-1.0).total_mass() == pytest.approx(1.0, rel=1e-6)


def test_slope_cdf_endpoints():
    assert slope_cdf(-1.0, -1.0) == pytest.approx(mean_z(-1.0))
    assert slope_cdf(-1.0, 0.0) == pytest.approx(1.0)
    assert stay_above_prob(-1.0) == mean_z(-1.0)
    with pytest.raises(InvalidArgumentError):
        slope_cdf(-1.0, -1.5)


def test_stay_above_chord_prob():
    assert stay_above_chord_prob(-0.5, -1.0) == 0.5
    with pytest.raises(InvalidArgumentError):
        stay_above_chord_prob(0.5, -1.0)


def test_vb_moment_values():
    half = vb_moments(0.5)
    assert half.mean == pytest.approx(0.6610, abs=1e-4)
    assert half.second == pytest.approx(0.8634, abs=1e-4)
    assert vb_moments(1.0).second == pytest.approx(1.0, abs=1e-12)
    assert vb_moments(0.0).mean == 0.0


@given(st.floats(min_value=0.0, max_value=1.0))
def test_vb_moment_splits_add_up(t):
    m = vb_moments(t)
    assert abs(m.mean_a_gt + m.mean_a_le - m.mean) < 1e-10
    assert abs(m.second_a_gt + m.second_a_le - m.second) < 1e-10


@pytest.mark.parametrize('t', [0.25, 0.5, 1.0])
def test_meander_marginal_moments(t):
    law = meander_marginal(t)
    mean, second, cross = meander_moments(t)
    assert law.total_mass() == pytest.approx(1.0, rel=1e-6)
    assert law.mean() == pytest.approx(mean, rel=1e-6)
    assert law.moment(2) == pytest.approx(second, rel=1e-6)
    assert cross == pytest.approx(2.0 * math.sqrt(t))


def test_arcsine_and_end_given_t0(gen):
    assert arcsine().cdf(0.5) == pytest.approx(0.5)
    law = end_given_t0(0.75)
    assert law.total_mass() == pytest.approx(1.0, rel=1e-6)
    assert np.all(law.sample(gen, 100) < 0)


def test_identity_checks_pass():
    reports = identity_checks()
    assert reports
    assert all(r.passed for r in reports)


def test_nonmarkov_ratio_is_linear_in_t():
    r1 = nonmarkov_ratio(0.6, 0.3, 0.5, -1.0)
    r2 = nonmarkov_ratio(0.8, 0.3, 0.5, -1.0)
    assert r1 / r2 == pytest.approx(0.75, rel=1e-6)


def test_last_exit_masses_total():
    lam, t = 1.0, 0.5
    masses = last_exit_bin_masses(lam, t, [lam, lam + 0.5, np.inf], [0.0, 0.25, 0.5])
    assert masses.shape == (2, 2)
    assert masses.sum() == pytest.approx(stats.chi(3, scale=math.sqrt(t)).sf(lam), rel=1e-4)


def test_tabulated_fz_integrates_to_one():
    grid, pdf, cdf = tabulate(fz(-1.0), 512)
    assert grid[0] == 0.0 and grid[-1] == 1.0
    assert abs(trapezoid(pdf, grid) - 1.0) < 1e-3
    assert np.all(np.diff(cdf) >= -1e-12)


def test_named_law_dispatch():
    assert named_law('rayleigh').name == 'rayleigh(1)'
    assert named_law('fz', -2.0).name == fz(-2.0).name
    with pytest.raises(InvalidArgumentError):
        named_law('gamma')
