"""
Experiment catalog: each suite runs its checks and returns TestReports plus CSV tables.

Replica work is done by module-level functions of one RngStream, bound with
functools.partial so a process pool can pickle them. Every sampler in a suite
draws from its own block of replica indices.
"""

import logging
import math
import os
import time
from dataclasses import dataclass, field
from functools import partial

import numpy as np
import pandas as pd
from scipy import stats

from config import (
    BIJECTION_MAX_N,
    DIRECT_REFINE,
    DISCRETE_LIMIT_N,
    DISCRETE_LIMIT_TOL,
    DUALITY_LAMBDAS,
    EXPERIMENTS,
    HULL_COLUMNS,
    HULL_SEGMENT_TOL,
    HULL_SLOPE_POINTS,
    HULL_SLOPE_TOL,
    IDENTITY_REL_TOL,
    LAST_EXIT_LAMBDA,
    LAST_EXIT_S_EDGES,
    LAST_EXIT_Y_OFFSETS,
    MARTINGALE_LAMBDAS,
    MARTINGALE_TIME,
    MAX_REFINED_GRID,
    MOMENT_IDENTITY_TOL,
    QUANTILE_KS_TOL,
    QV_BAND,
    QV_BAND_VB,
    QV_MAX_N,
    SEGMENT_GRIDS,
    SEGMENT_REPLICAS,
    STREAM_BLOCK,
    T0_BINS,
    ZPMF_MAX_N,
)
from decomp import (
    above_chord,
    build_vb,
    build_vervaat_bridge_neg,
    build_vervaat_bridge_pos,
    conditioned_above_line,
    direct_vb,
    direct_vervaat_bridge,
)
from drift import (
    compensator_bridge_neg,
    compensator_bridge_pos,
    compensator_vb,
    increment_reports,
    j_neg,
    j_vb,
    phi,
    phi_bar,
    phi_eval,
    phi_parts_scaled,
    phi_scaled,
    phidot_bar,
    theta_path,
)
from hull import convex_minorant, last_slope, segment_count
from lattice import (
    discrete_limit_report,
    nearest_endpoint,
    verify_bijection,
    verify_helper_uniform,
    verify_q_equals_v,
    verify_z_pmf,
    z_pmf,
)
from laws import (
    bessel_marginal,
    end_given_t0,
    fa,
    fz,
    fzhat,
    fztilde,
    identity_checks,
    last_exit_bin_masses,
    mean_z,
    meander_marginal,
    meander_moments,
    nonmarkov_densities,
    slope_cdf,
    stay_above_prob,
    vb_moments,
)
from output_handler import pmf_to_frame, save_reports_json, save_to_csv, save_to_excel, reports_to_frame
from sampler import GridPath, as_generator, run_replicas, sample_bessel3, sample_bm, sample_bridge, sample_excursion, sample_meander
from stat_tests import TestReport, chi_square_binned, ks_one_sample, ks_two_sample, moment_ztest, tolerance_check
from transform import first_hit, quantile_transform_bm, shift, vervaat
from utils import InvalidArgumentError

log = logging.getLogger(__name__)


class Progress:
    """Banner and [k/n] step printing, silenced by quiet."""

    def __init__(self, quiet=False):
        self.quiet = quiet
        self.total = 0
        self.count = 0

    def banner(self, title):
        if not self.quiet:
            print("=" * 60)
            print(title)
            print("=" * 60)

    def expect(self, total):
        self.total = total
        self.count = 0

    def step(self, message):
        self.count += 1
        if not self.quiet:
            print(f"\n[{self.count}/{self.total}] {message}")

    def detail(self, message):
        if not self.quiet:
            print(f"      {message}")


@dataclass
class SuiteResult:
    """Reports and named tables produced by one suite."""

    reports: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)


@dataclass
class ExperimentResult:
    status: int
    reports: list
    tables: dict
    failures: list
    json_path: str = None


class _Streams:
    """Hands out disjoint replica-index blocks so samplers never share streams."""

    def __init__(self, config):
        self.config = config
        self.block = 0

    def run(self, fn, replicas=None):
        start = self.block * STREAM_BLOCK
        self.block += 1
        count = self.config.replicas if replicas is None else replicas
        return run_replicas(fn, count, self.config.seed, self.config.workers, start)


def _marginals(path, t_grid):
    return np.array([path.at(t) for t in t_grid])


def _refine_for(grid):
    return max(1, min(DIRECT_REFINE, MAX_REFINED_GRID // grid))


def _uniform_cdf(x):
    return np.clip(x, 0.0, 1.0)


def _negative(lambdas):
    return [lam for lam in lambdas if lam < 0]


def _positive(lambdas):
    return [lam for lam in lambdas if lam > 0]


# Replica functions

def _neg_build_replica(stream, lam, N, t_grid):
    gen = as_generator(stream)
    sample = build_vervaat_bridge_neg(lam, N, gen)
    z = sample.latent['Z']
    shifted = shift(sample.path, gen.uniform() * z)
    return _marginals(sample.path, t_grid), z, _marginals(shifted, t_grid)


def _direct_replica(stream, lam, N, t_grid, refine):
    sample = direct_vervaat_bridge(lam, N, stream, refine)
    key = 'Z' if lam < 0 else 'Zhat'
    return _marginals(sample.path, t_grid), sample.latent['A'], sample.latent[key]


def _bridge_replica(stream, lam, N, t_grid):
    return _marginals(sample_bridge(N, 1.0, lam, stream), t_grid)


def _pos_build_replica(stream, lam, N, t_grid):
    sample = build_vervaat_bridge_pos(lam, N, stream)
    return _marginals(sample.path, t_grid), sample.latent['Zhat']


def _dual_replica(stream, lam, N, t_grid):
    # X_t = lam + Y_{1-t}, Y the negative-endpoint build to -lam
    reflected = build_vervaat_bridge_neg(-lam, N, stream).path
    return _marginals(GridPath(1.0, lam + reflected.values[::-1]), t_grid)


def _zero_bridge_replica(stream, N, t_grid, refine):
    fine = vervaat(sample_bridge(N * refine, 1.0, 0.0, stream)).path
    return _marginals(GridPath(1.0, fine.values[::refine]), t_grid)


def _excursion_replica(stream, N, t_grid):
    gen = as_generator(stream)
    excursion = sample_excursion(N, 1.0, gen)
    return _marginals(excursion, t_grid), _marginals(shift(excursion, gen.uniform()), t_grid)


def _bessel_replica(stream, N, t, levels):
    path = sample_bessel3(N, t, stream)
    return path.values[-1], np.array([theta_path(path, level)[-1] for level in levels])


def _vb_direct_replica(stream, N, t_grid, refine):
    sample = direct_vb(N, stream, refine)
    path = sample.path
    t0 = sample.latent['T0']
    end = path.values[-1]
    below = end <= 0
    consistent = (t0 is not None) == below and (first_hit(path, 0.0) is not None) == below
    return _marginals(path, t_grid), sample.latent['A'], np.nan if t0 is None else t0, end, consistent


def _vb_build_replica(stream, N, t_grid):
    sample = build_vb(N, stream)
    return _marginals(sample.path, t_grid), sample.latent['A'], sample.path.values[-1]


def _meander_replica(stream, N, t_grid):
    path = sample_meander(N, 1.0, stream)
    return _marginals(path, t_grid), path.values[-1]


def _neg_compensated_replica(stream, lam, N):
    compensated = compensator_bridge_neg(build_vervaat_bridge_neg(lam, N, stream), lam)
    return compensated.increments(1), compensated.increments(2)


def _pos_compensated_replica(stream, lam, N):
    sample = build_vervaat_bridge_pos(lam, N, stream)
    theta = theta_path(sample.path, lam)
    monotone = bool(np.all(np.diff(theta) >= 0) and np.all(theta <= sample.path.times + 1e-12))
    return compensator_bridge_pos(sample, lam).increments(1), monotone


def _vb_compensated_replica(stream, N, refine):
    compensated = compensator_vb(direct_vb(N, stream, refine))
    return compensated.increments(1), compensated.increments(2)


def _hull_replica(stream, lam, N):
    sample = build_vervaat_bridge_neg(lam, N, stream)
    minorant = convex_minorant(sample.path)
    return last_slope(minorant), segment_count(minorant), above_chord(sample.path, lam)


def _conditioned_replica(stream, lam, N):
    sample = conditioned_above_line(lam, N, stream)
    return sample.counters['attempts'], sample.latent['Ztilde']


def _quantile_replica(stream, N, t_grid):
    return _marginals(quantile_transform_bm(sample_bm(N, 1.0, stream)), t_grid)


def _vb_plain_replica(stream, N, t_grid):
    return _marginals(direct_vb(N, stream).path, t_grid)


# Suites

def exact_lattice(config, progress):
    """Exhaustive bijection, helper, z pmf and Q = V checks."""
    result = SuiteResult()
    progress.expect(4)

    progress.step(f"Bijection and helper uniformity, n <= {BIJECTION_MAX_N}")
    for n in range(1, BIJECTION_MAX_N + 1):
        for a in range(-n, 0):
            if (n - a) % 2 == 0:
                result.reports.append(verify_bijection(n, a))
                result.reports.append(verify_helper_uniform(n, a))
    progress.detail(f"{len(result.reports)} checks")

    progress.step(f"z pmf against enumeration, n <= {ZPMF_MAX_N}")
    for n in range(1, ZPMF_MAX_N + 1):
        for a in range(-n, 0):
            if (n - a) % 2 == 0:
                result.reports.append(verify_z_pmf(n, a))

    progress.step(f"Quantile transform equals Vervaat transform, n <= {QV_MAX_N}")
    for n in range(1, QV_MAX_N + 1):
        result.reports.append(verify_q_equals_v(n))

    progress.step("Tabulating z pmf")
    result.tables['z_pmf_n12_a-2'] = pmf_to_frame(z_pmf(12, -2))
    return result


def law_identities(config, progress):
    """Deterministic quadrature checks of the closed-form laws and moment identities."""
    result = SuiteResult()
    reports = result.reports
    tol = config.tolerance('identity', IDENTITY_REL_TOL)
    lambdas = _negative(config.lambdas)
    progress.expect(6)

    progress.step("First return, argmin and size-biased laws")
    for lam in lambdas:
        law = fz(lam)
        reports.append(tolerance_check(f'fz normalization lambda={lam:g}', law.total_mass(), 1.0, tol, True))
        worst = max(abs(law.integrate(law.pdf, 0.0, t) - law.cdf(t)) for t in (0.1, 0.25, 0.5, 0.75, 0.9))
        reports.append(tolerance_check(f'fz cdf by quadrature lambda={lam:g}', worst, 0.0, tol))
        reports.append(tolerance_check(f'mean z lambda={lam:g}', law.mean(), mean_z(lam), tol, True))
        argmin = fa(lam)
        reports.append(tolerance_check(f'fa normalization lambda={lam:g}', argmin.total_mass(), 1.0, tol, True))
        reports.append(tolerance_check(f'fa mean is half mean z lambda={lam:g}', argmin.mean(), 0.5 * mean_z(lam), tol, True))
        reports.append(tolerance_check(f'fztilde normalization lambda={lam:g}', fztilde(lam).total_mass(), 1.0, tol, True))
        reports.append(tolerance_check(f'slope cdf atom lambda={lam:g}', slope_cdf(lam, lam), mean_z(lam), tol, True))
        reports.append(tolerance_check(f'slope cdf at zero lambda={lam:g}', slope_cdf(lam, 0.0), 1.0, tol, True))
        reports.append(tolerance_check(f'fzhat normalization lambda={-lam:g}', fzhat(-lam).total_mass(), 1.0, tol, True))
        progress.detail(f"lambda={lam:g}: E Z = {mean_z(lam):.6f}")

    progress.step("Meander marginals")
    for t in config.t_grid:
        law = meander_marginal(t)
        mean, second, _ = meander_moments(t)
        reports.append(tolerance_check(f'meander normalization t={t:g}', law.total_mass(), 1.0, tol, True))
        reports.append(tolerance_check(f'meander mean t={t:g}', law.mean(), mean, tol, True))
        reports.append(tolerance_check(f'meander second moment t={t:g}', law.moment(2), second, tol, True))

    progress.step("V(B) moment identities on 101 points")
    rows = []
    mean_gap = second_gap = 0.0
    for t in np.linspace(0.0, 1.0, 101):
        m = vb_moments(float(t))
        mean_gap = max(mean_gap, abs(m.mean_a_gt + m.mean_a_le - m.mean))
        second_gap = max(second_gap, abs(m.second_a_gt + m.second_a_le - m.second))
        rows.append({'t': float(t), 'mean': m.mean, 'second': m.second, 'mean_a_gt': m.mean_a_gt,
                     'mean_a_le': m.mean_a_le, 'second_a_gt': m.second_a_gt, 'second_a_le': m.second_a_le})
    reports.append(tolerance_check('vb mean split identity', mean_gap, 0.0, MOMENT_IDENTITY_TOL))
    reports.append(tolerance_check('vb second moment split identity', second_gap, 0.0, MOMENT_IDENTITY_TOL))
    reports.append(tolerance_check('vb second moment at t=1', vb_moments(1.0).second, 1.0, MOMENT_IDENTITY_TOL))
    reports.append(tolerance_check('vb second moment at t=0.5', vb_moments(0.5).second, 0.8634, 1e-4))
    result.tables['vb_moments'] = pd.DataFrame(rows)

    progress.step("Integral identities")
    reports.extend(identity_checks(tol))

    progress.step("Conditional first-zero densities")
    lam = lambdas[0] if lambdas else -1.0
    for t0, x0 in ((0.3, 0.5), (0.5, 1.0)):
        f1, f2 = nonmarkov_densities(t0, x0, lam)
        ts = np.linspace(t0 + 0.1, 0.9, 6)
        ratios = np.array([f2(t) / f1(t) / t for t in ts])
        spread = float(np.max(np.abs(ratios / ratios[0] - 1.0)))
        reports.append(tolerance_check(f'density ratio proportional to t t0={t0:g} x0={x0:g}', spread, 0.0, tol))

    progress.step("Auxiliary laws")
    reports.append(tolerance_check('end given t0 normalization', end_given_t0(0.5).total_mass(), 1.0, tol, True))
    reports.append(tolerance_check('bessel marginal normalization', bessel_marginal(0.5).total_mass(), 1.0, tol, True))
    edges = LAST_EXIT_LAMBDA + np.asarray(LAST_EXIT_Y_OFFSETS)
    masses = last_exit_bin_masses(LAST_EXIT_LAMBDA, MARTINGALE_TIME, edges, LAST_EXIT_S_EDGES)
    above = stats.chi(3, scale=math.sqrt(MARTINGALE_TIME)).sf(LAST_EXIT_LAMBDA)
    reports.append(tolerance_check('last exit joint law mass', masses.sum(), above, 1e-4, True))
    return result


def drift_functions(config, progress):
    """Finite-difference, continuity, jump and PDE checks of J and Phi."""
    result = SuiteResult()
    reports = result.reports
    lam_neg = (_negative(config.lambdas) or [-1.0])[0]
    lam_pos = (_positive(config.lambdas) or [1.0])[0]
    ts = (0.0, 0.2, 0.4, 0.6, 0.8)
    ys = (0.2, 0.5, 1.0, 1.5, 2.0)
    families = (
        (f'J lambda={lam_neg:g}', lambda t, y, method='closed': j_neg(lam_neg, t, y, method)),
        ('J vb', lambda t, y, method='closed': j_vb(t, y, method)),
    )
    progress.expect(5)

    progress.step("J families: derivative identity and quadrature")
    for name, family in families:
        fd_gap = quad_gap = 0.0
        for t in ts:
            for y in ys:
                value, ring = family(t, y)
                h = 1e-5 * y
                slope = (family(t, y + h)[0] - family(t, y - h)[0]) / (2.0 * h)
                fd_gap = max(fd_gap, abs(slope + y * ring) / abs(y * ring))
                q_value, q_ring = family(t, y, 'quad')
                quad_gap = max(quad_gap, abs(q_value - value) / abs(value), abs(q_ring - ring) / abs(ring))
        reports.append(tolerance_check(f'{name} derivative identity', fd_gap, 0.0, 1e-4))
        reports.append(tolerance_check(f'{name} closed form vs quadrature', quad_gap, 0.0, 1e-6))
        progress.detail(f"{name}: fd gap {fd_gap:.2e}, quadrature gap {quad_gap:.2e}")
    near_zero = [j_vb(0.5, y)[0] for y in (0.1, 0.01, 0.001)]
    reports.append(TestReport('J vb blows up at zero', 3, near_zero[-1], None, None,
                              bool(near_zero[0] < near_zero[1] < near_zero[2]), None,
                              f'values {near_zero}'))
    reports.append(tolerance_check(f'J lambda={lam_neg:g} vanishes at t=1', j_neg(lam_neg, 1.0 - 1e-6, 0.5)[0], 0.0, 1e-10))

    progress.step("Phi continuity and derivative jump")
    lam = lam_pos
    cont_gap = jump_gap = 0.0
    for t, theta in ((0.3, 0.1), (0.6, 0.2), (0.9, 0.5)):
        lo, hi = np.nextafter(lam, 0.0), np.nextafter(lam, np.inf)
        cont_gap = max(cont_gap, abs(phi_eval(lam, t, hi, theta).value - phi_eval(lam, t, lo, theta).value))
        jump = phi_eval(lam, t, lam, theta, 'right').derivative - phi_eval(lam, t, lam, theta, 'left').derivative
        target = (t - theta) * math.exp(lam * lam / 2.0) / (lam * (1.0 - t) ** 1.5)
        jump_gap = max(jump_gap, abs(jump - target) / abs(target))
    reports.append(tolerance_check(f'phi continuity at y=lambda={lam:g}', cont_gap, 0.0, 1e-10))
    reports.append(tolerance_check(f'phi derivative jump lambda={lam:g}', jump_gap, 0.0, 1e-6))
    reports.append(tolerance_check(f'phi at the origin lambda={lam:g}', phi(lam, 0.0, 1e-7, 0.0), 1.0, 1e-6))

    progress.step("Phi heat equation residual")
    scale = math.exp(lam * lam / 2.0)
    for part in (0, 1):
        worst = 0.0
        for t, ratio in ((0.2, 0.5), (0.2, 1.7), (0.5, 0.3), (0.5, 2.2)):
            y = ratio * lam

            def f(s, x):
                return scale * float(phi_parts_scaled(lam, s, x)[part])

            hy, ht = 1e-4, 1e-5
            center = f(t, y)
            f_yy = (f(t, y + hy) - 2.0 * center + f(t, y - hy)) / hy ** 2
            f_y = (f(t, y + hy) - f(t, y - hy)) / (2.0 * hy)
            f_t = (f(t + ht, y) - f(t - ht, y)) / (2.0 * ht)
            worst = max(worst, abs(0.5 * f_yy + f_y / y + f_t))
        reports.append(tolerance_check(f'phi part {part + 1} heat equation residual', worst, 0.0, 1e-4))

    progress.step("Averaged Phi: exact against quadrature")
    times = np.linspace(0.0, 1.0, 65)
    path = GridPath(1.0, np.sqrt(times) * (1.0 + 0.4 * np.sin(20.0 * times)))
    t = 0.5
    exact, quad_value = phi_bar(t, path), phi_bar(t, path, 'quad')
    reports.append(tolerance_check('phi bar exact vs quadrature', exact, quad_value, 1e-5, True))
    slope, quad_slope = phidot_bar(t, path), phidot_bar(t, path, 'quad')
    reports.append(tolerance_check('phi bar derivative exact vs quadrature', slope, quad_slope, 1e-5, True))

    progress.step("Averaged Phi: finite-difference derivative")
    k, h = path.index_of(t), 1e-5
    bumped = []
    for sign in (1.0, -1.0):
        values = path.values.copy()
        values[k] += sign * h
        bumped.append(phi_bar(t, GridPath(1.0, values)))
    reports.append(tolerance_check('phi bar derivative finite difference', (bumped[0] - bumped[1]) / (2.0 * h),
                                   slope, 1e-3, True))
    return result


def decomposition_mc(config, progress):
    """Monte Carlo laws of the decompositions, duality and shift identities."""
    result = SuiteResult()
    reports = result.reports
    streams = _Streams(config)
    N, tg, seed = config.grid, tuple(config.t_grid), config.seed
    refine = _refine_for(N)
    neg = _negative(config.lambdas)
    progress.expect(len(neg) + len(DUALITY_LAMBDAS) + 2)

    for lam in neg:
        progress.step(f"Negative endpoint lambda={lam:g}")
        build = streams.run(partial(_neg_build_replica, lam=lam, N=N, t_grid=tg))
        direct = streams.run(partial(_direct_replica, lam=lam, N=N, t_grid=tg, refine=refine))
        bridge = streams.run(partial(_bridge_replica, lam=lam, N=N, t_grid=tg))
        build_marg = np.array([r[0] for r in build])
        shifted = np.array([r[2] for r in build])
        direct_marg = np.array([r[0] for r in direct])
        bridge_marg = np.array(bridge)
        for j, t in enumerate(tg):
            reports.append(ks_two_sample(direct_marg[:, j], build_marg[:, j],
                                         f'lambda={lam:g} t={t:g} direct vs decomposition', seed=seed))
            reports.append(ks_two_sample(shifted[:, j], bridge_marg[:, j],
                                         f'lambda={lam:g} t={t:g} shift at uniform first return vs bridge', seed=seed))
        law = fz(lam)
        reports.append(ks_one_sample(np.array([r[1] for r in build]), law.cdf, f'lambda={lam:g} decomposition Z', seed=seed))
        direct_z = np.array([r[2] for r in direct])
        reports.append(ks_one_sample(direct_z, law.cdf, f'lambda={lam:g} direct Z', seed=seed,
                                     bin_width=1.0 / (N * refine)))
        ratio = np.array([r[1] for r in direct]) / direct_z
        reports.append(ks_one_sample(ratio, _uniform_cdf, f'lambda={lam:g} A over Z uniform', seed=seed))
        progress.detail(f"mean Z {direct_z.mean():.4f} (closed form {mean_z(lam):.4f})")

    for lam in DUALITY_LAMBDAS:
        progress.step(f"Positive endpoint lambda={lam:g} and duality")
        build = streams.run(partial(_pos_build_replica, lam=lam, N=N, t_grid=tg))
        dual = np.array(streams.run(partial(_dual_replica, lam=lam, N=N, t_grid=tg)))
        direct = streams.run(partial(_direct_replica, lam=lam, N=N, t_grid=tg, refine=refine))
        build_marg = np.array([r[0] for r in build])
        direct_marg = np.array([r[0] for r in direct])
        for j, t in enumerate(tg):
            reports.append(ks_two_sample(build_marg[:, j], dual[:, j], f'lambda={lam:g} t={t:g} duality', seed=seed))
            reports.append(ks_two_sample(direct_marg[:, j], build_marg[:, j],
                                         f'lambda={lam:g} t={t:g} direct vs decomposition', seed=seed))
        law = fzhat(lam)
        reports.append(ks_one_sample(np.array([r[1] for r in build]), law.cdf, f'lambda={lam:g} decomposition Zhat', seed=seed))
        reports.append(ks_one_sample(np.array([r[2] for r in direct]), law.cdf, f'lambda={lam:g} direct Zhat', seed=seed,
                                     bin_width=1.0 / (N * refine)))

    progress.step("Zero endpoint: excursion and uniform shift")
    zero = np.array(streams.run(partial(_zero_bridge_replica, N=N, t_grid=tg, refine=refine)))
    excursion = streams.run(partial(_excursion_replica, N=N, t_grid=tg))
    bridge = np.array(streams.run(partial(_bridge_replica, lam=0.0, N=N, t_grid=tg)))
    excursion_marg = np.array([r[0] for r in excursion])
    shifted = np.array([r[1] for r in excursion])
    for j, t in enumerate(tg):
        reports.append(ks_two_sample(zero[:, j], excursion_marg[:, j], f't={t:g} vervaat of bridge vs excursion', seed=seed))
        reports.append(ks_two_sample(shifted[:, j], bridge[:, j], f't={t:g} shifted excursion vs bridge', seed=seed))

    progress.step("Bessel(3) last exits and Phi martingale")
    levels = tuple(sorted(set(MARTINGALE_LAMBDAS) | {LAST_EXIT_LAMBDA}))
    t = MARTINGALE_TIME
    bessel = streams.run(partial(_bessel_replica, N=max(1, N // 2), t=t, levels=levels))
    ends = np.array([r[0] for r in bessel])
    thetas = np.array([r[1] for r in bessel])
    for i, lam in enumerate(levels):
        if lam in MARTINGALE_LAMBDAS:
            values = math.exp(lam * lam / 2.0) * phi_scaled(lam, t, ends, thetas[:, i])
            reports.append(moment_ztest(values, 1.0, 'mean', f'phi martingale lambda={lam:g}', seed=seed))
    lam = LAST_EXIT_LAMBDA
    theta = thetas[:, levels.index(lam)]
    above = ends > lam
    y_edges = lam + np.asarray(LAST_EXIT_Y_OFFSETS)
    iy = np.searchsorted(y_edges, ends[above], side='right') - 1
    js = np.searchsorted(LAST_EXIT_S_EDGES, theta[above], side='right') - 1
    counts = np.zeros((len(y_edges) - 1, len(LAST_EXIT_S_EDGES) - 1))
    np.add.at(counts, (iy, js), 1)
    expected = last_exit_bin_masses(lam, t, y_edges, LAST_EXIT_S_EDGES)
    reports.append(chi_square_binned(counts, expected, f'last exit joint law lambda={lam:g}', seed=seed))
    result.tables['last_exit_cells'] = pd.DataFrame({
        'y_low': np.repeat(y_edges[:-1], counts.shape[1]),
        's_low': np.tile(LAST_EXIT_S_EDGES[:-1], counts.shape[0]),
        'observed': counts.ravel(),
        'expected': expected.ravel() / expected.sum() * counts.sum(),
    })
    return result


def moments_mc(config, progress):
    """Moments, zero set and endpoint laws of V(B) and of the meander."""
    result = SuiteResult()
    reports = result.reports
    streams = _Streams(config)
    N, tg, seed = config.grid, tuple(config.t_grid), config.seed
    refine = _refine_for(N)
    progress.expect(4)

    progress.step("Sampling V(B) directly and by decomposition")
    direct = streams.run(partial(_vb_direct_replica, N=N, t_grid=tg, refine=refine))
    build = streams.run(partial(_vb_build_replica, N=N, t_grid=tg))
    d_marg = np.array([r[0] for r in direct])
    t0 = np.array([r[2] for r in direct])
    d_end = np.array([r[3] for r in direct])
    inconsistent = sum(1 for r in direct if not r[4])
    b_marg = np.array([r[0] for r in build])
    b_a = np.array([r[1] for r in build])
    b_end = np.array([r[2] for r in build])
    progress.detail(f"{len(direct)} direct paths, {len(build)} built paths")

    progress.step("Moments and their splits on the argmin time")
    rows = []
    for j, t in enumerate(tg):
        m = vb_moments(t)
        x = d_marg[:, j]
        reports.append(moment_ztest(x, m.mean, 'mean', f'vb mean t={t:g}', seed=seed))
        reports.append(moment_ztest(x, m.second, 'second', f'vb second moment t={t:g}', seed=seed))
        y = b_marg[:, j]
        late, early = b_a > t, b_a <= t
        reports.append(moment_ztest(y * late, m.mean_a_gt, 'mean', f'vb mean on A>t t={t:g}', seed=seed))
        reports.append(moment_ztest(y * early, m.mean_a_le, 'mean', f'vb mean on A<=t t={t:g}', seed=seed))
        reports.append(moment_ztest(y * y * late, m.second_a_gt, 'mean', f'vb second moment on A>t t={t:g}', seed=seed))
        reports.append(moment_ztest(y * y * early, m.second_a_le, 'mean', f'vb second moment on A<=t t={t:g}', seed=seed))
        reports.append(ks_two_sample(x, y, f'vb t={t:g} direct vs decomposition', seed=seed))
        rows.append({'t': t, 'empirical_mean': x.mean(), 'closed_mean': m.mean,
                     'empirical_second': (x * x).mean(), 'closed_second': m.second})
    result.tables['vb_moments_mc'] = pd.DataFrame(rows)
    reports.append(ks_one_sample(d_end, stats.norm.cdf, 'vb endpoint direct', seed=seed))
    reports.append(ks_one_sample(b_end, stats.norm.cdf, 'vb endpoint decomposition', seed=seed))

    progress.step("First zero time")
    hit = np.isfinite(t0)
    reports.append(moment_ztest(hit.astype(float), 0.5, 'mean', 'vb first zero probability', seed=seed))
    reports.append(TestReport('vb first zero iff endpoint <= 0', len(direct), float(inconsistent), None, 0.0,
                              inconsistent == 0, seed, f'{inconsistent} paths disagree'))
    for lo, hi in zip(T0_BINS[:-1], T0_BINS[1:]):
        sel = hit & (t0 >= lo) & (t0 < hi)
        if np.count_nonzero(sel) < 10:
            progress.detail(f"first zero bin [{lo:g},{hi:g}) has too few paths, skipped")
            continue
        pit = np.array([end_given_t0(s).cdf(e) for s, e in zip(t0[sel], d_end[sel])])
        reports.append(ks_one_sample(pit, _uniform_cdf, f'vb endpoint given first zero in [{lo:g},{hi:g})', seed=seed))

    progress.step("Meander moments")
    meander = streams.run(partial(_meander_replica, N=N, t_grid=tg))
    m_marg = np.array([r[0] for r in meander])
    m_end = np.array([r[1] for r in meander])
    for j, t in enumerate(tg):
        mean, second, cross = meander_moments(t)
        x = m_marg[:, j]
        reports.append(moment_ztest(x, mean, 'mean', f'meander mean t={t:g}', seed=seed))
        reports.append(moment_ztest(x, second, 'second', f'meander second moment t={t:g}', seed=seed))
        reports.append(moment_ztest(x * m_end, cross, 'mean', f'meander cross moment t={t:g}', seed=seed))
    return result


def drift_mc(config, progress):
    """Compensated paths: quadratic variation and Gaussian increments in each regime."""
    result = SuiteResult()
    reports = result.reports
    streams = _Streams(config)
    N, seed = config.grid, config.seed
    dt = 1.0 / N
    neg, pos = _negative(config.lambdas), _positive(config.lambdas)
    progress.expect(len(neg) + len(pos) + 1)

    for lam in neg:
        progress.step(f"Negative endpoint lambda={lam:g}")
        runs = streams.run(partial(_neg_compensated_replica, lam=lam, N=N))
        before = np.concatenate([r[0] for r in runs])
        after = np.concatenate([r[1] for r in runs])
        reports.extend(increment_reports(before, dt, f'bridge lambda={lam:g} before Z', QV_BAND, seed))
        reports.extend(increment_reports(after, dt, f'bridge lambda={lam:g} after Z', QV_BAND, seed))
        progress.detail(f"{before.size + after.size} increments")

    for lam in pos:
        progress.step(f"Positive endpoint lambda={lam:g}")
        runs = streams.run(partial(_pos_compensated_replica, lam=lam, N=N))
        reports.extend(increment_reports(np.concatenate([r[0] for r in runs]), dt, f'bridge lambda={lam:g}', QV_BAND, seed))
        broken = sum(1 for r in runs if not r[1])
        reports.append(TestReport(f'bridge lambda={lam:g} last exit time monotone', len(runs), float(broken), None,
                                  0.0, broken == 0, seed))

    progress.step("V(B)")
    runs = streams.run(partial(_vb_compensated_replica, N=N, refine=_refine_for(N)))
    before = np.concatenate([r[0] for r in runs])
    after = np.concatenate([r[1] for r in runs])
    reports.extend(increment_reports(before, dt, 'vb before first zero', QV_BAND_VB, seed))
    if after.size:
        reports.extend(increment_reports(after, dt, 'vb after first zero', QV_BAND, seed))
    return result


def hull_mc(config, progress):
    """Last slope of the convex minorant, one-segment probability and the conditioned sampler."""
    result = SuiteResult()
    reports = result.reports
    streams = _Streams(config)
    N, seed = config.grid, config.seed
    lam = (_negative(config.lambdas) or [-1.0])[0]
    progress.expect(3)

    progress.step(f"Convex minorants, lambda={lam:g}")
    runs = streams.run(partial(_hull_replica, lam=lam, N=N))
    slopes = np.array([r[0] for r in runs])
    segments = np.array([r[1] for r in runs])
    accepted = np.array([r[2] for r in runs])
    note = f'grid N={N}: discrete paths see fewer hull vertices'
    rows = []
    for a in HULL_SLOPE_POINTS:
        empirical = float(np.mean(slopes <= a))
        closed = slope_cdf(lam, a)
        rows.append({HULL_COLUMNS[0]: a, HULL_COLUMNS[1]: empirical, HULL_COLUMNS[2]: closed})
        reports.append(tolerance_check(f'last slope cdf a={a:g}', empirical, closed, HULL_SLOPE_TOL, seed=seed))
    result.tables['hull_slope'] = pd.DataFrame(rows, columns=HULL_COLUMNS)
    one = tolerance_check('one segment probability', np.mean(segments == 1), stay_above_prob(lam), HULL_SEGMENT_TOL, seed=seed)
    one.notes += f'; {note}'
    reports.append(one)
    violations = int(np.count_nonzero(slopes < lam - 1e-9))
    reports.append(TestReport('last slope at least lambda', len(runs), float(violations), None, 0.0,
                              violations == 0, seed))
    rate = tolerance_check('above chord acceptance rate', accepted.mean(), mean_z(lam), HULL_SEGMENT_TOL, seed=seed)
    rate.notes += f'; {note}'
    reports.append(rate)
    progress.detail(f"mean segments {segments.mean():.2f}")

    progress.step("Rejection sampler")
    conditioned = streams.run(partial(_conditioned_replica, lam=lam, N=N))
    attempts = np.array([r[0] for r in conditioned])
    pooled = attempts.size / attempts.sum()
    accepted_rate = tolerance_check('rejection sampler pooled acceptance', pooled, mean_z(lam), HULL_SEGMENT_TOL,
                                    seed=seed)
    accepted_rate.notes += f'; {attempts.sum()} attempts, chord checked at the N={N} grid times only'
    reports.append(accepted_rate)
    ztilde = np.array([r[1] for r in conditioned])
    if ztilde.size >= 10:
        reports.append(ks_one_sample(ztilde, fztilde(lam).cdf, 'first return of conditioned paths', seed=seed))
    else:
        progress.detail("too few conditioned paths for the first return KS test, skipped")
    progress.detail(f"pooled acceptance {pooled:.4f} (closed form {mean_z(lam):.4f})")

    progress.step("Segment count across grids")
    medians = []
    for grid in SEGMENT_GRIDS:
        counts = [r[1] for r in streams.run(partial(_hull_replica, lam=lam, N=grid), min(config.replicas, SEGMENT_REPLICAS))]
        medians.append(float(np.median(counts)))
        progress.detail(f"N={grid}: median segments {medians[-1]:g}")
    reports.append(TestReport('segment count stable across grids', len(SEGMENT_GRIDS), medians[-1], None, None,
                              medians[-1] <= 2.0 * max(medians[0], 1.0), seed,
                              f'medians {medians} at N={list(SEGMENT_GRIDS)}', experimental=True))
    return result


def discrete_limit(config, progress):
    """Sup distance of the rescaled lattice first-return law to its continuum limit."""
    result = SuiteResult()
    lambdas = _negative(config.lambdas)
    progress.expect(len(lambdas))
    tol = config.tolerance('discrete_limit', DISCRETE_LIMIT_TOL)
    for lam in lambdas:
        progress.step(f"n={DISCRETE_LIMIT_N}, lambda={lam:g}")
        result.reports.append(discrete_limit_report(DISCRETE_LIMIT_N, lam, tol))
        a_n = nearest_endpoint(DISCRETE_LIMIT_N, lam)
        pmf = z_pmf(DISCRETE_LIMIT_N, a_n)
        support = np.asarray(pmf.support, dtype=float)
        result.tables[f'discrete_limit_lambda{lam:g}'] = pd.DataFrame({
            'l': pmf.support,
            'discrete_cdf': pmf.cdf(),
            'continuum_cdf': fz(a_n / math.sqrt(DISCRETE_LIMIT_N)).cdf(np.minimum((support + 1.0) / DISCRETE_LIMIT_N, 1.0)),
        })
        progress.detail(f"a_n={a_n}, distance {result.reports[-1].statistic:.4f}")
    return result


def quantile_experimental(config, progress):
    """Occupation quantile transform of BM against the Vervaat transform, non-gating."""
    result = SuiteResult()
    streams = _Streams(config)
    N, tg, seed = config.grid, tuple(config.t_grid), config.seed
    progress.expect(1)
    progress.step("Quantile transform vs Vervaat transform of BM")
    q = np.array(streams.run(partial(_quantile_replica, N=N, t_grid=tg)))
    v = np.array(streams.run(partial(_vb_plain_replica, N=N, t_grid=tg)))
    tol = config.tolerance('quantile', QUANTILE_KS_TOL)
    for j, t in enumerate(tg):
        ks = ks_two_sample(q[:, j], v[:, j], f'quantile vs vervaat t={t:g}', seed=seed)
        result.reports.append(TestReport(ks.name, ks.n, ks.statistic, ks.p_value, tol, ks.statistic < tol, seed,
                                         'statistic below threshold; local time estimated on the grid',
                                         experimental=True))
    return result


SUITES = {
    'exact-lattice': exact_lattice,
    'law-identities': law_identities,
    'drift-functions': drift_functions,
    'decomposition-mc': decomposition_mc,
    'moments-mc': moments_mc,
    'drift-mc': drift_mc,
    'hull-mc': hull_mc,
    'discrete-limit': discrete_limit,
    'quantile-experimental': quantile_experimental,
}


def run_experiment(config, json_path=None, xlsx_path=None, quiet=False):
    """
    Run one experiment and write its artifacts.

    Args:
        config (ExperimentConfig): Validated configuration
        json_path (str): Report JSON path (default <output_dir>/<experiment>.json)
        xlsx_path (str): Optional report workbook path
        quiet (bool): Suppress progress output

    Returns:
        ExperimentResult: status 0 iff every non-experimental report passed
    """
    if config.experiment not in SUITES:
        raise InvalidArgumentError(f"Unknown experiment '{config.experiment}'. Choose from: {sorted(SUITES)}")
    progress = Progress(quiet)
    progress.banner(f"Experiment: {config.experiment}")
    started = time.perf_counter()
    suite = SUITES[config.experiment](config, progress)
    log.debug("%s finished in %.1fs", config.experiment, time.perf_counter() - started)

    if EXPERIMENTS[config.experiment]['experimental']:
        for report in suite.reports:
            report.experimental = True

    os.makedirs(config.output_dir, exist_ok=True)
    json_path = json_path or os.path.join(config.output_dir, f'{config.experiment}.json')
    save_reports_json(suite.reports, json_path, verbose=not quiet)
    for name, table in suite.tables.items():
        save_to_csv(table, os.path.join(config.output_dir, f'{name}.csv'), verbose=not quiet)
    if xlsx_path:
        save_to_excel(reports_to_frame(suite.reports, config.experiment), xlsx_path, verbose=not quiet)

    failures = [r.name for r in suite.reports if not r.passed and not r.experimental]
    passed = sum(1 for r in suite.reports if r.passed)
    if not quiet:
        print("\n" + "=" * 60)
        print(f"Passed {passed}/{len(suite.reports)} checks")
        for name in failures:
            print(f"      FAILED: {name}")
        print("=" * 60)
    return ExperimentResult(0 if not failures else 1, suite.reports, suite.tables, failures, json_path)
