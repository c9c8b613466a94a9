"""
Drift functions of Vervaat bridges and of V(B), and the compensated paths built from them.

J families: weighted integrals of Bessel(3) kernel ratios over the
remaining time, evaluated in closed form or by quadrature. Phi family:
the h-functions of the positive-endpoint bridge; phi_bar averages them over
the endpoint with the last-exit time read off the path.

All functions here carrying an e^{lam^2/2} factor are evaluated through
their e^{-lam^2/2}-scaled versions, so drift ratios never overflow.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from config import GUARD_STATE, GUARD_TIME, PHI_BAR_TOL, QV_BAND
from laws import Quadrature, fz_pdf
from sampler import GridPath
from stat_tests import band_check, increment_ztest, ks_one_sample
from transform import first_hit
from utils import InvalidArgumentError, quad, require_negative, require_positive

log = logging.getLogger(__name__)

SQRT_PI = math.sqrt(math.pi)
SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


@dataclass(frozen=True)
class DriftEval:
    """Value and y-partial of a drift function at (t, y, theta)."""

    t: float
    y: float
    theta: float
    value: float
    derivative: float


@dataclass
class CompensatedPath:
    """
    A path minus its drift integral.

    mask[k] marks the steps [t_k, t_{k+1}] inside the guard bands; regime[k]
    is 1 before the stop time, 2 after it, 0 outside the mask.
    """

    original: GridPath
    drift_integral: np.ndarray
    mask: np.ndarray
    regime: np.ndarray
    stop_index: int = None

    @property
    def residual(self):
        return self.original.values - self.drift_integral

    def increments(self, regime=None):
        """Residual increments over masked steps, optionally one regime only."""
        steps = np.diff(self.residual)
        keep = self.mask if regime is None else self.mask & (self.regime == regime)
        return steps[keep]

    def elapsed(self, regime=None):
        keep = self.mask if regime is None else self.mask & (self.regime == regime)
        return float(np.count_nonzero(keep)) * self.original.dt

    def qv_ratio(self, regime=None):
        elapsed = self.elapsed(regime)
        return float(np.sum(self.increments(regime) ** 2) / elapsed) if elapsed > 0 else float('nan')


def _check_time(t):
    if not 0.0 <= t < 1.0:
        raise InvalidArgumentError(f"t must lie in [0,1), got {t}")


def _check_level(y):
    if not y > 0:
        raise InvalidArgumentError(f"y must be positive (J is singular at 0), got {y}")


def _kernel_ratio(t, y, s):
    # q~_{s-t}(0,y) / q~_s(0,0)
    u = s - t
    if u <= 0:
        return 0.0
    return (s / u) ** 1.5 * math.exp(-y * y / (2.0 * u))


# J families

def j_neg_closed(lam, t, y):
    """Vectorized closed form of (J, Jring) for the negative-endpoint bridge."""
    L = abs(lam)
    T = 1.0 - t
    y = np.asarray(y, dtype=float)
    pref = np.exp(lam * lam / 2.0 - (y + L) ** 2 / (2.0 * T)) / (y * T ** 1.5)
    j = pref * (y + t * L)
    jring = pref * (t * L / y ** 2 + (1.0 + t * L / y) * (y + L) / T)
    return j, jring


def j_vb_closed(t, y):
    """Vectorized closed form of (J, Jring) for V(B)."""
    T = 1.0 - t
    y = np.asarray(y, dtype=float)
    gauss = math.sqrt(2.0 / (math.pi * T)) * np.exp(-y * y / (2.0 * T)) / y
    j = t * gauss + special.erfc(y / math.sqrt(2.0 * T))
    jring = gauss * (1.0 + t / y ** 2 + t / T)
    return j, jring


def j_neg(lam, t, y, method='closed'):
    """
    J(t, y) = int_t^1 q~_{s-t}(0,y)/q~_s(0,0) f_Z(s) ds and Jring, the same
    integral weighted by 1/(s-t), so that dJ/dy = -y Jring.

    Args:
        lam (float): Negative endpoint
        t (float): Time in [0,1)
        y (float): Positive level
        method (str): 'closed' or 'quad'

    Returns:
        tuple: (J, Jring)
    """
    lam = require_negative(lam)
    _check_time(t)
    _check_level(y)
    if method == 'closed':
        j, jring = j_neg_closed(lam, t, y)
        return float(j), float(jring)
    if method != 'quad':
        raise InvalidArgumentError(f"method must be 'closed' or 'quad', got '{method}'")

    def weight(s):
        return _kernel_ratio(t, y, s) * float(fz_pdf(lam, s))

    j, _ = quad(weight, t, 1.0, rel_tol=1e-10, abs_tol=1e-300)
    jring, _ = quad(lambda s: weight(s) / (s - t) if s > t else 0.0, t, 1.0, rel_tol=1e-10, abs_tol=1e-300)
    return j, jring


def j_vb(t, y, method='closed'):
    """
    J(t, y) = int_t^1 q~_{s-t}(0,y)/q~_s(0,0) ds/(pi sqrt(s(1-s))) and its Jring.

    Args:
        t (float): Time in [0,1)
        y (float): Positive level
        method (str): 'closed' or 'quad'

    Returns:
        tuple: (J, Jring)
    """
    _check_time(t)
    _check_level(y)
    if method == 'closed':
        j, jring = j_vb_closed(t, y)
        return float(j), float(jring)
    if method != 'quad':
        raise InvalidArgumentError(f"method must be 'closed' or 'quad', got '{method}'")

    # (1-s)^{-1/2} goes to the algebraic weight
    def weight(s):
        return _kernel_ratio(t, y, s) / (math.pi * math.sqrt(s)) if s > 0 else 0.0

    j, _ = quad(weight, t, 1.0, rel_tol=1e-10, abs_tol=1e-300, weight='alg', wvar=(0.0, -0.5))
    jring, _ = quad(lambda s: weight(s) / (s - t) if s > t else 0.0, t, 1.0,
                    rel_tol=1e-10, abs_tol=1e-300, weight='alg', wvar=(0.0, -0.5))
    return j, jring


def j_neg_log_derivative(lam, t, y):
    """y * Jring / J for the negative-endpoint bridge, vectorized."""
    L = abs(lam)
    T = 1.0 - t
    y = np.asarray(y, dtype=float)
    return t * L / (y * (y + t * L)) + (y + L) / T


# Phi family

def _erfc_gap(a, b):
    # erfc(a) - erfc(b) for 0 <= a <= b without cancellation on either tail
    return np.where(a > 1.0, special.erfc(a) - special.erfc(b), special.erf(b) - special.erf(a))


def phi_parts_scaled(lam, t, y):
    """
    e^{-lam^2/2} Phi^1 and e^{-lam^2/2} Phi^2 (vectorized in y and t).

    Phi^1 = e^{lam^2/2} sqrt(pi) / (2 sqrt(2) y) [erfc(|y-lam|/sqrt(2T)) - erfc((y+lam)/sqrt(2T))],
    Phi^2 = e^{lam^2/2} (y-lam) / (T^{3/2} y) exp(-(y-lam)^2/(2T)), T = 1 - t.
    """
    y = np.asarray(y, dtype=float)
    T = 1.0 - np.asarray(t, dtype=float)
    c = np.sqrt(2.0 * T)
    u = y - lam
    p1 = SQRT_PI / (2.0 * math.sqrt(2.0) * y) * _erfc_gap(np.abs(u) / c, (y + lam) / c)
    p2 = u / (T ** 1.5 * y) * np.exp(-u * u / (2.0 * T))
    return p1, p2


def dphi_parts_scaled(lam, t, y, side='right'):
    """y-partials of the scaled Phi^1 and Phi^2; at y = lam the side picks the one-sided limit."""
    y = np.asarray(y, dtype=float)
    T = 1.0 - np.asarray(t, dtype=float)
    c = np.sqrt(2.0 * T)
    u = y - lam
    sign = np.where(u > 0, 1.0, np.where(u < 0, -1.0, 1.0 if side == 'right' else -1.0))
    a = np.abs(u) / c
    b = (y + lam) / c
    gap = SQRT_PI * _erfc_gap(a, b)
    dgap = np.sqrt(2.0 / T) * (np.exp(-b * b) - sign * np.exp(-a * a))
    d1 = (-gap / y ** 2 + dgap / y) / (2.0 * math.sqrt(2.0))
    d2 = np.exp(-u * u / (2.0 * T)) / T ** 1.5 * (lam / y ** 2 - u * u / (T * y))
    return d1, d2


def _check_phi_domain(lam, t, y, theta):
    require_positive(lam, 'lambda')
    require_positive(y, 'y')
    if not 0.0 <= theta <= t < 1.0:
        raise InvalidArgumentError(f"need 0 <= theta <= t < 1, got theta={theta}, t={t}")


def phi_scaled(lam, t, y, theta):
    p1, p2 = phi_parts_scaled(lam, t, y)
    return p1 + (1.0 - theta) * np.maximum(p2, 0.0)


def dphi_scaled(lam, t, y, theta, side='right'):
    d1, d2 = dphi_parts_scaled(lam, t, y, side)
    above = (np.asarray(y) > lam) | ((np.asarray(y) == lam) & (side == 'right'))
    return d1 + (1.0 - theta) * np.where(above, d2, 0.0)


def phi(lam, t, y, theta):
    """
    Phi^lam(t, y, theta) = Phi^1 + (1 - theta) max(0, Phi^2).

    Args:
        lam (float): Positive endpoint
        t (float): Time in [0,1)
        y (float): Positive level
        theta (float): Last time at or below lam, 0 <= theta <= t

    Returns:
        float: Value of Phi^lam
    """
    _check_phi_domain(lam, t, y, theta)
    return math.exp(lam * lam / 2.0) * float(phi_scaled(lam, t, y, theta))


def dphi(lam, t, y, theta, side='right'):
    """Analytic y-partial of phi; jumps by (t - theta) e^{lam^2/2} / (lam (1-t)^{3/2}) at y = lam."""
    _check_phi_domain(lam, t, y, theta)
    return math.exp(lam * lam / 2.0) * float(dphi_scaled(lam, t, y, theta, side))


def phi_eval(lam, t, y, theta, side='right'):
    """Phi^lam and its one-sided y-partial bundled as a DriftEval."""
    return DriftEval(t, y, theta, phi(lam, t, y, theta), dphi(lam, t, y, theta, side))


def suffix_minima(values):
    """
    Monotone stack of backward record lows of a path.

    Returns:
        tuple: (indices, values), both increasing; for lam in [values[j], values[j+1])
            the last index with path <= lam is indices[j]
    """
    idx, val = [], []
    for i, v in enumerate(values):
        while val and val[-1] >= v:
            idx.pop()
            val.pop()
        idx.append(i)
        val.append(v)
    return np.asarray(idx), np.asarray(val, dtype=float)


def _phi_bar_from_stack(indices, levels, dt, t):
    """
    Exact (Phi, d Phi/dy) for a path prefix summarized by its record-low stack.

    The lam-integral of the Phi^1 part is F(x) = erfc(x) + (1 - e^{-x^2})/(sqrt(pi) x),
    x = y/sqrt(2T). The Phi^2 part is piecewise in lam, with weight
    1 - theta constant between consecutive record lows.
    """
    y = float(levels[-1])
    T = 1.0 - t
    x = y / math.sqrt(2.0 * T)
    lost = -math.expm1(-x * x)
    value = math.erfc(x) + lost / (SQRT_PI * x)
    slope = -lost / (math.sqrt(2.0 * T) * SQRT_PI * x * x)
    lo = np.maximum(levels[:-1], 0.0)
    hi = levels[1:]
    keep = hi > lo
    if np.any(keep):
        w = 1.0 - indices[:-1][keep] * dt
        v1 = y - hi[keep]
        v2 = y - lo[keep]
        g1 = np.exp(-v1 * v1 / (2.0 * T))
        g2 = np.exp(-v2 * v2 / (2.0 * T))
        c = math.sqrt(2.0 * T)
        e0 = math.sqrt(math.pi * T / 2.0) * (special.erf(v2 / c) - special.erf(v1 / c))
        e1 = T * (g1 - g2)
        e2 = T * (v1 * g1 - v2 * g2) + T * e0
        scale = SQRT_2_OVER_PI / T ** 1.5
        value += scale * float(np.sum(w * e1)) / y
        slope += scale * float(np.sum(w * (e0 / y - e1 / y ** 2 - e2 / (T * y))))
    return value, slope


def _prefix(t, path):
    _check_time(t)
    k = path.index_of(t)
    values = path.values[: k + 1]
    if values[0] != 0.0:
        raise InvalidArgumentError("phi_bar needs a path started at 0")
    if not values[-1] > 0:
        raise InvalidArgumentError(f"phi_bar needs a positive terminal value, got {values[-1]}")
    return values, path.dt


def _phi_bar_quad(t, values, dt, derivative):
    indices, levels = suffix_minima(values)
    y = float(values[-1])

    def theta_of(lam):
        if lam >= y:
            return t
        return indices[np.searchsorted(levels, lam, side='right') - 1] * dt

    if derivative:
        def integrand(lam):
            return float(dphi_scaled(lam, t, y, theta_of(lam)))
    else:
        def integrand(lam):
            return float(phi_scaled(lam, t, y, theta_of(lam)))

    breaks = [v for v in levels if v > 0]
    quadrature = Quadrature(rel_tol=PHI_BAR_TOL, substitution='tan', abs_tol=1e-12)
    def weighted(lam):
        return SQRT_2_OVER_PI * integrand(lam) if lam > 0 else 0.0

    return quadrature.integrate(weighted, 0.0, np.inf, points=breaks)


def phi_bar(t, path, method='exact'):
    """
    Phi(t, gamma) = sqrt(2/pi) int_0^inf Phi^lam(t, gamma_t, theta_lam) e^{-lam^2/2} dlam,
    theta_lam the last time in [0, t] at which the path is <= lam.

    Args:
        t (float): Time in [0,1); the path prefix up to the nearest grid time is used
        path (GridPath): Path started at 0 with gamma_t > 0
        method (str): 'exact' (piecewise closed form) or 'quad'

    Returns:
        float: Phi(t, gamma)
    """
    values, dt = _prefix(t, path)
    if method == 'exact':
        return _phi_bar_from_stack(*suffix_minima(values), dt, t)[0]
    if method == 'quad':
        return _phi_bar_quad(t, values, dt, derivative=False)
    raise InvalidArgumentError(f"method must be 'exact' or 'quad', got '{method}'")


def phidot_bar(t, path, method='exact'):
    """Partial of phi_bar in the terminal value gamma_t, the rest of the path held fixed."""
    values, dt = _prefix(t, path)
    if method == 'exact':
        return _phi_bar_from_stack(*suffix_minima(values), dt, t)[1]
    if method == 'quad':
        return _phi_bar_quad(t, values, dt, derivative=True)
    raise InvalidArgumentError(f"method must be 'exact' or 'quad', got '{method}'")


# Compensators

def _compensate(path, drift, mask, regime, stop_index):
    steps = np.where(mask, drift, 0.0) * path.dt
    integral = np.concatenate([[0.0], np.cumsum(steps)])
    bad = mask & ~np.isfinite(drift)
    if np.any(bad):
        log.warning("Dropping %d steps with non-finite drift", int(np.count_nonzero(bad)))
        mask = mask & ~bad
        integral = np.concatenate([[0.0], np.cumsum(np.where(mask, drift, 0.0) * path.dt)])
    return CompensatedPath(path, integral, mask, np.where(mask, regime, 0), stop_index)


def _guards(path, guard_time):
    left = path.times[:-1]
    return left, left <= 1.0 - guard_time


def compensator_bridge_neg(sample, lam, guard_time=GUARD_TIME, guard_state=GUARD_STATE):
    """
    Compensate V(B^{lam,br}), lam < 0, with left-point drift sums.

    Before Z the drift is 1/V - V Jring/J; from Z on the path is lam plus a
    Bessel(3) bridge to 0, with drift 1/(V + |lam|) - (V + |lam|)/(1 - s).
    The step straddling Z is charged to the first regime.

    Args:
        sample (DecompSample): Path with latent 'Z'
        lam (float): Negative endpoint
        guard_time (float): Steps start at s <= 1 - guard_time
        guard_state (float): Steps start where the singular state is >= guard_state

    Returns:
        CompensatedPath: stop_index is the first grid index >= Z
    """
    lam = require_negative(lam)
    path = sample.path
    L = abs(lam)
    left, in_time = _guards(path, guard_time)
    v = path.values[:-1]
    z = sample.latent['Z']
    first = left < z
    with np.errstate(divide='ignore', invalid='ignore'):
        drift_before = 1.0 / v - j_neg_log_derivative(lam, left, v)
        drift_after = 1.0 / (v + L) - (v + L) / (1.0 - left)
    drift = np.where(first, drift_before, drift_after)
    state = np.where(first, v, v + L)
    mask = in_time & (state >= guard_state)
    regime = np.where(first, 1, 2)
    stop = int(math.ceil(z / path.dt - 1e-12))
    return _compensate(path, drift, mask, regime, stop)


def theta_path(path, lam):
    """Running last grid time at or below lam, theta_k = dt * max{i <= k: V_i <= lam}."""
    below = np.where(path.values <= lam, np.arange(path.n + 1), -1)
    return np.maximum.accumulate(below) * path.dt


def compensator_bridge_pos(sample, lam, guard_time=GUARD_TIME, guard_state=GUARD_STATE):
    """
    Compensate V(B^{lam,br}), lam > 0: drift 1/V + dphi/phi at (s, V_s, theta_s).

    Returns:
        CompensatedPath: Single regime, no stop index
    """
    lam = require_positive(lam, 'lambda')
    path = sample.path
    left, in_time = _guards(path, guard_time)
    v = path.values[:-1]
    theta = theta_path(path, lam)[:-1]
    safe = np.where(v > 0, v, 1.0)
    with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
        ratio = dphi_scaled(lam, left, safe, theta) / phi_scaled(lam, left, safe, theta)
        drift = 1.0 / v + ratio
    mask = in_time & (v >= guard_state)
    return _compensate(path, drift, mask, np.ones(path.n, dtype=int), None)


def compensator_vb(sample, guard_time=GUARD_TIME, guard_state=GUARD_STATE):
    """
    Compensate V(B).

    Before T0 the drift is 1/V + (phidot_bar - V Jring)/(phi_bar + J), with
    phi_bar evaluated exactly on the path prefix; after T0 it is
    -(V - M)/(1 - s), M the running minimum.

    Args:
        sample (DecompSample): Path with latent 'T0' (None when V stays positive);
            without it T0 is measured on the path

    Returns:
        CompensatedPath: stop_index is the grid index of T0 or None
    """
    path = sample.path
    dt = path.dt
    left, in_time = _guards(path, guard_time)
    v = path.values
    if 'T0' in sample.latent:
        t0 = sample.latent['T0']
        stop = None if t0 is None else int(math.ceil(t0 / dt - 1e-9))
    else:
        stop = first_hit(path, 0.0)
    first = np.arange(path.n) < (path.n + 1 if stop is None else stop)
    drift = np.zeros(path.n)
    mask = np.zeros(path.n, dtype=bool)

    idx, val = [], []
    running_min = np.minimum.accumulate(v)
    for k in range(path.n):
        while val and val[-1] >= v[k]:
            idx.pop()
            val.pop()
        idx.append(k)
        val.append(v[k])
        if not in_time[k]:
            continue
        s = left[k]
        if first[k]:
            if v[k] < guard_state:
                continue
            phi_value, phi_slope = _phi_bar_from_stack(np.asarray(idx), np.asarray(val), dt, s)
            j, jring = j_vb_closed(s, v[k])
            drift[k] = 1.0 / v[k] + (phi_slope - v[k] * jring) / (phi_value + j)
        else:
            drift[k] = -(v[k] - running_min[k]) / (1.0 - s)
        mask[k] = True
    return _compensate(path, drift, mask, np.where(first, 1, 2), stop)


def residual_reports(paths, name, qv_band=QV_BAND, seed=None, max_ks=20000):
    """
    Gaussian-increment checks of a batch of compensated paths.

    Args:
        paths (list): CompensatedPath objects on a common grid
        name (str): Report name prefix
        qv_band (tuple): Accepted range of the pooled QV / elapsed-time ratio
        seed (int): Seed recorded in the reports
        max_ks (int): Cap on the increments fed to the KS test (evenly subsampled)

    Returns:
        list: [QV band check, aggregated mean z-test, KS of standardized increments]
    """
    increments = np.concatenate([p.increments() for p in paths])
    return increment_reports(increments, paths[0].original.dt, name, qv_band, seed, max_ks)


def increment_reports(increments, dt, name, qv_band=QV_BAND, seed=None, max_ks=20000):
    """Same checks as residual_reports on pooled residual increments of step dt."""
    increments = np.asarray(increments, dtype=float)
    elapsed = increments.size * dt
    if elapsed <= 0:
        raise InvalidArgumentError(f"{name}: no residual increments inside the guard bands")
    qv = float(np.sum(increments ** 2) / elapsed)
    standardized = increments / math.sqrt(dt)
    if standardized.size > max_ks:
        standardized = standardized[np.linspace(0, standardized.size - 1, max_ks).astype(int)]
    return [
        band_check(f'{name} qv ratio', qv, qv_band[0], qv_band[1], increments.size, seed),
        increment_ztest(float(np.sum(increments)), elapsed, increments.size, f'{name} mean increment', seed=seed),
        ks_one_sample(standardized, stats.norm.cdf, f'{name} increment ks', seed=seed),
    ]
