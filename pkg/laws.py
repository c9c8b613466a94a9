"""
Closed-form laws, kernels, moments and quadrature identities for Vervaat bridges.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import special, stats

from config import QUAD_LIMIT, QUAD_REL_TOL, IDENTITY_REL_TOL
from stat_tests import TestReport, tolerance_check
from utils import (
    InvalidArgumentError,
    quad,
    require_in_range,
    require_negative,
    require_positive,
)

SQRT_2PI = math.sqrt(2.0 * math.pi)
SQRT_HALF_PI = math.sqrt(0.5 * math.pi)


@dataclass(frozen=True)
class Quadrature:
    """
    Adaptive quadrature settings with an optional change of variables.

    Substitutions:
        'none': integrate as given
        'odds': t = u / (scale + u), maps (0,1) onto (0,inf); with
            scale = lambda^2 it removes the (1-t)^(-3/2) endpoint behaviour of
            first-return densities
        'tan': x = tan(u), maps (0,inf) onto (0,pi/2)
    """

    rel_tol: float = QUAD_REL_TOL
    limit: int = QUAD_LIMIT
    substitution: str = 'none'
    scale: float = 1.0
    abs_tol: float = 1e-13

    def integrate(self, func, a, b, points=None):
        """
        Integrate a scalar function over [a, b].

        Args:
            func (callable): Integrand in the original variable
            a (float): Lower limit
            b (float): Upper limit (may be np.inf)
            points (list): Breakpoints in the original variable

        Returns:
            float: Value of the integral
        """
        if a == b:
            return 0.0
        if self.substitution == 'none':
            pts = None if points is None or np.isinf(b) else list(points)
            value, _ = quad(func, a, b, self.rel_tol, self.abs_tol, self.limit, points=pts)
            return value
        if self.substitution == 'odds':
            c = self.scale

            def to_u(t):
                return np.inf if t >= 1.0 else c * t / (1.0 - t)

            def integrand(u):
                t = u / (c + u)
                return func(t) * c / (c + u) ** 2

            value, _ = quad(integrand, to_u(a), to_u(b), self.rel_tol, self.abs_tol, self.limit)
            return value
        if self.substitution == 'tan':
            lo = math.atan(a)
            hi = math.pi / 2 if np.isinf(b) else math.atan(b)

            def integrand(u):
                return func(math.tan(u)) / math.cos(u) ** 2 if u < math.pi / 2 else 0.0

            pts = None if points is None else sorted(math.atan(p) for p in points if a < p < b)
            value, _ = quad(integrand, lo, hi, self.rel_tol, self.abs_tol, self.limit, points=pts)
            return value
        raise InvalidArgumentError(f"unknown substitution '{self.substitution}'")


DEFAULT_QUADRATURE = Quadrature()


@dataclass
class ClosedFormLaw:
    """A named scalar law: pdf, cdf (closed form or by quadrature) and an optional exact sampler."""

    name: str
    support: tuple
    pdf: Callable
    cdf_fn: Optional[Callable] = None
    sampler: Optional[Callable] = None
    quadrature: Quadrature = field(default_factory=Quadrature)

    def cdf(self, x):
        """Cumulative distribution function (vectorized)."""
        if self.cdf_fn is not None:
            return self.cdf_fn(x)
        lo, hi = self.support
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty_like(xs)
        for i, value in enumerate(xs):
            if value <= lo:
                out[i] = 0.0
            elif value >= hi:
                out[i] = 1.0
            else:
                out[i] = min(1.0, max(0.0, self.integrate(self.pdf, lo, value)))
        return out if np.ndim(x) else float(out[0])

    def sample(self, rng, size):
        """Draw samples with the exact sampler."""
        if self.sampler is None:
            raise InvalidArgumentError(f"law '{self.name}' has no exact sampler")
        return self.sampler(rng, size)

    def integrate(self, func, a, b):
        """Integrate func over [a, b] with the law's quadrature settings."""
        return self.quadrature.integrate(lambda v: float(func(v)), a, b)

    def total_mass(self):
        lo, hi = self.support
        return self.integrate(self.pdf, lo, hi)

    def moment(self, k=1):
        lo, hi = self.support
        return self.integrate(lambda v: v ** k * self.pdf(v), lo, hi)

    def mean(self):
        return self.moment(1)


def _unit_interval_pdf(func):
    # evaluate func only strictly inside (0,1); zero elsewhere
    def pdf(t):
        ts = np.asarray(t, dtype=float)
        inside = (ts > 0.0) & (ts < 1.0)
        safe = np.where(inside, ts, 0.5)
        with np.errstate(over='ignore', under='ignore', divide='ignore', invalid='ignore'):
            values = np.where(inside, func(safe), 0.0)
        return values if np.ndim(t) else float(values)
    return pdf


def fz_pdf(lam, t):
    """Density of the first return to 0 of the Vervaat bridge ending at lam < 0."""
    a = abs(lam)
    return _unit_interval_pdf(
        lambda s: a / np.sqrt(2.0 * np.pi * s * (1.0 - s) ** 3) * np.exp(-lam * lam * s / (2.0 * (1.0 - s)))
    )(t)


def fz_cdf(lam, t):
    """P(Z <= t) = erf(|lam| sqrt(t / (2(1-t))))."""
    clipped = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    with np.errstate(divide='ignore'):
        ratio = clipped / (2.0 * (1.0 - clipped))
    values = special.erf(abs(lam) * np.sqrt(ratio))
    return values if np.ndim(t) else float(values)


def fz(lam):
    """
    Law of Z, the first return to 0 of V(B^{lam,br}) for lam < 0.

    The sampler uses Z = G^2 / (lam^2 + G^2) with G standard normal.

    Args:
        lam (float): Negative endpoint

    Returns:
        ClosedFormLaw: pdf, closed-form cdf and exact sampler on (0,1)
    """
    lam = require_negative(lam)

    def sampler(rng, size):
        g2 = rng.standard_normal(size) ** 2
        return g2 / (lam * lam + g2)

    return ClosedFormLaw(
        name=f'fz({lam:g})',
        support=(0.0, 1.0),
        pdf=lambda t: fz_pdf(lam, t),
        cdf_fn=lambda t: fz_cdf(lam, t),
        sampler=sampler,
        quadrature=Quadrature(substitution='odds', scale=lam * lam),
    )


def fzhat(lam):
    """
    Law of the last exit from lam of V(B^{lam,br}) for lam > 0.

    Args:
        lam (float): Positive endpoint

    Returns:
        ClosedFormLaw: pdf f_{Z^{-lam}}(1 - t)
    """
    lam = require_positive(lam, 'lambda')
    base = fz(-lam)

    def cdf(t):
        ts = np.asarray(t, dtype=float)
        values = 1.0 - base.cdf(1.0 - np.clip(ts, 0.0, 1.0))
        return values if np.ndim(t) else float(values)

    return ClosedFormLaw(
        name=f'fzhat({lam:g})',
        support=(0.0, 1.0),
        pdf=lambda t: base.pdf(1.0 - np.asarray(t, dtype=float)) if np.ndim(t) else base.pdf(1.0 - t),
        cdf_fn=cdf,
        sampler=lambda rng, size: 1.0 - base.sample(rng, size),
    )


def mean_z(lam):
    """
    Closed form of E Z for lam < 0: 1 - |lam| e^{lam^2/2} int_{|lam|}^inf e^{-t^2/2} dt.

    Args:
        lam (float): Negative endpoint

    Returns:
        float: Mean of the first return time
    """
    lam = require_negative(lam)
    a = abs(lam)
    # e^{x^2} erfc(x) = erfcx(x) keeps large |lam| finite
    return 1.0 - a * SQRT_HALF_PI * special.erfcx(a / math.sqrt(2.0))


def stay_above_prob(lam):
    """Probability that V(B^{lam,br}) stays above the chord t -> lam t."""
    return mean_z(lam)


def stay_above_chord_prob(x, lam):
    """
    Probability that a first passage bridge to lam stays above the line from x to lam.

    Args:
        x (float): Starting height of the line, lam < x < 0
        lam (float): Negative endpoint

    Returns:
        float: |x| / |lam|
    """
    lam = require_negative(lam)
    require_in_range(x, lam, 0.0, 'x', closed_low=False, closed_high=False)
    return abs(x) / abs(lam)


def slope_cdf(lam, a):
    """
    Distribution function of the last slope of the convex minorant of V(B^{lam,br}).

    Args:
        lam (float): Negative endpoint
        a (float): Slope in [lam, 0]

    Returns:
        float: P(s_l <= a), with an atom mean_z(lam) at lam
    """
    lam = require_negative(lam)
    a = require_in_range(a, lam, 0.0, 'a')
    return 1.0 + a * SQRT_HALF_PI * special.erfcx(abs(lam) / math.sqrt(2.0))


def fa(lam):
    """
    Law of A = 1 - argmin time of B^{lam,br}, uniform on [0, Z] given Z.

    pdf(a) = int_a^1 f_Z(t)/t dt by quadrature; the cdf follows from
    P(A <= a) = P(Z <= a) + a pdf(a).

    Args:
        lam (float): Negative endpoint

    Returns:
        ClosedFormLaw: Law on (0,1)
    """
    base = fz(lam)
    inner = Quadrature(substitution='odds', scale=lam * lam)

    def pdf_scalar(a):
        if a >= 1.0 or a <= 0.0:
            return 0.0
        return inner.integrate(lambda t: base.pdf(t) / t, a, 1.0)

    def pdf(a):
        if np.ndim(a):
            return np.array([pdf_scalar(float(v)) for v in np.ravel(a)]).reshape(np.shape(a))
        return pdf_scalar(float(a))

    def cdf_scalar(a):
        if a <= 0.0:
            return 0.0
        if a >= 1.0:
            return 1.0
        return min(1.0, base.cdf(a) + a * pdf_scalar(a))

    def cdf(a):
        if np.ndim(a):
            return np.array([cdf_scalar(float(v)) for v in np.ravel(a)]).reshape(np.shape(a))
        return cdf_scalar(float(a))

    def sampler(rng, size):
        return base.sample(rng, size) * rng.uniform(size=size)

    return ClosedFormLaw(f'fa({lam:g})', (0.0, 1.0), pdf, cdf, sampler)


def fztilde(lam):
    """
    Size-biased first return law, pdf t f_Z(t) / E Z.

    The sampler draws Z from fz and accepts with probability Z.

    Args:
        lam (float): Negative endpoint

    Returns:
        ClosedFormLaw: Law on (0,1)
    """
    base = fz(lam)
    norm = mean_z(lam)

    def pdf(t):
        ts = np.asarray(t, dtype=float)
        values = ts * base.pdf(ts) / norm
        return values if np.ndim(t) else float(values)

    def sampler(rng, size):
        out = np.empty(0)
        while out.size < size:
            batch = base.sample(rng, max(2 * size, 64))
            keep = batch[rng.uniform(size=batch.size) < batch]
            out = np.concatenate([out, keep])
        return out[:size]

    return ClosedFormLaw(f'fztilde({lam:g})', (0.0, 1.0), pdf, None, sampler,
                         Quadrature(substitution='odds', scale=lam * lam))


def heat_kernel(t, x, y):
    return np.exp(-(np.asarray(y) - x) ** 2 / (2.0 * t)) / math.sqrt(2.0 * math.pi * t)


def first_hit_density(t, level):
    """Density g_t(level) of the first hitting time of level by Brownian motion."""
    level = np.abs(np.asarray(level, dtype=float))
    t = np.asarray(t, dtype=float)
    with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
        values = level / np.sqrt(2.0 * np.pi * t ** 3) * np.exp(-level ** 2 / (2.0 * t))
    return np.where(t > 0, values, 0.0)


def bessel_kernel(t, x, y):
    """
    Kernel q~_t(x, y); q~_t(x, y) y^2 is the Bessel(3) transition density.

    Includes the limits q~_t(0, y) = (2/y) g_t(y) and q~_t(0, 0) = 2 / sqrt(2 pi t^3).
    """
    x = float(x)
    y = float(y)
    if x < 0 or y < 0:
        raise InvalidArgumentError(f"Bessel kernel needs x, y >= 0, got x={x}, y={y}")
    if x == 0 and y == 0:
        return 2.0 / math.sqrt(2.0 * math.pi * t ** 3)
    if x == 0 or y == 0:
        z = max(x, y)
        return 2.0 / math.sqrt(2.0 * math.pi * t ** 3) * math.exp(-z * z / (2.0 * t))
    # e^{-(x-y)^2/2t} - e^{-(x+y)^2/2t} = -e^{-(x-y)^2/2t} expm1(-2xy/t)
    return -math.exp(-(x - y) ** 2 / (2.0 * t)) * math.expm1(-2.0 * x * y / t) / (x * y * math.sqrt(2.0 * math.pi * t))


def kernels(kind, t, x, y):
    """
    Evaluate a transition kernel.

    Args:
        kind (str): 'heat' for p_t(x,y), 'fp' for g_t(y - x), 'bessel' for q~_t(x,y)
        t (float): Positive time
        x (float): Start
        y (float): End

    Returns:
        float: Kernel value
    """
    t = require_positive(t, 't')
    if kind == 'heat':
        return float(heat_kernel(t, x, y))
    if kind == 'fp':
        return float(first_hit_density(t, y - x))
    if kind == 'bessel':
        return bessel_kernel(t, x, y)
    raise InvalidArgumentError(f"unknown kernel '{kind}'")


def first_passage(lam):
    """Law of the first hitting time of lam != 0, density g_t(lam) on (0, inf)."""
    level = abs(float(lam))
    require_positive(level, '|lambda|')

    def cdf(t):
        ts = np.asarray(t, dtype=float)
        with np.errstate(divide='ignore'):
            values = np.where(ts > 0, special.erfc(level / np.sqrt(2.0 * np.maximum(ts, 1e-300))), 0.0)
        return values if np.ndim(t) else float(values)

    return ClosedFormLaw(
        name=f'first-passage({lam:g})',
        support=(0.0, np.inf),
        pdf=lambda t: first_hit_density(t, level) if np.ndim(t) else float(first_hit_density(t, level)),
        cdf_fn=cdf,
        sampler=lambda rng, size: level ** 2 / rng.standard_normal(size) ** 2,
    )


def arcsine():
    """Arcsine law on (0,1); sampler sin^2(pi U / 2)."""
    return ClosedFormLaw(
        name='arcsine',
        support=(0.0, 1.0),
        pdf=_unit_interval_pdf(lambda t: 1.0 / (np.pi * np.sqrt(t * (1.0 - t)))),
        cdf_fn=lambda t: 2.0 / np.pi * np.arcsin(np.sqrt(np.clip(t, 0.0, 1.0))),
        sampler=lambda rng, size: np.sin(0.5 * np.pi * rng.uniform(size=size)) ** 2,
    )


def rayleigh(scale=1.0):
    """Rayleigh law x/s^2 exp(-x^2/(2 s^2)) on (0, inf)."""
    scale = require_positive(scale, 'scale')
    law = stats.rayleigh(scale=scale)
    return ClosedFormLaw(
        name=f'rayleigh({scale:g})',
        support=(0.0, np.inf),
        pdf=law.pdf,
        cdf_fn=law.cdf,
        sampler=lambda rng, size: rng.rayleigh(scale, size),
    )


def bessel_marginal(t):
    """Law of R_t for the Bessel(3) process from 0: density q~_t(0,y) y^2 (a scaled chi-3)."""
    t = require_positive(t, 't')
    law = stats.chi(3, scale=math.sqrt(t))

    def pdf(y):
        ys = np.asarray(y, dtype=float)
        values = np.where(ys > 0, 2.0 / math.sqrt(2.0 * math.pi * t ** 3) * np.exp(-ys ** 2 / (2.0 * t)) * ys ** 2, 0.0)
        return values if np.ndim(y) else float(values)

    return ClosedFormLaw(
        name=f'bessel3({t:g})',
        support=(0.0, np.inf),
        pdf=pdf,
        cdf_fn=law.cdf,
        sampler=lambda rng, size: math.sqrt(t) * np.linalg.norm(rng.standard_normal((size, 3)), axis=1),
    )


def meander_marginal(t):
    """
    Law of the Brownian meander at time t in (0, 1].

    pdf(x) = t^{-3/2} x exp(-x^2/(2t)) erf(x / sqrt(2(1-t))); Rayleigh at t = 1.

    Args:
        t (float): Time in (0, 1]

    Returns:
        ClosedFormLaw: Law on (0, inf), cdf by quadrature
    """
    if not 0.0 < t <= 1.0:
        raise InvalidArgumentError(f"meander time must lie in (0,1], got {t}")

    def pdf(x):
        xs = np.asarray(x, dtype=float)
        if t == 1.0:
            tail = np.ones_like(xs)
        else:
            tail = special.erf(xs / math.sqrt(2.0 * (1.0 - t)))
        values = np.where(xs > 0, t ** -1.5 * xs * np.exp(-xs ** 2 / (2.0 * t)) * tail, 0.0)
        return values if np.ndim(x) else float(values)

    return ClosedFormLaw(f'meander({t:g})', (0.0, np.inf), pdf)


def meander_moments(t):
    """
    Closed-form meander moments.

    Args:
        t (float): Time in [0, 1]

    Returns:
        tuple: (E B^me_t, E (B^me_t)^2, E B^me_t B^me_1)
    """
    t = require_in_range(t, 0.0, 1.0, 't')
    root = math.sqrt(t)
    mean = math.sqrt(2.0 / math.pi) * (math.sqrt(t * (1.0 - t)) + math.asin(root))
    return mean, 3.0 * t - t * t, 2.0 * root


@dataclass(frozen=True)
class VbMoments:
    """Moments of V(B)_t, whole and split on the argmin time A = 1 - argmin."""

    mean: float
    second: float
    mean_a_gt: float
    mean_a_le: float
    second_a_gt: float
    second_a_le: float


def vb_moments(t):
    """
    First and second moments of V(B)_t with their splits on {A > t} and {A <= t}.

    Args:
        t (float): Time in [0, 1]

    Returns:
        VbMoments: All six closed forms
    """
    t = require_in_range(t, 0.0, 1.0, 't')
    c = math.sqrt(2.0 / math.pi)
    root, co_root = math.sqrt(t), math.sqrt(1.0 - t)
    arc = math.asin(root)
    cross = math.sqrt(t * (1.0 - t))
    return VbMoments(
        mean=math.sqrt(8.0 / math.pi) * (root + co_root - 1.0),
        second=3.0 * t + (4.0 - 8.0 * t) / math.pi * arc - 4.0 / math.pi * cross,
        mean_a_gt=c * (co_root + 2.0 * root - t - 1.0),
        mean_a_le=c * (co_root + t - 1.0),
        second_a_gt=3.0 * t - 6.0 * t / math.pi * arc - 2.0 / math.pi * t * cross,
        second_a_le=(4.0 - 2.0 * t) / math.pi * (arc - cross),
    )


def end_given_t0(t0):
    """
    Law of V(B)_1 given the first zero time t0: negative half-Rayleigh with scale sqrt(1 - t0).

    Args:
        t0 (float): First zero time in (0,1)

    Returns:
        ClosedFormLaw: Law on (-inf, 0)
    """
    t0 = require_in_range(t0, 0.0, 1.0, 't0', closed_low=False, closed_high=False)
    s = 1.0 - t0

    def pdf(lam):
        ls = np.asarray(lam, dtype=float)
        values = np.where(ls < 0, np.abs(ls) / s * np.exp(-ls ** 2 / (2.0 * s)), 0.0)
        return values if np.ndim(lam) else float(values)

    def cdf(lam):
        ls = np.asarray(lam, dtype=float)
        values = np.where(ls < 0, np.exp(-ls ** 2 / (2.0 * s)), 1.0)
        return values if np.ndim(lam) else float(values)

    return ClosedFormLaw(
        name=f'end-given-t0({t0:g})',
        support=(-np.inf, 0.0),
        pdf=pdf,
        cdf_fn=cdf,
        sampler=lambda rng, size: -rng.rayleigh(math.sqrt(s), size),
    )


def last_exit_joint_pdf(lam, t, y, s):
    """
    Joint density of (R_t, theta_t^lam) on {R_t > lam} for the Bessel(3) process.

    q~_t(0,y) g_{t-s}(y-lam) g_s(lam) / g_t(y) y^2, which simplifies to
    2 y g_{t-s}(y - lam) g_s(lam).
    """
    if not (y > lam and 0.0 < s < t):
        return 0.0
    return 2.0 * y * float(first_hit_density(t - s, y - lam)) * float(first_hit_density(s, lam))


def last_exit_bin_masses(lam, t, y_edges, s_edges):
    """
    Probability of each (y, s) cell under the last-exit joint law.

    Args:
        lam (float): Positive level
        t (float): Time
        y_edges (array-like): Level bin edges above lam (last may be inf)
        s_edges (array-like): Time bin edges in [0, t]

    Returns:
        np.ndarray: Masses, shape (len(y_edges)-1, len(s_edges)-1)
    """
    inner = Quadrature(rel_tol=1e-7)
    masses = np.zeros((len(y_edges) - 1, len(s_edges) - 1))
    for j in range(len(s_edges) - 1):
        s_lo, s_hi = s_edges[j], s_edges[j + 1]

        def level_density(y, s_lo=s_lo, s_hi=s_hi):
            return inner.integrate(lambda s: last_exit_joint_pdf(lam, t, y, s), s_lo, s_hi)

        for i in range(len(y_edges) - 1):
            masses[i, j] = inner.integrate(level_density, max(y_edges[i], lam), y_edges[i + 1])
    return masses


def nonmarkov_densities(t0, x0, lam):
    """
    Normalized conditional densities f1, f2 of the first zero after t0 of V(B^{lam,br}).

    f1 conditions on a zero at t0/2 and the value x0 at t0, f2 on staying
    positive on (0, t0) and the value x0 at t0. Both are normalized by
    quadrature.

    Returns:
        tuple: (f1, f2) vectorized callables vanishing for t <= t0
    """
    t0 = require_in_range(t0, 0.0, 1.0, 't0', closed_low=False, closed_high=False)
    x0 = require_positive(x0, 'x0')
    lam = require_negative(lam)
    fz_law = fz(lam)

    def raw1(t):
        if not t0 < t < 1.0:
            return 0.0
        return float(first_hit_density(t - t0, x0) * first_hit_density(1.0 - t, lam))

    def raw2(t):
        if not t0 < t < 1.0:
            return 0.0
        return (bessel_kernel(t0, 0.0, x0) * bessel_kernel(t - t0, x0, 0.0) / bessel_kernel(t, 0.0, 0.0)
                * x0 * x0 * fz_law.pdf(t))

    quadrature = Quadrature(rel_tol=1e-10)
    c1 = quadrature.integrate(raw1, t0, 1.0)
    c2 = quadrature.integrate(raw2, t0, 1.0)

    def vectorize(raw, c):
        def density(t):
            if np.ndim(t):
                return np.array([raw(float(v)) / c for v in np.ravel(t)]).reshape(np.shape(t))
            return raw(float(t)) / c
        return density

    return vectorize(raw1, c1), vectorize(raw2, c2)


def nonmarkov_ratio(t, t0, x0, lam):
    """
    Ratio f2(t)/f1(t) of the normalized conditional densities; proportional to t.

    Args:
        t (float): Time in (t0, 1)
        t0 (float): Conditioning time
        x0 (float): Value at t0
        lam (float): Negative endpoint

    Returns:
        float: f2(t) / f1(t)
    """
    if not 0.0 < t0 < t < 1.0:
        raise InvalidArgumentError(f"need 0 < t0 < t < 1, got t0={t0}, t={t}")
    f1, f2 = nonmarkov_densities(t0, x0, lam)
    return f2(t) / f1(t)


def _gamma_identity(t, a):
    """int_t^1 ds / sqrt((1-s)(s-t)) e^{-a/(s-t)} against sqrt(pi) Gamma(1/2, a/(1-t))."""
    # algebraic weight (s-t)^{-1/2} (1-s)^{-1/2} handled by QAWS
    lhs, _ = quad(lambda s: math.exp(-a / (s - t)) if s > t else (1.0 if a == 0 else 0.0),
                  t, 1.0, rel_tol=1e-11, abs_tol=1e-14, weight='alg', wvar=(-0.5, -0.5))
    rhs = math.pi * special.erfc(math.sqrt(a / (1.0 - t)))
    return lhs, rhs


def _erf_square_moment(a):
    lhs, _ = quad(lambda x: x * x * math.exp(-a * x * x) * math.erf(x), 0.0, np.inf, rel_tol=1e-11)
    rhs = (math.sqrt(a) + (a + 1.0) * math.asin(math.sqrt(1.0 / (a + 1.0)))) / (
        2.0 * math.sqrt(math.pi) * a ** 1.5 * (a + 1.0))
    return lhs, rhs


def _erf_cube_moment(a):
    lhs, _ = quad(lambda x: x ** 3 * math.exp(-a * x * x) * math.erf(x), 0.0, np.inf, rel_tol=1e-11)
    rhs = (2.0 + 3.0 * a) / (4.0 * a * a * (a + 1.0) ** 1.5)
    return lhs, rhs


def identity_checks(tol=IDENTITY_REL_TOL):
    """
    Quadrature checks of the scalar integral identities.

    Covers the arcsine-weighted Gamma identity on a (t, a) grid and the
    Gaussian-erf moments of orders 2 and 3 for a in {0.5, 1, 2}.

    Returns:
        list: TestReport per identity instance
    """
    reports = []
    for t in (0.0, 0.25, 0.5, 0.75):
        for a in (0.0, 0.1, 0.5, 1.0, 2.0):
            lhs, rhs = _gamma_identity(t, a)
            reports.append(tolerance_check(f'gamma identity t={t} a={a}', lhs, rhs, tol, relative=True))
    for a in (0.5, 1.0, 2.0):
        lhs, rhs = _erf_square_moment(a)
        reports.append(tolerance_check(f'x^2 erf moment a={a}', lhs, rhs, tol, relative=True))
        lhs, rhs = _erf_cube_moment(a)
        reports.append(tolerance_check(f'x^3 erf moment a={a}', lhs, rhs, tol, relative=True))
    return reports


def tabulate(law, points):
    """
    Evaluate a law's pdf and cdf on a grid inside its support.

    Laws on (0,1) are tabulated on the smootherstep image of an even grid,
    which clusters points cubically at both ends so trapezoid sums over the
    table stay accurate for pdfs with inverse square root endpoint blow-up.
    Other supports use an even grid, truncated to [-6, 8].

    Args:
        law (ClosedFormLaw): Law to tabulate
        points (int): Number of grid points

    Returns:
        tuple: (grid, pdf values, cdf values)
    """
    if points < 2:
        raise InvalidArgumentError(f"need at least 2 points, got {points}")
    lo, hi = law.support
    if (lo, hi) == (0.0, 1.0):
        u = np.linspace(0.0, 1.0, points)
        grid = u ** 3 * (10.0 - 15.0 * u + 6.0 * u * u)
        grid[0], grid[-1] = 0.0, 1.0
        return grid, np.asarray(law.pdf(grid), dtype=float), np.asarray(law.cdf(grid), dtype=float)
    if np.isinf(lo):
        lo = -6.0
    if np.isinf(hi):
        hi = 8.0
    grid = np.linspace(lo, hi, points)
    return grid, np.asarray(law.pdf(grid), dtype=float), np.asarray(law.cdf(grid), dtype=float)


def named_law(name, lam=None, t=None):
    """
    Dispatch a `laws --name` value to its law.

    Args:
        name (str): One of LAW_NAMES
        lam (float): Endpoint for the lambda-indexed laws
        t (float): Time for meander, end-given-t0 and bessel

    Returns:
        ClosedFormLaw: The requested law
    """
    if name in ('fz', 'fa', 'fztilde'):
        lam = -1.0 if lam is None else lam
        return {'fz': fz, 'fa': fa, 'fztilde': fztilde}[name](lam)
    if name == 'fzhat':
        return fzhat(1.0 if lam is None else lam)
    if name == 'first-passage':
        return first_passage(-1.0 if lam is None else lam)
    if name == 'meander':
        return meander_marginal(0.5 if t is None else t)
    if name == 'end-given-t0':
        return end_given_t0(0.5 if t is None else t)
    if name == 'bessel':
        return bessel_marginal(0.5 if t is None else t)
    if name == 'arcsine':
        return arcsine()
    if name == 'rayleigh':
        return rayleigh()
    raise InvalidArgumentError(f"Unknown law '{name}'")
