"""
Path transforms on grid paths: Vervaat transform, cyclic shift, first hits and the
occupation quantile transform.
"""

import math
from dataclasses import dataclass

import numpy as np

from config import LOCAL_TIME_EXPONENT
from lattice import Walk
from sampler import GridPath
from utils import InvalidArgumentError, require_positive


@dataclass(frozen=True)
class TransformResult:
    """Vervaat-transformed path with the argmin index it was rotated at."""

    path: GridPath
    argmin_index: int
    split_time: float


def argmin_first(p):
    """Smallest grid index attaining the minimum."""
    return int(np.argmin(p.values))


def walk_to_path(w):
    """Embed a lattice walk as a grid path of duration n with one step per unit time."""
    return GridPath(float(w.n), np.asarray(w.positions, dtype=float))


def path_to_walk(p):
    """Inverse of walk_to_path for integer-valued unit-step paths."""
    return Walk.from_positions([int(round(v)) for v in p.values])


def vervaat(p):
    """
    Vervaat transform: rotate the path to start at its first minimum.

    V(f)(t) = f(tau + t) - f(tau) before the wraparound and
    f(tau + t - T) + f(T) - f(tau) after it.

    Args:
        p (GridPath): Path with values[0] = 0

    Returns:
        TransformResult: Transformed path, tau and A = T - tau * dt
    """
    v = p.values
    if v[0] != 0.0:
        raise InvalidArgumentError(f"Vervaat transform needs a path started at 0, got {v[0]!r}")
    n = p.n
    tau = argmin_first(p)
    out = np.empty(n + 1)
    out[: n - tau + 1] = v[tau:] - v[tau]
    if tau > 0:
        # f(k) - f(tau) > 0 for k < tau, so the sum stays >= f(T)
        out[n - tau + 1:] = (v[1: tau + 1] - v[tau]) + v[n]
    out[n] = v[n]
    return TransformResult(GridPath(p.duration, out), tau, p.duration - tau * p.dt)


def shift(p, u):
    """
    Cyclic shift at time u with level re-anchoring.

    theta(f, u)(t) = f(u + t) - f(u) for u + t <= T and
    f(u + t - T) + f(T) - f(u) after the wraparound.

    Args:
        p (GridPath): Path to shift
        u (float): Shift time in [0, T], snapped to the nearest grid index

    Returns:
        GridPath: Shifted path
    """
    if not -1e-12 <= u <= p.duration + 1e-12:
        raise InvalidArgumentError(f"shift time must lie in [0, {p.duration}], got {u}")
    v = p.values
    n = p.n
    j = p.index_of(u)
    if j == 0 or j == n:
        return GridPath(p.duration, v - v[0])
    out = np.empty(n + 1)
    out[: n - j + 1] = v[j:] - v[j]
    out[n - j + 1:] = (v[1: j + 1] - v[j]) + v[n]
    return GridPath(p.duration, out)


def first_hit(p, level, from_index=0):
    """
    First grid index i > from_index with values[i] <= level.

    Args:
        p (GridPath): Path
        level (float): Level
        from_index (int): Search starts after this index

    Returns:
        int or None: Index of the first hit
    """
    if from_index > p.n:
        raise InvalidArgumentError(f"from_index must be <= N={p.n}, got {from_index}")
    hits = np.flatnonzero(p.values[from_index + 1:] <= level)
    return int(hits[0]) + from_index + 1 if hits.size else None


def last_exit_index(p, level):
    """Last grid index i < N with values[i] <= level, or None."""
    hits = np.flatnonzero(p.values[:-1] <= level)
    return int(hits[-1]) if hits.size else None


def occupation_quantile(p, t):
    """
    Level a(t) below which the path spends a fraction t of its time.

    Uses the ceil(tN)+1-th order statistic of the sampled values; times are
    read relative to the duration.

    Args:
        p (GridPath): Path
        t (float): Time in [0, T)

    Returns:
        float: Quantile level
    """
    fraction = t / p.duration
    if not 0.0 <= fraction < 1.0:
        raise InvalidArgumentError(f"t must lie in [0, {p.duration}), got {t}")
    k = min(p.n, math.ceil(fraction * p.n))
    return float(np.sort(p.values)[k])


def local_time_estimate(p, a, eps):
    """
    Occupation-density estimate of the local time at level a.

    Each of the N cells [t_i, t_{i+1}) is represented by its left value, so the
    occupation measure is a left Riemann sum and values[N] carries no mass.

    Args:
        p (GridPath): Path
        a (float): Level
        eps (float): Half window

    Returns:
        float: (1/(2 eps)) * (fraction of grid cells with |value - a| < eps) * T
    """
    eps = require_positive(eps, 'eps')
    cells = p.values[:-1]
    fraction = np.count_nonzero(np.abs(cells - a) < eps) / cells.size
    return fraction * p.duration / (2.0 * eps)


def default_local_time_window(n):
    return float(n) ** LOCAL_TIME_EXPONENT


def quantile_transform_bm(p, eps=None):
    """
    Continuum quantile transform Q_t = L^{a(t)}/2 + a(t)^+ - (a(t) - B_1)^+ on the grid.

    Args:
        p (GridPath): Path of duration 1 started at 0
        eps (float): Local time window (default N^(-1/3))

    Returns:
        GridPath: Q(p) at the grid times; Q at t = 1 uses a(1) = max
    """
    if p.values[0] != 0.0:
        raise InvalidArgumentError("quantile transform needs a path started at 0")
    if abs(p.duration - 1.0) > 1e-12:
        raise InvalidArgumentError(f"quantile transform needs duration 1, got {p.duration}")
    eps = default_local_time_window(p.n) if eps is None else require_positive(eps, 'eps')
    # a(i/N) is the (i+1)-th order statistic; occupation uses the N left-endpoint cells
    levels = np.sort(p.values)
    cells = np.sort(p.values[:-1])
    inside = (np.searchsorted(cells, levels + eps, side='left')
              - np.searchsorted(cells, levels - eps, side='right'))
    local_times = inside / cells.size * p.duration / (2.0 * eps)
    end = p.values[-1]
    values = 0.5 * local_times + np.maximum(levels, 0.0) - np.maximum(levels - end, 0.0)
    return GridPath(p.duration, values)
