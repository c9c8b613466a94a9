"""
Seeded samplers for Brownian motion, bridges, Bessel(3) processes and bridges, excursions,
first passage bridges and meanders.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from config import JUNCTION_TOL
from utils import InvalidArgumentError, require_finite, require_negative, require_positive

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class GridPath:
    """A path sampled at the N+1 times i*T/N of [0, T]."""

    duration: float
    values: np.ndarray

    def __post_init__(self):
        values = np.array(require_finite(self.values, 'path values'), dtype=float)
        if values.ndim != 1 or values.size < 2:
            raise InvalidArgumentError("a grid path needs at least two values (N >= 1)")
        require_positive(self.duration, 'duration')
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'duration', float(self.duration))

    @property
    def n(self):
        return self.values.size - 1

    @property
    def dt(self):
        return self.duration / self.n

    @property
    def times(self):
        return np.linspace(0.0, self.duration, self.n + 1)

    def index_of(self, t):
        """Nearest grid index to time t."""
        return int(min(self.n, max(0, round(t / self.dt))))

    def at(self, t):
        return float(self.values[self.index_of(t)])

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        return (isinstance(other, GridPath) and self.duration == other.duration
                and np.array_equal(self.values, other.values))


@dataclass(frozen=True)
class RngStream:
    """Counter-based random stream keyed by (seed, replica index)."""

    seed: int
    index: int = 0

    def generator(self):
        key = (int(self.index) << 64) | (int(self.seed) & 0xFFFFFFFFFFFFFFFF)
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, index):
        return RngStream(self.seed, index)


def as_generator(rng):
    """Accept a RngStream, a numpy Generator or an integer seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng)).generator()
    raise InvalidArgumentError(f"unsupported random source {type(rng).__name__}")


def _check_grid(N):
    if int(N) != N or N < 1:
        raise InvalidArgumentError(f"N must be a positive integer, got {N}")
    return int(N)


def sample_bm(N, T, rng):
    """
    Brownian motion on [0, T] at N+1 grid points.

    Args:
        N (int): Number of steps
        T (float): Duration
        rng: RngStream or numpy Generator

    Returns:
        GridPath: values[0] = 0
    """
    N = _check_grid(N)
    T = require_positive(T, 'T')
    gen = as_generator(rng)
    values = np.empty(N + 1)
    values[0] = 0.0
    np.cumsum(gen.standard_normal(N) * np.sqrt(T / N), out=values[1:])
    return GridPath(T, values)


def sample_bridge(N, T, y, rng):
    """
    Brownian bridge from 0 to y on [0, T], built as B_t - (t/T)(B_T - y).

    Args:
        N (int): Number of steps
        T (float): Duration
        y (float): Endpoint
        rng: RngStream or numpy Generator

    Returns:
        GridPath: values[0] = 0 and values[N] = y exactly
    """
    bm = sample_bm(N, T, rng).values
    ratio = np.arange(N + 1) / N
    values = bm - ratio * (bm[-1] - y)
    values[0] = 0.0
    values[-1] = y
    return GridPath(T, values)


def sample_bessel3_bridge_at(times, a, b, rng):
    """
    Bessel(3) bridge from a to b observed at arbitrary increasing times.

    The bridge is the norm of a 3-D Brownian bridge from (a,0,0) to (b,0,0).

    Args:
        times (array-like): Increasing times starting at 0; the last one is the length
        a (float): Start, a >= 0
        b (float): End, b >= 0
        rng: RngStream or numpy Generator

    Returns:
        np.ndarray: Values at the given times, endpoints exact
    """
    if a < 0 or b < 0:
        raise InvalidArgumentError(f"Bessel bridge endpoints must be >= 0, got a={a}, b={b}")
    times = np.asarray(times, dtype=float)
    length = times[-1]
    if times[0] != 0.0 or length <= 0 or np.any(np.diff(times) <= 0):
        raise InvalidArgumentError("bridge times must increase strictly from 0")
    gen = as_generator(rng)
    steps = gen.standard_normal((times.size - 1, 3)) * np.sqrt(np.diff(times))[:, None]
    walk = np.zeros((times.size, 3))
    np.cumsum(steps, axis=0, out=walk[1:])
    shift = walk[-1].copy()
    shift[0] -= b - a
    bridge = walk - (times / length)[:, None] * shift
    bridge[:, 0] += a
    values = np.linalg.norm(bridge, axis=1)
    values[0] = a
    values[-1] = b
    zeros = np.count_nonzero(values[1:-1] == 0.0)
    if zeros:
        log.warning("Bessel bridge sample has %d interior zeros; clamped to +0", zeros)
    return values


def sample_bessel3_bridge(N, T, a, b, rng):
    """
    Bessel(3) bridge from a to b of length T.

    Args:
        N (int): Number of steps
        T (float): Duration
        a (float): Start, a >= 0
        b (float): End, b >= 0
        rng: RngStream or numpy Generator

    Returns:
        GridPath: Endpoints pinned exactly
    """
    N = _check_grid(N)
    T = require_positive(T, 'T')
    return GridPath(T, sample_bessel3_bridge_at(np.linspace(0.0, T, N + 1), a, b, rng))


def sample_excursion(N, l, rng):
    """Brownian excursion of length l (Bessel(3) bridge from 0 to 0)."""
    return sample_bessel3_bridge(N, l, 0.0, 0.0, rng)


def sample_fp_bridge(N, l, lam, rng):
    """
    First passage bridge to lam < 0 of length l: lam plus a Bessel(3) bridge from |lam| to 0.

    Args:
        N (int): Number of steps
        l (float): Duration
        lam (float): Negative level
        rng: RngStream or numpy Generator

    Returns:
        GridPath: values[0] = 0, values[N] = lam
    """
    lam = require_negative(lam)
    bridge = sample_bessel3_bridge(N, l, abs(lam), 0.0, rng)
    values = bridge.values + lam
    values[0] = 0.0
    values[-1] = lam
    return GridPath(l, values)


def sample_meander(N, l, rng):
    """
    Brownian meander of length l: Bessel(3) bridge from 0 to sqrt(l) times a Rayleigh endpoint.

    Args:
        N (int): Number of steps
        l (float): Duration
        rng: RngStream or numpy Generator

    Returns:
        GridPath: values[0] = 0
    """
    gen = as_generator(rng)
    end = np.sqrt(l) * gen.rayleigh(1.0)
    return sample_bessel3_bridge(N, l, 0.0, end, gen)


def sample_meander_at(times, rng):
    """Meander at arbitrary increasing times starting at 0."""
    gen = as_generator(rng)
    end = np.sqrt(times[-1]) * gen.rayleigh(1.0)
    return sample_bessel3_bridge_at(times, 0.0, end, gen)


def sample_bessel3(N, T, rng):
    """Bessel(3) process from 0: the norm of a 3-D Brownian motion."""
    N = _check_grid(N)
    T = require_positive(T, 'T')
    gen = as_generator(rng)
    walk = np.zeros((N + 1, 3))
    np.cumsum(gen.standard_normal((N, 3)) * np.sqrt(T / N), axis=0, out=walk[1:])
    return GridPath(T, np.linalg.norm(walk, axis=1))


def concat(p1, p2, n_total=None):
    """
    Concatenate two paths, offsetting the second to start where the first ends.

    Both halves are resampled onto a common uniform grid of the combined
    duration by linear interpolation.

    Args:
        p1 (GridPath): First piece
        p2 (GridPath): Second piece, starting at p1's endpoint
        n_total (int): Number of steps of the result (default p1.n + p2.n)

    Returns:
        GridPath: Duration p1.duration + p2.duration
    """
    if abs(p1.values[-1] - p2.values[0]) > JUNCTION_TOL:
        raise InvalidArgumentError(
            f"junction mismatch: {p1.values[-1]!r} vs {p2.values[0]!r}"
        )
    n_total = _check_grid(n_total if n_total is not None else p1.n + p2.n)
    duration = p1.duration + p2.duration
    knots = np.concatenate([p1.times, p1.duration + p2.times[1:]])
    second = p2.values[1:] - p2.values[0] + p1.values[-1]
    levels = np.concatenate([p1.values, second])
    grid = np.linspace(0.0, duration, n_total + 1)
    values = np.interp(grid, knots, levels)
    values[0] = p1.values[0]
    values[-1] = levels[-1]
    return GridPath(duration, values)


def run_replicas(fn, replicas, seed, workers=1, start=0):
    """
    Evaluate fn on the streams RngStream(seed, i) for i in [start, start + replicas).

    Args:
        fn (callable): Picklable function of one RngStream
        replicas (int): Number of replicas
        seed (int): Master seed
        workers (int): Process count; 1 runs inline
        start (int): First replica index

    Returns:
        list: Results ordered by replica index
    """
    streams = [RngStream(seed, i) for i in range(start, start + replicas)]
    if workers <= 1 or replicas < 2 * workers:
        return [fn(stream) for stream in streams]
    chunk = max(1, replicas // (8 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, streams, chunksize=chunk))
