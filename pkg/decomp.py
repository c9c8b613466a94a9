"""
Path decompositions of Vervaat bridges and of V(B), and the direct samplers they match in law.

Each builder samples its pieces exactly at the uniform grid times they
cover: the split time is inserted as an extra knot of both pieces, so no
interpolation is involved and the endpoint is pinned exactly. The
'concat' assembly instead samples each piece on its own proportional grid
and joins them with sampler.concat.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from config import MIN_ACCEPTANCE_RATE, SAMPLE_LAWS
from laws import arcsine, fz
from sampler import (
    GridPath,
    as_generator,
    concat,
    sample_bessel3_bridge,
    sample_bessel3_bridge_at,
    sample_bm,
    sample_bridge,
    sample_meander_at,
)
from transform import first_hit, last_exit_index, vervaat
from utils import InvalidArgumentError, ResourceLimitError, require_negative, require_nonzero, require_positive

log = logging.getLogger(__name__)


@dataclass
class DecompSample:
    """A sampled path with the latent split variables of its construction."""

    path: GridPath
    latent: dict = field(default_factory=dict)
    branch: str = ''
    counters: dict = field(default_factory=dict)

    def row(self):
        """Latent values and counters flattened for CSV output."""
        row = {key: (np.nan if value is None else value) for key, value in self.latent.items()}
        row.update(self.counters)
        return row


def _split_knots(times, split):
    """
    Knots of the two pieces around a split time.

    Returns:
        tuple: (knots of [0, split], knots of [0, 1 - split] measured from split,
                grid mask before split, grid mask after split)
    """
    before = times < split
    after = times > split
    first = np.append(times[before], split)
    second = np.insert(times[after] - split, 0, 0.0)
    return first, second, before, after


def _piece_steps(N, split):
    # proportional allocation, at least one step per piece
    n1 = int(min(N - 1, max(1, round(split * N))))
    return n1, N - n1


def _assemble(N, split, first_piece, second_piece, at_split):
    """
    Glue two pieces sampled at their split knots onto the uniform grid of [0,1].

    Args:
        N (int): Number of steps
        split (float): Split time in (0,1)
        first_piece (callable): knots -> values on [0, split]
        second_piece (callable): knots -> values on [0, 1 - split], already level-shifted
        at_split (float): Path value at the split time

    Returns:
        np.ndarray: N+1 values
    """
    times = np.linspace(0.0, 1.0, N + 1)
    first, second, before, after = _split_knots(times, split)
    values = np.empty(N + 1)
    values[before] = first_piece(first)[:-1]
    values[after] = second_piece(second)[1:]
    values[~(before | after)] = at_split
    return values


def _check_assembly(assembly):
    if assembly not in ('grid', 'concat'):
        raise InvalidArgumentError(f"assembly must be 'grid' or 'concat', got '{assembly}'")


def build_vervaat_bridge_neg(lam, N, rng, assembly='grid'):
    """
    V(B^{lam,br}) for lam < 0 as an excursion of length Z followed by a first
    passage bridge to lam of length 1 - Z.

    Args:
        lam (float): Negative endpoint
        N (int): Number of steps
        rng: RngStream, Generator or seed
        assembly (str): 'grid' (exact knots) or 'concat'

    Returns:
        DecompSample: latent {'Z'}
    """
    lam = require_negative(lam)
    _check_assembly(assembly)
    gen = as_generator(rng)
    z = float(fz(lam).sample(gen, 1)[0])
    if assembly == 'concat':
        n1, n2 = _piece_steps(N, z)
        excursion = sample_bessel3_bridge(n1, z, 0.0, 0.0, gen)
        bridge = sample_bessel3_bridge(n2, 1.0 - z, abs(lam), 0.0, gen)
        path = concat(excursion, GridPath(bridge.duration, bridge.values + lam), N)
    else:
        values = _assemble(
            N, z,
            lambda knots: sample_bessel3_bridge_at(knots, 0.0, 0.0, gen),
            lambda knots: lam + sample_bessel3_bridge_at(knots, abs(lam), 0.0, gen),
            0.0,
        )
        values[0] = 0.0
        values[-1] = lam
        path = GridPath(1.0, values)
    return DecompSample(path, {'Z': z}, 'neg')


def build_vervaat_bridge_pos(lam, N, rng, assembly='grid'):
    """
    V(B^{lam,br}) for lam > 0 as a Bessel(3) bridge 0 -> lam of length Zhat
    followed by lam plus an excursion of length 1 - Zhat.

    Zhat = 1 - Z with Z drawn from fz(-lam), the duality of first return and
    last exit.

    Returns:
        DecompSample: latent {'Zhat'}
    """
    lam = require_positive(lam, 'lambda')
    _check_assembly(assembly)
    gen = as_generator(rng)
    zhat = 1.0 - float(fz(-lam).sample(gen, 1)[0])
    if assembly == 'concat':
        n1, n2 = _piece_steps(N, zhat)
        head = sample_bessel3_bridge(n1, zhat, 0.0, lam, gen)
        excursion = sample_bessel3_bridge(n2, 1.0 - zhat, 0.0, 0.0, gen)
        path = concat(head, GridPath(excursion.duration, excursion.values + lam), N)
    else:
        values = _assemble(
            N, zhat,
            lambda knots: sample_bessel3_bridge_at(knots, 0.0, lam, gen),
            lambda knots: lam + sample_bessel3_bridge_at(knots, 0.0, 0.0, gen),
            lam,
        )
        values[0] = 0.0
        values[-1] = lam
        path = GridPath(1.0, values)
    return DecompSample(path, {'Zhat': zhat}, 'pos')


def _refined(N, refine):
    if int(refine) != refine or refine < 1:
        raise InvalidArgumentError(f"refine must be a positive integer, got {refine}")
    return N * int(refine)


def _coarsen(path, refine):
    if refine == 1:
        return path
    return GridPath(path.duration, path.values[::refine])


def direct_vervaat_bridge(lam, N, rng, refine=1):
    """
    Vervaat transform of a Brownian bridge to lam.

    Latent variables measured on the sampling grid: A = 1 - argmin time; for
    lam < 0 the first return Z (first index i > 0 with V <= 0); for lam > 0
    the last exit Zhat (last index i < N with V <= lam).

    Args:
        lam (float): Nonzero endpoint
        N (int): Number of steps of the returned path
        rng: RngStream, Generator or seed
        refine (int): Sample and transform on a grid refine times finer,
            then keep every refine-th point; shrinks the discrete-minimum bias

    Returns:
        DecompSample: latent {'A', 'Z'} or {'A', 'Zhat'}
    """
    lam = require_nonzero(lam)
    result = vervaat(sample_bridge(_refined(N, refine), 1.0, lam, rng))
    fine = result.path
    latent = {'A': result.split_time}
    if lam < 0:
        latent['Z'] = first_hit(fine, 0.0) * fine.dt
    else:
        latent['Zhat'] = last_exit_index(fine, lam) * fine.dt
    return DecompSample(_coarsen(fine, refine), latent, 'direct')


def build_vb(N, rng):
    """
    V(B) from two independent meanders split at an arcsine time A.

    On [0, A] the path is the meander m1 of length A (the post-minimum piece
    of B). On [A, 1] it is B_1 + m2(1 - t), where m2 of length 1 - A is the
    pre-minimum piece read backwards from the minimum and
    B_1 = m1(A) - m2(1 - A).

    Returns:
        DecompSample: latent {'A', 'm1_end', 'm2_end'}
    """
    gen = as_generator(rng)
    a = float(arcsine().sample(gen, 1)[0])
    times = np.linspace(0.0, 1.0, N + 1)
    before = times < a
    after = times > a
    first = sample_meander_at(np.append(times[before], a), gen)
    # m2 runs backwards in time: its knots are 1 - t for t > A, then 1 - A
    reversed_knots = np.append(1.0 - times[after][::-1], 1.0 - a)
    second = sample_meander_at(reversed_knots, gen)
    m1_end, m2_end = float(first[-1]), float(second[-1])
    end = m1_end - m2_end
    values = np.empty(N + 1)
    values[before] = first[:-1]
    values[after] = end + second[:-1][::-1]
    values[~(before | after)] = m1_end
    values[0] = 0.0
    values[-1] = end
    return DecompSample(GridPath(1.0, values), {'A': a, 'm1_end': m1_end, 'm2_end': m2_end}, 'vb')


def direct_vb(N, rng, refine=1):
    """
    Vervaat transform of Brownian motion.

    Latent T0 is the first sampling-grid time i*dt, i > 0, with V <= 0, or
    None; it exists exactly when the endpoint is <= 0.

    Args:
        N (int): Number of steps of the returned path
        rng: RngStream, Generator or seed
        refine (int): Sampling grid refinement, as in direct_vervaat_bridge

    Returns:
        DecompSample: latent {'A', 'T0'}
    """
    result = vervaat(sample_bm(_refined(N, refine), 1.0, rng))
    fine = result.path
    hit = first_hit(fine, 0.0)
    latent = {'A': result.split_time, 'T0': None if hit is None else hit * fine.dt}
    return DecompSample(_coarsen(fine, refine), latent, 'vb-direct')


def above_chord(path, lam):
    """True when values[i] > lam * t_i at every interior grid time."""
    return bool(np.all(path.values[1:-1] > lam * path.times[1:-1]))


def conditioned_above_line(lam, N, rng, max_attempts=None):
    """
    Rejection sampler of V(B^{lam,br}) conditioned to stay above its chord.

    Args:
        lam (float): Negative endpoint
        N (int): Number of steps
        rng: RngStream, Generator or seed
        max_attempts (int): Attempt budget (default 1 / MIN_ACCEPTANCE_RATE)

    Returns:
        DecompSample: latent {'Ztilde'}, counters {'attempts', 'acceptance_rate'}

    Raises:
        ResourceLimitError: When no path is accepted within the budget
    """
    lam = require_negative(lam)
    gen = as_generator(rng)
    budget = int(max_attempts or round(1.0 / MIN_ACCEPTANCE_RATE))
    for attempt in range(1, budget + 1):
        sample = build_vervaat_bridge_neg(lam, N, gen)
        if above_chord(sample.path, lam):
            counters = {'attempts': attempt, 'acceptance_rate': 1.0 / attempt}
            return DecompSample(sample.path, {'Ztilde': sample.latent['Z']}, 'cond', counters)
    raise ResourceLimitError(
        f"acceptance rate below {1.0 / budget:g}: no path above the chord in {budget} attempts "
        f"(lambda={lam}, N={N})"
    )


def sample_law(law, lam, N, rng):
    """
    Dispatch a `sample --law` name to its sampler.

    Args:
        law (str): One of SAMPLE_LAWS
        lam (float): Endpoint (ignored by the V(B) samplers)
        N (int): Number of steps
        rng: RngStream, Generator or seed

    Returns:
        DecompSample: Sampled path with latent variables
    """
    if law == 'vbridge-neg':
        return build_vervaat_bridge_neg(lam, N, rng)
    if law == 'vbridge-pos':
        return build_vervaat_bridge_pos(lam, N, rng)
    if law == 'vbridge-direct':
        return direct_vervaat_bridge(lam, N, rng)
    if law == 'vbridge-cond':
        return conditioned_above_line(lam, N, rng)
    if law == 'vb':
        return build_vb(N, rng)
    if law == 'vb-direct':
        return direct_vb(N, rng)
    raise InvalidArgumentError(f"Unknown law '{law}'. Choose from: {list(SAMPLE_LAWS)}")
