"""
Simple walks, the discrete Vervaat and quantile transforms, and exhaustive-enumeration oracles.
"""

import itertools
import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from config import MAX_ENUMERATION_N, MAX_QV_ENUMERATION_N
from stat_tests import TestReport, tolerance_check
from utils import InvalidArgumentError, ResourceLimitError, require_negative, require_parity


@dataclass(frozen=True)
class Walk:
    """A lattice path of +1/-1 increments started at 0."""

    increments: tuple

    def __post_init__(self):
        steps = tuple(int(step) for step in self.increments)
        if not steps:
            raise InvalidArgumentError("a walk needs at least one step")
        if any(abs(step) != 1 for step in steps):
            raise InvalidArgumentError(f"walk increments must be +1 or -1, got {steps}")
        object.__setattr__(self, 'increments', steps)

    @classmethod
    def from_positions(cls, positions):
        positions = list(positions)
        if positions[0] != 0:
            raise InvalidArgumentError("walk positions must start at 0")
        return cls(tuple(b - a for a, b in zip(positions, positions[1:])))

    @property
    def n(self):
        return len(self.increments)

    @property
    def positions(self):
        return (0,) + tuple(itertools.accumulate(self.increments))

    @property
    def endpoint(self):
        return sum(self.increments)

    def first_hit(self, level):
        """First index j >= 1 with w(j) = level, or None."""
        for j, value in enumerate(self.positions[1:], start=1):
            if value == level:
                return j
        return None


@dataclass(frozen=True)
class ExactPmf:
    """Probability mass function with exact rational masses."""

    support: tuple
    masses: tuple

    def __post_init__(self):
        if len(self.support) != len(self.masses):
            raise InvalidArgumentError("support and masses must have the same length")
        if list(self.support) != sorted(self.support):
            raise InvalidArgumentError("support must be sorted")
        if any(mass < 0 for mass in self.masses):
            raise InvalidArgumentError("masses must be non-negative")

    @property
    def total(self):
        return sum(self.masses, Fraction(0))

    def as_dict(self):
        return dict(zip(self.support, self.masses))

    def cdf(self):
        """Cumulative masses as floats, aligned with the support."""
        return np.cumsum([float(mass) for mass in self.masses])

    def rows(self):
        """Rows (l, numerator, denominator) for CSV export."""
        return [(l, mass.numerator, mass.denominator) for l, mass in zip(self.support, self.masses)]


def _walk_from_code(code, n):
    # bit j of the counter is step j+1
    return Walk(tuple(1 if (code >> j) & 1 else -1 for j in range(n)))


def enumerate_walks(n):
    """
    All 2^n walks of length n in counter order.

    Args:
        n (int): Walk length

    Returns:
        list: Walks, lowest counter value first
    """
    if n < 1:
        raise InvalidArgumentError(f"walk length must be >= 1, got {n}")
    if n > MAX_ENUMERATION_N:
        raise ResourceLimitError(f"enumeration guarded at n <= {MAX_ENUMERATION_N}, got {n}")
    return [_walk_from_code(code, n) for code in range(2 ** n)]


def enumerate_bridges(n, a):
    """
    All walks of length n ending at a, in counter order.

    Args:
        n (int): Walk length
        a (int): Endpoint with |a| <= n and the parity of n

    Returns:
        list: C(n, (n+|a|)/2) distinct walks
    """
    require_parity(n, a)
    if n > MAX_ENUMERATION_N:
        raise ResourceLimitError(f"enumeration guarded at n <= {MAX_ENUMERATION_N}, got {n}")
    ups = (n + a) // 2
    codes = sorted(sum(1 << j for j in chosen) for chosen in itertools.combinations(range(n), ups))
    return [_walk_from_code(code, n) for code in codes]


def vervaat_walk(w):
    """
    Discrete Vervaat transform.

    Rotates the walk to start at its first global minimum index tau and
    re-anchors it at 0, adding w(n) after the wraparound.

    Args:
        w (Walk): Input walk

    Returns:
        tuple: (V(w), K(w) = n - tau)
    """
    positions = w.positions
    n = w.n
    tau = positions.index(min(positions))
    rotated = []
    for i in range(n + 1):
        if i <= n - tau:
            rotated.append(positions[tau + i] - positions[tau])
        else:
            rotated.append(positions[tau + i - n] + positions[n] - positions[tau])
    return Walk.from_positions(rotated), n - tau


def quantile_walk(w):
    """
    Discrete quantile transform.

    Increments are reordered by the level they start from, ties broken by
    time (a stable sort on (w(j-1), j)).

    Args:
        w (Walk): Input walk

    Returns:
        Walk: Q(w)
    """
    positions = w.positions
    order = sorted(range(1, w.n + 1), key=lambda j: (positions[j - 1], j))
    return Walk(tuple(w.increments[j - 1] for j in order))


def count_first_passage(l):
    """
    Number of walks of length l whose first visit to -1 is at time l.

    Args:
        l (int): Odd positive length

    Returns:
        int: C(l, (l+1)/2) / l
    """
    if l < 1 or l % 2 == 0:
        raise InvalidArgumentError(f"first passage length must be odd and positive, got {l}")
    return math.comb(l, (l + 1) // 2) // l


def brute_count_first_passage(l):
    """Count first passage walks to -1 of length l by enumeration."""
    if l < 1:
        raise InvalidArgumentError(f"length must be positive, got {l}")
    return sum(1 for w in enumerate_walks(l) if w.first_hit(-1) == l)


def _first_passage_paths(m, depth):
    """Walks of length m started at 0 whose first visit to -depth is at time m."""
    if depth == 0:
        return 1 if m == 0 else 0
    if m < depth or (m - depth) % 2:
        return 0
    # ballot count: (depth / m) C(m, (m + depth) / 2)
    return depth * math.comb(m, (m + depth) // 2) // m


def z_pmf(n, a):
    """
    Exact law of the first index at which V(w) hits -1, for w uniform among bridges to a.

    A bridge output splits at Z = l into a first passage bridge to -1 of
    length l (counted l times, once per preimage) and a first passage path
    from -1 to a of length n - l.

    Args:
        n (int): Walk length
        a (int): Negative endpoint with the parity of n

    Returns:
        ExactPmf: Masses over odd l
    """
    require_parity(n, a)
    if a >= 0:
        raise InvalidArgumentError(f"a must be negative, got {a}")
    total = math.comb(n, (n + abs(a)) // 2)
    support, masses = [], []
    for l in range(1, n + 1, 2):
        ways = l * count_first_passage(l) * _first_passage_paths(n - l, abs(a) - 1)
        if ways:
            support.append(l)
            masses.append(Fraction(ways, total))
    return ExactPmf(tuple(support), tuple(masses))


def empirical_z_pmf(n, a):
    """Law of Z over exhaustive enumeration of bridges to a."""
    bridges = enumerate_bridges(n, a)
    counts = Counter(vervaat_walk(w)[0].first_hit(-1) for w in bridges)
    support = tuple(sorted(counts))
    return ExactPmf(support, tuple(Fraction(counts[l], len(bridges)) for l in support))


def in_target_set(v, k, a):
    """
    Membership in the image set of (V, K) for bridges to a < 0.

    The path is nonnegative up to k, stays above a before n, ends at a, and
    k is smaller than the first hitting time of -1.
    """
    positions = v.positions
    n = v.n
    if positions[n] != a or not 0 <= k <= n:
        return False
    if any(value < 0 for value in positions[:k + 1]):
        return False
    if any(value <= a for value in positions[:n]):
        return False
    z = v.first_hit(-1)
    return z is not None and k < z


def _enumeration_guard(n):
    if n > MAX_ENUMERATION_N:
        raise ResourceLimitError(f"enumeration guarded at n <= {MAX_ENUMERATION_N}, got {n}")


def verify_bijection(n, a):
    """
    Check that w -> (V(w), K(w)) is a bijection from bridges to a onto the target set.

    Args:
        n (int): Walk length (<= 16)
        a (int): Negative endpoint

    Returns:
        TestReport: Pass with no counterexample
    """
    _enumeration_guard(n)
    require_parity(n, a)
    if a >= 0:
        raise InvalidArgumentError(f"a must be negative, got {a}")
    bridges = enumerate_bridges(n, a)
    images = {}
    problem = ''
    for w in bridges:
        v, k = vervaat_walk(w)
        key = (v.increments, k)
        if key in images:
            problem = f'collision: {images[key].increments} and {w.increments}'
            break
        if not in_target_set(v, k, a):
            problem = f'image outside target set: {w.increments} -> ({v.increments}, {k})'
            break
        images[key] = w
    if not problem:
        target_size = 0
        for candidate in bridges:
            z = candidate.first_hit(-1)
            if in_target_set(candidate, 0, a):
                target_size += z
        if target_size != len(images):
            problem = f'image size {len(images)} != target size {target_size}'
    return TestReport(f'bijection n={n} a={a}', len(bridges), 0.0 if not problem else 1.0, None,
                      0.0, not problem, None, problem)


def verify_helper_uniform(n, a):
    """
    Check that K over the preimages of each output is exactly {0, ..., Z-1}.

    Args:
        n (int): Walk length (<= 16)
        a (int): Negative endpoint

    Returns:
        TestReport: Pass when every fibre is uniform on {0, ..., Z-1}
    """
    _enumeration_guard(n)
    require_parity(n, a)
    if a >= 0:
        raise InvalidArgumentError(f"a must be negative, got {a}")
    fibres = defaultdict(list)
    for w in enumerate_bridges(n, a):
        v, k = vervaat_walk(w)
        fibres[v].append(k)
    problem = ''
    for v, ks in fibres.items():
        z = v.first_hit(-1)
        if sorted(ks) != list(range(z)):
            problem = f'output {v.positions} has helper values {sorted(ks)}, Z={z}'
            break
    return TestReport(f'helper uniform n={n} a={a}', len(fibres), 0.0 if not problem else 1.0,
                      None, 0.0, not problem, None, problem)


def verify_q_equals_v(n):
    """
    Compare the multisets {Q(w)} and {V(w)} over all walks of length n,
    overall and within each endpoint class.

    Args:
        n (int): Walk length (<= 14)

    Returns:
        TestReport: Pass when all multisets agree
    """
    if n > MAX_QV_ENUMERATION_N:
        raise ResourceLimitError(f"Q/V enumeration guarded at n <= {MAX_QV_ENUMERATION_N}, got {n}")
    by_endpoint_q = defaultdict(Counter)
    by_endpoint_v = defaultdict(Counter)
    for w in enumerate_walks(n):
        by_endpoint_q[w.endpoint][quantile_walk(w).increments] += 1
        by_endpoint_v[w.endpoint][vervaat_walk(w)[0].increments] += 1
    overall_q = sum(by_endpoint_q.values(), Counter())
    overall_v = sum(by_endpoint_v.values(), Counter())
    mismatched = sorted(a for a in by_endpoint_q if by_endpoint_q[a] != by_endpoint_v[a])
    unconditional = overall_q == overall_v
    notes = (f"unconditional {'equal' if unconditional else 'differ'}; "
             f"endpoint classes differing: {mismatched or 'none'}")
    passed = unconditional and not mismatched
    return TestReport(f'Q equals V n={n}', 2 ** n, float(len(mismatched)), None, 0.0, passed,
                      None, notes)


def verify_z_pmf(n, a):
    """Exact comparison of z_pmf with the enumerated pmf."""
    exact = z_pmf(n, a)
    empirical = empirical_z_pmf(n, a)
    equal = exact == empirical and exact.total == 1
    gap = max((abs(float(exact.as_dict().get(l, 0) - empirical.as_dict().get(l, 0)))
               for l in set(exact.support) | set(empirical.support)), default=0.0)
    return TestReport(f'z_pmf n={n} a={a}', len(exact.support), gap, None, 0.0, equal, None,
                      'formula vs exhaustive enumeration')


def sample_bridge_walk(n, a, rng):
    """
    Uniform lattice bridge of length n ending at a.

    Args:
        n (int): Walk length
        a (int): Endpoint with the parity of n
        rng (np.random.Generator): Source of randomness

    Returns:
        Walk: Bridge with its up-steps placed uniformly at random
    """
    require_parity(n, a)
    steps = np.full(n, -1, dtype=int)
    steps[: (n + a) // 2] = 1
    rng.shuffle(steps)
    return Walk(tuple(steps))


def nearest_endpoint(n, lam):
    """Integer with the parity of n nearest to lam * sqrt(n), kept negative."""
    target = lam * math.sqrt(n)
    low = math.floor(target)
    candidates = [c for c in (low - 1, low, low + 1, low + 2) if (n - c) % 2 == 0 and c < 0]
    return min(candidates, key=lambda c: (abs(c - target), c))


def discrete_limit_distance(n, lam):
    """
    Sup distance between the rescaled law of Z for bridges to a_n ~ lam sqrt(n)
    and its continuum limit.

    The discrete cdf at odd l is matched with the continuum cdf at (l+1)/n,
    the midpoint to the next support point, using the effective endpoint
    a_n / sqrt(n).

    Args:
        n (int): Walk length
        lam (float): Negative continuum endpoint

    Returns:
        tuple: (distance, a_n)
    """
    from laws import fz

    require_negative(lam)
    a_n = nearest_endpoint(n, lam)
    pmf = z_pmf(n, a_n)
    law = fz(a_n / math.sqrt(n))
    support = np.asarray(pmf.support, dtype=float)
    discrete = pmf.cdf()
    continuum = law.cdf(np.minimum((support + 1.0) / n, 1.0))
    return float(np.max(np.abs(discrete - continuum))), a_n


def discrete_limit_report(n, lam, tol):
    distance, a_n = discrete_limit_distance(n, lam)
    report = tolerance_check(f'discrete limit n={n} lambda={lam}', distance, 0.0, tol)
    report.notes += f'; a_n={a_n}'
    return report
