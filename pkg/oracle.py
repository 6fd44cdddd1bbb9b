"""
🧮 Exact Oracle
Small-N ground truth by forward dynamic programming and path enumeration.

Rational profiles are evaluated in exact Fractions, power-tail profiles in
floats. Everything the Monte Carlo acceptance checks compare against at
small N comes from here.
"""

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterator, List, Tuple
import logging

import numpy as np

from profiles import Probability, ProfileSpec

logger = logging.getLogger("anisowalk.oracle")

Site = Tuple[int, int]

MAX_SITE_N = 14
MAX_LOCAL_TIME_N = 10
MAX_RANGE_N = 10
FLOAT_MASS_TOLERANCE = 1e-12


class OracleLimitError(ValueError):
    """N beyond what exact evaluation handles"""


def _check_n(N: int, cap: int, what: str):
    if N < 0:
        raise OracleLimitError(f"{what}: N must be nonnegative, got {N}")
    if N > cap:
        raise OracleLimitError(f"{what}: N={N} exceeds the exact-evaluation cap {cap}")


def _zero(profile: ProfileSpec) -> Probability:
    return Fraction(0) if profile.is_exact else 0.0


def _one(profile: ProfileSpec) -> Probability:
    return Fraction(1) if profile.is_exact else 1.0


class _MoveTable:
    """Positive-probability moves from any site, memoised per row"""

    def __init__(self, profile: ProfileSpec):
        self.profile = profile
        self.half = Fraction(1, 2) if profile.is_exact else 0.5
        self._rows: Dict[int, Tuple[Tuple[int, int, Probability], ...]] = {}

    def row(self, j: int):
        moves = self._rows.get(j)
        if moves is None:
            p = self.profile.p(j)
            q = self.half - p
            moves = tuple((dk, dj, w) for dk, dj, w in
                          ((0, 1, p), (0, -1, p), (1, 0, q), (-1, 0, q)) if w > 0)
            self._rows[j] = moves
        return moves

    def moves(self, site: Site) -> Iterator[Tuple[Site, Probability]]:
        k, j = site
        for dk, dj, w in self.row(j):
            yield (k + dk, j + dj), w


@dataclass
class ExactDistribution:
    """Law of C(N) over sites"""
    N: int
    masses: Dict[Site, Probability]
    exact: bool

    @property
    def total_mass(self) -> Probability:
        return sum(self.masses.values(), Fraction(0) if self.exact else 0.0)

    def mass(self, site) -> Probability:
        return self.masses.get(tuple(site), Fraction(0) if self.exact else 0.0)

    def mass_is_one(self) -> bool:
        total = self.total_mass
        if self.exact:
            return total == 1
        return abs(total - 1.0) <= FLOAT_MASS_TOLERANCE

    def parity_violations(self) -> List[Site]:
        """Sites with positive mass whose k + j has the wrong parity or lie beyond the L1 ball"""
        return [s for s, m in self.masses.items()
                if m > 0 and ((s[0] + s[1] - self.N) % 2 != 0 or abs(s[0]) + abs(s[1]) > self.N)]

    def as_float_dict(self) -> Dict[Site, float]:
        return {s: float(m) for s, m in self.masses.items()}

    def to_dict(self) -> Dict:
        return {
            'N': self.N,
            'exact': self.exact,
            'total_mass': str(self.total_mass),
            'masses': [{'k': k, 'j': j, 'p': str(m), 'p_float': float(m)}
                       for (k, j), m in sorted(self.masses.items())],
        }


def exact_site_distribution(profile: ProfileSpec, N: int) -> ExactDistribution:
    """Forward DP of P(C(N) = site) from the origin"""
    _check_n(N, MAX_SITE_N, "exact_site_distribution")
    table = _MoveTable(profile)
    current: Dict[Site, Probability] = {(0, 0): _one(profile)}
    for _ in range(N):
        nxt: Dict[Site, Probability] = defaultdict(lambda: _zero(profile))
        for site, mass in current.items():
            for target, w in table.moves(site):
                nxt[target] += mass * w
        current = dict(nxt)
    return ExactDistribution(N, current, profile.is_exact)


def exact_origin_local_time_distribution(profile: ProfileSpec, N: int) -> Dict[int, Probability]:
    """Law of Xi((0,0),N): DP over (site, visits to the origin at times 1..N)"""
    _check_n(N, MAX_LOCAL_TIME_N, "exact_origin_local_time_distribution")
    table = _MoveTable(profile)
    current: Dict[Tuple[Site, int], Probability] = {((0, 0), 0): _one(profile)}
    for _ in range(N):
        nxt: Dict[Tuple[Site, int], Probability] = defaultdict(lambda: _zero(profile))
        for (site, visits), mass in current.items():
            for target, w in table.moves(site):
                nxt[(target, visits + (target == (0, 0)))] += mass * w
        current = dict(nxt)

    law: Dict[int, Probability] = defaultdict(lambda: _zero(profile))
    for (_, visits), mass in current.items():
        law[visits] += mass
    return dict(sorted(law.items()))


def exact_expected_range(profile: ProfileSpec, N: int) -> Probability:
    """E R(N) by enumerating every positive-probability path of length N"""
    _check_n(N, MAX_RANGE_N, "exact_expected_range")
    if N == 0:
        return _zero(profile)
    table = _MoveTable(profile)
    visited: Dict[Site, int] = defaultdict(int)
    total = [_zero(profile)]

    def extend(site: Site, prob: Probability, depth: int, distinct: int):
        if depth == N:
            total[0] += prob * distinct
            return
        for target, w in table.moves(site):
            fresh = visited[target] == 0
            visited[target] += 1
            extend(target, prob * w, depth + 1, distinct + fresh)
            visited[target] -= 1

    extend((0, 0), _one(profile), 0, 0)
    logger.debug(f"E R({N}) for {profile.label} = {total[0]}")
    return total[0]


def return_probability_series(profile: ProfileSpec, n_max: int) -> np.ndarray:
    """
    P(C(n) = (0,0)) for n = 0..n_max by float forward DP on a growing box

    Support after n steps lies in the L1 ball of radius n, so step n only
    touches the box of half-width n.
    """
    if n_max < 0:
        raise OracleLimitError(f"n_max must be nonnegative, got {n_max}")
    c = n_max + 1
    size = 2 * n_max + 3
    grid = np.zeros((size, size))
    grid[c, c] = 1.0
    rows = np.arange(size) - c
    pj = profile.p_array(rows)
    qj = 0.5 - pj

    out = np.zeros(n_max + 1)
    out[0] = 1.0
    for n in range(1, n_max + 1):
        lo, hi = c - n, c + n + 1
        src = grid[lo:hi, lo:hi]
        vert = src * pj[lo:hi]
        horiz = src * qj[lo:hi]
        new = np.zeros_like(src)
        new[:, 1:] += vert[:, :-1]
        new[:, :-1] += vert[:, 1:]
        new[1:, :] += horiz[:-1, :]
        new[:-1, :] += horiz[1:, :]
        grid[lo:hi, lo:hi] = new
        out[n] = grid[c, c]
    return out


def truncated_green(profile: ProfileSpec, n: int) -> float:
    """g(n) = sum_{m=0}^{n} P(C(m) = (0,0))"""
    return float(return_probability_series(profile, n).sum())


if __name__ == "__main__":
    comb = ProfileSpec.comb()
    print(f"comb N=2 P(origin) = {exact_site_distribution(comb, 2).mass((0, 0))}")
    print(f"comb N=2 local time law = {exact_origin_local_time_distribution(comb, 2)}")
    print(f"comb E R(3) = {exact_expected_range(comb, 3)}")
    series = return_probability_series(ProfileSpec.constant('1/4'), 400)
    print(f"simple walk P(C(400)=0) = {series[400]:.6e}")
