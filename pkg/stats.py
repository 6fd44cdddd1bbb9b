"""
📊 Statistics
Turns replica samples into pass/fail evidence: KS distance to a limit law,
chi-square against exact masses, mean with standard error and log-log slopes.
"""

from dataclasses import dataclass, field
from typing import Hashable, List, Mapping, NamedTuple, Optional, Sequence, Tuple
import logging

import numpy as np
from scipy.stats import chi2, kstest

from config_manager import get_config

logger = logging.getLogger("anisowalk.stats")

MIN_KS_SAMPLES = 10
MIN_FIT_POINTS = 4
DEFAULT_MIN_EXPECTED = 5.0
DEFAULT_CHI_SQUARE_LEVEL = 0.001


class SampleSizeError(ValueError):
    """Too few samples for the requested statistic"""


class ChiSquareInputError(ValueError):
    """Counts or masses unusable for a chi-square test"""


class FitInputError(ValueError):
    """Points unusable for a log-log fit"""


@dataclass
class SampleSet:
    """Replica observations plus where they came from"""
    values: np.ndarray
    seed: Optional[int] = None
    N: Optional[int] = None
    profile: str = ""
    _sorted: Optional[np.ndarray] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).ravel()

    @property
    def size(self) -> int:
        return int(self.values.shape[0])

    @property
    def sorted(self) -> np.ndarray:
        if self._sorted is None:
            self._sorted = np.sort(self.values)
        return self._sorted

    def quantile(self, q):
        return np.quantile(self.sorted, q)

    def median(self) -> float:
        return float(np.median(self.sorted))


def _as_sample_set(samples) -> SampleSet:
    return samples if isinstance(samples, SampleSet) else SampleSet(samples)


# ==================== Kolmogorov-Smirnov ====================

def ks_statistic(samples, law) -> float:
    """
    sup_x |F_n(x) - F(x)| evaluated at the sample points from both sides

    Args:
        samples: SampleSet or array of observations
        law: anything with a vectorised cdf(x)
    """
    sample_set = _as_sample_set(samples)
    n = sample_set.size
    if n == 0:
        raise SampleSizeError("KS distance of an empty sample set")
    if n < MIN_KS_SAMPLES:
        raise SampleSizeError(f"KS distance needs at least {MIN_KS_SAMPLES} samples, got {n}")

    result = kstest(sample_set.sorted, lambda x: np.asarray(law.cdf(x), dtype=np.float64),
                    method='asymp')
    return float(result.statistic)


def continuity_jitter(values, rng: np.random.Generator, centered: bool = False) -> np.ndarray:
    """
    Spread integer observations over unit cells: x + U(0,1), or x + U(-1/2, 1/2)

    Lattice-valued statistics compared with a continuous law otherwise show
    KS gaps of the size of their largest atom.
    """
    values = np.asarray(values, dtype=np.float64)
    noise = rng.random(values.shape)
    if centered:
        noise -= 0.5
    return values + noise


# ==================== Chi-square ====================

def chi_square_level() -> float:
    """Significance level for chi-square acceptance (stats.chi_square_level)"""
    return float(get_config().get('stats.chi_square_level', DEFAULT_CHI_SQUARE_LEVEL))


class ChiSquareResult(NamedTuple):
    statistic: float
    dof: int
    p_value: float
    bins: int

    def passes(self, level: Optional[float] = None) -> bool:
        return self.p_value > (chi_square_level() if level is None else level)


def _merge_bins(expected: List[Tuple[Hashable, float]], threshold: float) -> List[List[Hashable]]:
    """Largest bins stand alone; the small tail is merged until each group reaches threshold"""
    groups: List[List[Hashable]] = []
    pending: List[Hashable] = []
    pending_mass = 0.0
    for key, mass in expected:
        if not pending and mass >= threshold:
            groups.append([key])
            continue
        pending.append(key)
        pending_mass += mass
        if pending_mass >= threshold:
            groups.append(pending)
            pending, pending_mass = [], 0.0
    if pending:
        if not groups:
            groups.append(pending)
        else:
            groups[-1].extend(pending)
    return groups


def chi_square(observed: Mapping[Hashable, int], expected: Mapping[Hashable, float],
               n: Optional[int] = None, min_expected: Optional[float] = None) -> ChiSquareResult:
    """
    Pearson statistic of observed counts against n * expected masses

    Bins are ordered by expected mass; bins with n*P below min_expected are
    merged from the tail (threshold from stats.min_expected_count unless
    given). dof = merged bins - 1.
    """
    if min_expected is None:
        min_expected = float(get_config().get('stats.min_expected_count', DEFAULT_MIN_EXPECTED))
    counts = {key: int(c) for key, c in observed.items()}
    if any(c < 0 for c in counts.values()):
        raise ChiSquareInputError("observed counts must be nonnegative")
    if n is None:
        n = sum(counts.values())
    if n <= 0:
        raise ChiSquareInputError("chi-square needs at least one observation")

    masses = {key: float(m) for key, m in expected.items() if float(m) > 0}
    impossible = [key for key, c in counts.items() if c > 0 and key not in masses]
    if impossible:
        raise ChiSquareInputError(f"observations on zero-probability outcomes: {impossible[:5]}")

    ordered = sorted(((key, n * m) for key, m in masses.items()),
                     key=lambda item: (-item[1], repr(item[0])))
    groups = _merge_bins(ordered, min_expected)
    if len(groups) < 2:
        raise ChiSquareInputError("every outcome merged into a single bin")

    statistic = 0.0
    for group in groups:
        e = sum(n * masses[key] for key in group)
        o = sum(counts.get(key, 0) for key in group)
        statistic += (o - e) ** 2 / e
    dof = len(groups) - 1
    return ChiSquareResult(float(statistic), dof, float(chi2.sf(statistic, dof)), len(groups))


# ==================== Moments and fits ====================

def mean_ci(samples) -> Tuple[float, float]:
    """(mean, standard error) with the n-1 sample deviation"""
    values = np.asarray(samples.values if isinstance(samples, SampleSet) else samples,
                        dtype=np.float64).ravel()
    if values.shape[0] < 2:
        raise SampleSizeError(f"mean_ci needs at least 2 samples, got {values.shape[0]}")
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(values.shape[0]))


def interquartile_range(values) -> float:
    q75, q25 = np.percentile(np.asarray(values, dtype=np.float64), [75, 25])
    return float(q75 - q25)


def two_proportion_z(hits_a: int, n_a: int, hits_b: int, n_b: int) -> float:
    """Pooled two-proportion z-score of hits_a/n_a against hits_b/n_b"""
    if n_a <= 0 or n_b <= 0:
        raise SampleSizeError("both groups need at least one trial")
    pooled = (hits_a + hits_b) / (n_a + n_b)
    se = np.sqrt(pooled * (1.0 - pooled) * (1.0 / n_a + 1.0 / n_b))
    if se == 0:
        return 0.0
    return float((hits_a / n_a - hits_b / n_b) / se)


@dataclass
class FitReport:
    slope: float
    intercept: float
    residual: float
    log_n: List[float]
    log_statistic: List[float]

    def points(self) -> List[Tuple[float, float]]:
        return list(zip(self.log_n, self.log_statistic))


def loglog_slope(points: Sequence[Tuple[float, float]]) -> FitReport:
    """Least-squares line through (log N, log statistic)"""
    if len(points) < MIN_FIT_POINTS:
        raise FitInputError(f"need at least {MIN_FIT_POINTS} points, got {len(points)}")
    ns = np.array([p[0] for p in points], dtype=np.float64)
    values = np.array([p[1] for p in points], dtype=np.float64)
    if np.any(np.diff(ns) <= 0):
        raise FitInputError("N must be strictly increasing")
    if np.any(ns <= 0) or np.any(values <= 0):
        raise FitInputError("log-log fit needs positive N and statistics")

    x, y = np.log(ns), np.log(values)
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.linalg.norm(y - (slope * x + intercept)))
    return FitReport(float(slope), float(intercept), residual, x.tolist(), y.tolist())
