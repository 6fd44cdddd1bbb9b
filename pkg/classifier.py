"""
Recurrence / transience classifier

Combines what is known analytically per profile kind with a power-law fit of
the Nash-Williams block sums sum_{j=-k}^{k} 1/p_j. Also checks the
reversibility structure (pi(k,j) = 1/p_j, conductances a(u,v)).
"""

from dataclasses import dataclass, field, asdict
from enum import Enum
from fractions import Fraction
from typing import Callable, List, Optional, Tuple
import logging

import numpy as np

from profiles import (
    HALF, Probability, ProfileKind, ProfileSpec, inverse_p_block_sum, inverse_p_block_sums,
)

logger = logging.getLogger("anisowalk.classifier")

Site = Tuple[int, int]

DEFAULT_MARGIN = 0.1
DEFAULT_MAX_RESIDUAL = 0.05
MIN_K_MAX = 100


class ClassifierInputError(ValueError):
    """K_max too small for a stable exponent fit"""


class Verdict(Enum):
    RECURRENT = "Recurrent"
    TRANSIENT = "Transient"
    CONJECTURED_TRANSIENT = "ConjecturedTransient"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class ClassificationReport:
    """Outcome of classify()"""
    profile: str
    verdict: Verdict
    nash_williams_partial_sums: List[Tuple[int, float]]
    fitted_growth_exponent: float
    fit_residual: float
    rationale: str
    transience_exponent: Optional[float] = None  # A in sum 1/p_j = C k^{1+A}
    k_max: int = 0
    margin: float = DEFAULT_MARGIN

    def to_dict(self) -> dict:
        data = asdict(self)
        data['verdict'] = self.verdict.value
        return data

    def table(self) -> str:
        """Human-readable report"""
        lines = [
            f"Profile:            {self.profile}",
            f"Verdict:            {self.verdict.value}",
            f"Rule:               {self.rationale}",
            f"Growth exponent:    {self.fitted_growth_exponent:.4f} "
            f"(residual {self.fit_residual:.2e}, margin {self.margin:g})",
        ]
        if self.transience_exponent is not None:
            lines.append(f"Transience A:       {self.transience_exponent:g}")
        lines.append("")
        lines.append(f"{'k':>10}  {'partial sum':>14}")
        for k, s in self.nash_williams_partial_sums:
            lines.append(f"{k:>10}  {s:>14.6f}")
        return "\n".join(lines)


@dataclass(frozen=True)
class EdgeWeight:
    """Conductance a(u, v) = pi_u p(u, v) of one lattice edge"""
    u: Site
    v: Site
    conductance: Probability = field(compare=False)


# ==================== Nash-Williams sum ====================

def nash_williams_terms(profile: ProfileSpec, K: int) -> List[float]:
    """term_k = 1 / sum_{j=-k}^{k} 1/p_j for k = 0..K"""
    if K < 0:
        raise ClassifierInputError(f"K must be nonnegative, got {K}")
    return list(1.0 / inverse_p_block_sums(profile, K))


def _checkpoints(K: int, count: int = 40) -> np.ndarray:
    pts = np.unique(np.geomspace(1, K, num=count).astype(np.int64))
    return np.concatenate(([0], pts)) if pts[0] != 0 else pts


def fit_growth_exponent(block_sums: np.ndarray, k_lo: int, k_hi: int) -> Tuple[float, float]:
    """Least-squares slope of log block sum against log k on [k_lo, k_hi], with RMS residual"""
    ks = np.unique(np.geomspace(max(k_lo, 1), k_hi, num=200).astype(np.int64))
    x = np.log(ks.astype(np.float64))
    y = np.log(block_sums[ks])
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return float(slope), residual


def _analytic_verdict(profile: ProfileSpec) -> Optional[Tuple[Verdict, str, Optional[float]]]:
    kind = profile.kind
    if kind in (ProfileKind.CONSTANT, ProfileKind.PERIODIC, ProfileKind.COMB, ProfileKind.HPHC):
        return Verdict.RECURRENT, "min-p-positive", None
    if kind is ProfileKind.POWER_TAIL and profile.alpha > 1:
        # sum 1/p_j = 4(gamma-1) k^alpha + O(k): the power-growth condition with A = alpha - 1
        return Verdict.TRANSIENT, "power-growth-exact", profile.alpha - 1.0
    return None


def classify(profile: ProfileSpec, K_max: int = 100_000, margin: float = DEFAULT_MARGIN,
             max_residual: float = DEFAULT_MAX_RESIDUAL) -> ClassificationReport:
    """
    Decide recurrence/transience

    Args:
        profile: step-probability profile
        K_max: largest shell index; the exponent is fitted on [K_max/10, K_max]
        margin: exponent must exceed 1 + margin to call transience
        max_residual: RMS log residual above which the fit is not trusted

    Returns:
        ClassificationReport
    """
    if K_max < MIN_K_MAX:
        raise ClassifierInputError(f"K_max must be at least {MIN_K_MAX}, got {K_max}")

    block_sums = inverse_p_block_sums(profile, K_max)
    partial = np.cumsum(1.0 / block_sums)
    checkpoints = _checkpoints(K_max)
    partial_sums = [(int(k), float(partial[k])) for k in checkpoints]
    exponent, residual = fit_growth_exponent(block_sums, K_max // 10, K_max)

    analytic = _analytic_verdict(profile)
    if analytic is not None:
        verdict, rationale, transience_a = analytic
    elif residual > max_residual:
        verdict, rationale, transience_a = Verdict.INCONCLUSIVE, "no-power-law-growth", None
    elif exponent <= 1.0 + margin:
        verdict, rationale, transience_a = Verdict.RECURRENT, "harmonic-growth-diverges", None
    else:
        verdict, rationale, transience_a = (
            Verdict.CONJECTURED_TRANSIENT, "convergent-sum-without-exact-power-form", None
        )

    logger.info(f"classify {profile.label}: {verdict.value} ({rationale}), exponent={exponent:.4f}")
    return ClassificationReport(
        profile=profile.label,
        verdict=verdict,
        nash_williams_partial_sums=partial_sums,
        fitted_growth_exponent=exponent,
        fit_residual=residual,
        rationale=rationale,
        transience_exponent=transience_a,
        k_max=K_max,
        margin=margin,
    )


# ==================== Reversibility ====================

def transition_probability(profile: ProfileSpec, u: Site, v: Site) -> Probability:
    """p(u, v) of the anisotropic chain; zero for non-neighbours"""
    (k1, j1), (k2, j2) = u, v
    pj = profile.p(j1)
    if k1 == k2 and abs(j1 - j2) == 1:
        return pj
    if j1 == j2 and abs(k1 - k2) == 1:
        return HALF - pj if profile.is_exact else 0.5 - pj
    return Fraction(0) if profile.is_exact else 0.0


def stationary_weight(profile: ProfileSpec, u: Site) -> Probability:
    """pi(k, j) = 1/p_j"""
    return 1 / profile.p(u[1])


def edge_weight(profile: ProfileSpec, u: Site, v: Site) -> EdgeWeight:
    """a(u, v): 1 on vertical edges, 1/(2p_j) - 1 on horizontal edges, 0 otherwise"""
    return EdgeWeight(u, v, stationary_weight(profile, u) * transition_probability(profile, u, v))


def shell_cut_conductance(profile: ProfileSpec, k: int) -> Probability:
    """Total conductance of the 8k+4 edges between square shells k and k+1"""
    total = Fraction(0) if profile.is_exact else 0.0
    for j in range(-k, k + 1):
        total += edge_weight(profile, (k, j), (k + 1, j)).conductance
        total += edge_weight(profile, (-k, j), (-k - 1, j)).conductance
    for x in range(-k, k + 1):
        total += edge_weight(profile, (x, k), (x, k + 1)).conductance
        total += edge_weight(profile, (x, -k), (x, -k - 1)).conductance
    return total


_NEIGHBOURS = ((0, 1), (0, -1), (1, 0), (-1, 0))


def detailed_balance_check(profile: ProfileSpec, K: int,
                           weights: Optional[Callable[[Site], Probability]] = None) -> bool:
    """
    pi_u p(u,v) == pi_v p(v,u) on every directed edge inside [-K, K]^2

    Args:
        profile: profile to check
        K: window half-width
        weights: optional replacement for pi (used to feed corrupted weights)
    """
    pi = weights or (lambda site: stationary_weight(profile, site))
    exact = profile.is_exact

    for k in range(-K, K + 1):
        for j in range(-K, K + 1):
            u = (k, j)
            for dk, dj in _NEIGHBOURS:
                v = (k + dk, j + dj)
                if abs(v[0]) > K or abs(v[1]) > K:
                    continue
                lhs = pi(u) * transition_probability(profile, u, v)
                rhs = pi(v) * transition_probability(profile, v, u)
                if exact:
                    if lhs != rhs:
                        logger.debug(f"detailed balance broken on {u}->{v}: {lhs} != {rhs}")
                        return False
                elif not np.isclose(float(lhs), float(rhs), rtol=1e-12, atol=0.0):
                    return False
    return True


def invariant_measure_check(profile: ProfileSpec, K: int) -> bool:
    """mu(u) = sum_v mu(v) p(v, u) over the four neighbours, for every u in [-K, K]^2"""
    for k in range(-K, K + 1):
        for j in range(-K, K + 1):
            u = (k, j)
            inflow = sum(
                stationary_weight(profile, (k + dk, j + dj))
                * transition_probability(profile, (k + dk, j + dj), u)
                for dk, dj in _NEIGHBOURS
            )
            target = stationary_weight(profile, u)
            if profile.is_exact:
                if inflow != target:
                    return False
            elif not np.isclose(float(inflow), float(target), rtol=1e-12):
                return False
    return True


def block_sum_matches_cut(profile: ProfileSpec, k: int) -> bool:
    """The shell cut conductance reduces to the block sum of 1/p_j"""
    return shell_cut_conductance(profile, k) == inverse_p_block_sum(profile, k)
