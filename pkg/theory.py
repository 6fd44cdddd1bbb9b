"""
📐 Theory
נוסחאות אסימפטוטיות וחוקי גבול

Closed-form leading-order predictions for the anisotropic walk and the limit
laws simulations are tested against. Every formula is leading order only;
experiments compare at several N to show the trend.
"""

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, Optional, Tuple, Union
import logging
import math

import numpy as np
from scipy import integrate, stats
from scipy.special import ndtr

from profiles import ProfileSpec

logger = logging.getLogger("anisowalk.theory")

QUAD_TOLERANCE = 1e-6
# exp(-s^4) underflows to zero long before this
_S_MAX = 8.0


class FormulaDomainError(ValueError):
    """Parameters outside the domain where a formula is defined"""


class QuadratureError(RuntimeError):
    """Numerical integration did not reach the requested tolerance"""


class UnknownCaseError(KeyError):
    """No exponent or constant table for the requested case"""


# ==================== Gamma(1/4) ====================

@lru_cache(maxsize=None)
def gamma_quarter() -> float:
    """Gamma(1/4) = 4 * int_0^inf exp(-s^4) ds"""
    value, err = integrate.quad(lambda s: math.exp(-s ** 4), 0.0, _S_MAX,
                                epsabs=1e-14, epsrel=1e-14, limit=200)
    return 4.0 * value


@lru_cache(maxsize=None)
def gamma_three_quarters() -> float:
    """Gamma(3/4) = 4 * int_0^inf s^2 exp(-s^4) ds"""
    value, err = integrate.quad(lambda s: s * s * math.exp(-s ** 4), 0.0, _S_MAX,
                                epsabs=1e-14, epsrel=1e-14, limit=200)
    return 4.0 * value


def reflection_residual() -> float:
    """|Gamma(1/4) Gamma(3/4) - pi / sin(pi/4)|"""
    return abs(gamma_quarter() * gamma_three_quarters() - math.pi * math.sqrt(2.0))


# ==================== Formulas ====================

def _check_periodic_domain(gamma: float, p0: float):
    if not gamma > 1:
        raise FormulaDomainError(f"formula needs gamma > 1 (singular at 1), got {gamma}")
    if not (0 < p0 <= 0.5):
        raise FormulaDomainError(f"p0 must lie in (0, 1/2], got {p0}")


def periodic_return_prob(gamma: float, p0: float, N: float) -> float:
    """P(C(2N) = (0,0)) ~ 1 / (4 pi N p0 sqrt(gamma - 1))"""
    gamma, p0 = float(gamma), float(p0)
    _check_periodic_domain(gamma, p0)
    if N < 1:
        raise FormulaDomainError(f"N must be at least 1, got {N}")
    return 1.0 / (4.0 * math.pi * N * p0 * math.sqrt(gamma - 1.0))


def green_truncated(gamma: float, p0: float, N: float) -> float:
    """g(N) = sum_{k<=N} P(C(k) = (0,0)) ~ log N / (4 p0 pi sqrt(gamma - 1))"""
    gamma, p0 = float(gamma), float(p0)
    _check_periodic_domain(gamma, p0)
    if N < 2:
        raise FormulaDomainError(f"N must be at least 2, got {N}")
    return math.log(N) / (4.0 * p0 * math.pi * math.sqrt(gamma - 1.0))


def comb_return_prob(N: float) -> float:
    """P(C(2N) = (0,0)) on the comb ~ sqrt(2) / (Gamma(1/4) N^{3/4})"""
    if N < 1:
        raise FormulaDomainError(f"N must be at least 1, got {N}")
    return math.sqrt(2.0) / (gamma_quarter() * N ** 0.75)


def expected_range_periodic(gamma: float, N: float) -> float:
    """E R(N) ~ (2 pi sqrt(gamma - 1) / gamma) N / log N; gamma = 2 gives pi N / log N"""
    gamma = float(gamma)
    if not gamma > 1:
        raise FormulaDomainError(f"expected range needs gamma > 1, got {gamma}")
    if N < 2:
        raise FormulaDomainError(f"N must be at least 2, got {N}")
    return 2.0 * math.pi * math.sqrt(gamma - 1.0) / gamma * N / math.log(N)


def theorem_d_variances(gamma: float) -> Tuple[float, float]:
    """Limit variances of (C1(N)/sqrt N, C2(N)/sqrt N): (1 - 1/gamma, 1/gamma)"""
    gamma = float(gamma)
    if gamma < 1:
        raise FormulaDomainError(f"gamma must be at least 1, got {gamma}")
    return 1.0 - 1.0 / gamma, 1.0 / gamma


def local_time_ratio_limit(profile: ProfileSpec, site) -> Union[Fraction, float]:
    """lim Xi((0,0),N) / Xi(site,N) = mu(0,0) / mu(site) = p_j / p_0 for recurrent walks"""
    return profile.p(site[1]) / profile.p(0)


@dataclass(frozen=True)
class AsymptoticFormula:
    """A named leading-order evaluator"""
    name: str
    evaluate: Callable[..., float]
    parameters: Tuple[str, ...]
    validity: str = "leading order as N -> infinity; no error term"

    def __call__(self, *args) -> float:
        return self.evaluate(*args)


FORMULAS: Dict[str, AsymptoticFormula] = {
    f.name: f for f in (
        AsymptoticFormula('periodic_return_prob', periodic_return_prob, ('gamma', 'p0', 'N'),
                          "P(C(2N)=(0,0)) for periodic profiles, leading order"),
        AsymptoticFormula('green_truncated', green_truncated, ('gamma', 'p0', 'N'),
                          "truncated Green function, leading order in log N"),
        AsymptoticFormula('comb_return_prob', comb_return_prob, ('N',),
                          "P(C(2N)=(0,0)) on the comb, leading order"),
        AsymptoticFormula('expected_range_periodic', expected_range_periodic, ('gamma', 'N'),
                          "E R(N) for periodic profiles; convergence is logarithmic"),
    )
}


# ==================== Exponents and constants ====================

def scaling_exponents(case: str, alpha: Optional[float] = None) -> Dict[str, float]:
    """
    Predicted log-log slopes of typical |C1(N)|, |C2(N)| or H_N

    Cases: 'comb', 'periodic', 'hphc' and 'power_tail' (with alpha).
    """
    case = case.lower()
    if case == 'comb':
        return {'C1': 0.25, 'C2': 0.5, 'local_time': 0.25, 'H_N': 0.5}
    if case in ('periodic', 'hphc'):
        return {'C1': 0.5, 'C2': 0.5}
    if case == 'power_tail':
        if alpha is None or alpha < 0:
            raise UnknownCaseError(f"power_tail needs alpha >= 0, got {alpha}")
        if alpha == 0:
            return {'C1': 0.25, 'C2': 0.5, 'H_N': 0.5}
        if alpha < 1:
            return {'H_N': (1.0 + alpha) / 2.0, 'C1': (1.0 + alpha) / 4.0, 'C2': 0.5}
        if alpha == 1:
            return {'C1': 0.5, 'C2': 0.5}
        return {'C2': 1.0 / (1.0 + alpha), 'C1': 0.5}
    raise UnknownCaseError(f"no exponent table for case '{case}'")


def lil_constants(case: str, gamma: Optional[float] = None,
                  p0: Optional[float] = None) -> Dict[str, float]:
    """
    Iterated-logarithm constants (export only, not desk-verifiable)

    comb: limsup C1 over N^{1/4} (log log N)^{3/4}, C2 over sqrt(N log log N),
    backbone and tooth local-time limsup constants.
    periodic (and power_tail with alpha = 1): C1, C2 over sqrt(N log log N) and the
    origin local time over log N log log log N.
    hphc: limsup / liminf of C1, C2 over sqrt(N log log N).
    """
    case = case.lower()
    if case == 'comb':
        return {
            'C1_limsup': 2 ** 1.25 * 3 ** -0.75,
            'C2_limsup': math.sqrt(2.0),
            'backbone_local_time_limsup': 2 ** 2.25 * 3 ** -0.75,
            'tooth_local_time_limsup': 2 ** 1.25 * 3 ** -0.75,
        }
    if case in ('periodic', 'power_tail'):
        if gamma is None or not gamma > 1:
            raise UnknownCaseError(f"{case} constants need gamma > 1, got {gamma}")
        table = {
            'C1_limsup': math.sqrt(2.0 * (gamma - 1.0) / gamma),
            'C2_limsup': math.sqrt(2.0 / gamma),
        }
        if p0 is not None:
            table['origin_local_time_limsup'] = 1.0 / (4.0 * p0 * math.pi * math.sqrt(gamma - 1.0))
        return table
    if case == 'hphc':
        return {'C1_limsup': 1.0, 'C1_liminf': -1.0, 'C2_limsup': 1.0, 'C2_liminf': -math.sqrt(2.0)}
    raise UnknownCaseError(f"no constant table for case '{case}'")


# ==================== Limit laws ====================

class LawTag(Enum):
    EXPONENTIAL1 = "Exponential1"
    STD_NORMAL = "StdNormal"
    SCALED_NORMAL = "ScaledNormal"
    TWO_ABS_U_ROOT_V = "TwoAbsUrootV"
    U_ROOT_ABS_Z = "UrootAbsZ"


def _folded_weight(s: float) -> float:
    """Density of sqrt|V| at s for standard normal V: 4 s phi(s^2)"""
    return 4.0 * s * math.exp(-0.5 * s ** 4) / math.sqrt(2.0 * math.pi)


def _quad(integrand, what: str) -> float:
    value, abserr = integrate.quad(integrand, 0.0, _S_MAX, epsabs=1e-9, epsrel=1e-9, limit=200)
    if abserr > QUAD_TOLERANCE:
        raise QuadratureError(f"{what}: quadrature error {abserr:.2e} above {QUAD_TOLERANCE:g}")
    return value


@lru_cache(maxsize=1 << 16)
def _two_abs_u_root_v_cdf(x: float) -> float:
    if x <= 0:
        return 0.0

    def integrand(s):
        if s == 0.0:
            return 0.0
        return (2.0 * ndtr(x / (2.0 * s)) - 1.0) * _folded_weight(s)

    return _quad(integrand, f"P(2|U|sqrt|V| <= {x})")


@lru_cache(maxsize=1 << 16)
def _u_root_abs_z_cdf(x: float) -> float:
    if x == 0:
        return 0.5

    def integrand(s):
        if s == 0.0:
            return 0.0
        return ndtr(x / s) * _folded_weight(s)

    return _quad(integrand, f"P(U sqrt|Z| <= {x})")


@dataclass(frozen=True)
class LimitLaw:
    """A limit distribution with an evaluatable cdf and a direct sampler"""
    tag: LawTag
    variance: float = 1.0
    identity: str = ""

    @classmethod
    def exponential1(cls) -> "LimitLaw":
        return cls(LawTag.EXPONENTIAL1, identity="Xi((0,0),N)/g(N) -> Exp(1) (Darling-Kac)")

    @classmethod
    def std_normal(cls) -> "LimitLaw":
        return cls(LawTag.STD_NORMAL, identity="C2(N)/sqrt(N) -> N(0,1) on the comb")

    @classmethod
    def scaled_normal(cls, variance: float) -> "LimitLaw":
        if not variance > 0:
            raise FormulaDomainError(f"variance must be positive, got {variance}")
        return cls(LawTag.SCALED_NORMAL, float(variance), "periodic coordinates over sqrt(N)")

    @classmethod
    def two_abs_u_root_v(cls) -> "LimitLaw":
        return cls(LawTag.TWO_ABS_U_ROOT_V,
                   identity="Xi((0,0),N)/N^{1/4} -> 2|U|sqrt|V| on the comb")

    @classmethod
    def u_root_abs_z(cls) -> "LimitLaw":
        return cls(LawTag.U_ROOT_ABS_Z, identity="C1(N)/N^{1/4} -> U sqrt|Z| on the comb")

    @property
    def name(self) -> str:
        if self.tag is LawTag.SCALED_NORMAL:
            return f"{self.tag.value}({self.variance:g})"
        return self.tag.value

    def cdf(self, x):
        """P(X <= x); vectorised over arrays"""
        tag = self.tag
        if tag is LawTag.EXPONENTIAL1:
            return stats.expon.cdf(x)
        if tag is LawTag.STD_NORMAL:
            return stats.norm.cdf(x)
        if tag is LawTag.SCALED_NORMAL:
            return stats.norm.cdf(x, scale=math.sqrt(self.variance))

        scalar = _two_abs_u_root_v_cdf if tag is LawTag.TWO_ABS_U_ROOT_V else _u_root_abs_z_cdf
        if np.ndim(x) == 0:
            return min(1.0, max(0.0, scalar(float(x))))
        values = np.array([scalar(float(v)) for v in np.ravel(x)])
        return np.clip(values, 0.0, 1.0).reshape(np.shape(x))

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        """Direct draws from independent standard normals"""
        tag = self.tag
        if tag is LawTag.EXPONENTIAL1:
            return rng.exponential(1.0, size)
        if tag is LawTag.STD_NORMAL:
            return rng.standard_normal(size)
        if tag is LawTag.SCALED_NORMAL:
            return rng.normal(0.0, math.sqrt(self.variance), size)
        u = rng.standard_normal(size)
        v = rng.standard_normal(size)
        if tag is LawTag.TWO_ABS_U_ROOT_V:
            return 2.0 * np.abs(u) * np.sqrt(np.abs(v))
        return u * np.sqrt(np.abs(v))


def limit_cdf(law: LimitLaw, x):
    return law.cdf(x)


def quadrature_vs_sampling(law: LimitLaw, samples: int, rng: np.random.Generator,
                           grid: Optional[np.ndarray] = None) -> float:
    """Sup distance between the quadrature cdf and the empirical cdf of direct draws"""
    draws = np.sort(law.sample(samples, rng))
    if grid is None:
        grid = np.quantile(draws, np.linspace(0.005, 0.995, 199))
    empirical = np.searchsorted(draws, grid, side='right') / samples
    return float(np.max(np.abs(np.asarray(law.cdf(grid)) - empirical)))


if __name__ == "__main__":
    print(f"Gamma(1/4) = {gamma_quarter():.10f}  reflection residual = {reflection_residual():.2e}")
    print(f"comb_return_prob(1) = {comb_return_prob(1):.5f}")
    print(f"periodic_return_prob(2, 1/4, 100) = {periodic_return_prob(2, 0.25, 100):.7f}")
    law = LimitLaw.two_abs_u_root_v()
    for x in (0.5, 1.0, 2.0):
        print(f"P(2|U|sqrt|V| <= {x}) = {law.cdf(x):.6f}")
