"""
Step-probability profiles for the anisotropic walk

A profile answers p_j, the probability of each vertical move from row j.
Horizontal moves then carry 1/2 - p_j each. Derived quantities used across
the lab live here too: the burst mean f(j), the periodic constant gamma,
partial sums b_k / c_k and the Nash-Williams block sums.
"""

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Dict, Iterable, Mapping, NamedTuple, Optional, Tuple, Union
import logging

import numpy as np

logger = logging.getLogger("anisowalk.profiles")

Probability = Union[Fraction, float]

HALF = Fraction(1, 2)
QUARTER = Fraction(1, 4)


class InvalidProfileError(ValueError):
    """Profile parameters outside their allowed ranges"""


class StandingAssumptionError(InvalidProfileError):
    """No row with p_j < 1/2: the walk never moves horizontally"""


class NotSummableError(ValueError):
    """f(j) is not summable for this profile, so f-bar is infinite"""


class ProfileKind(Enum):
    CONSTANT = "constant"
    PERIODIC = "periodic"
    COMB = "comb"
    HPHC = "hphc"
    POWER_TAIL = "power_tail"
    TABLE = "table"


# Integer codes understood by the compiled walk kernels
KIND_CODES = {
    ProfileKind.CONSTANT: 0,
    ProfileKind.PERIODIC: 1,
    ProfileKind.COMB: 2,
    ProfileKind.HPHC: 3,
    ProfileKind.POWER_TAIL: 4,
    ProfileKind.TABLE: 5,
}


class CompiledProfile(NamedTuple):
    """Flat numeric form of a profile for the numba kernels"""
    code: int
    params: np.ndarray
    table: np.ndarray
    offset: int


def to_probability(value) -> Fraction:
    """Parse a probability written as Fraction, int, '1/4' or a decimal"""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    raise InvalidProfileError(f"Cannot read a probability from {value!r}")


def _check_probability(p: Probability, what: str):
    if not (0 < p <= HALF):
        raise InvalidProfileError(f"{what} must lie in (0, 1/2], got {p}")


def _tail_increment(m: int, alpha: float) -> float:
    """m^alpha - (m-1)^alpha with 0^alpha read as 0, so the increments telescope to k^alpha"""
    previous = float(m - 1) ** alpha if m > 1 else 0.0
    return float(m) ** alpha - previous


@dataclass(frozen=True)
class ProfileSpec:
    """
    Vertical-coordinate-indexed step-probability family p_j

    Build with the classmethods (constant, periodic, comb, hphc, power_tail,
    table). Rational kinds keep exact Fractions; power_tail works in floats.
    """
    kind: ProfileKind
    constant_p: Optional[Fraction] = None
    values: Tuple[Fraction, ...] = ()
    gamma: float = 0.0
    alpha: float = 0.0
    p0: float = 0.25
    entries: Tuple[Tuple[int, Fraction], ...] = ()
    default: Optional[Fraction] = None

    def __post_init__(self):
        if self.kind is ProfileKind.CONSTANT:
            if self.constant_p is None:
                raise InvalidProfileError("Constant profile needs p")
            _check_probability(self.constant_p, "p")
        elif self.kind is ProfileKind.PERIODIC:
            if len(self.values) < 1:
                raise InvalidProfileError("Periodic profile needs at least one value (L >= 1)")
            for i, v in enumerate(self.values):
                _check_probability(v, f"values[{i}]")
        elif self.kind is ProfileKind.POWER_TAIL:
            if not self.gamma > 1:
                raise InvalidProfileError(f"power_tail gamma must exceed 1, got {self.gamma}")
            if not self.alpha >= 0:
                raise InvalidProfileError(f"power_tail alpha must be >= 0, got {self.alpha}")
            _check_probability(self.p0, "p0")
        elif self.kind is ProfileKind.TABLE:
            if self.default is None:
                raise InvalidProfileError("Table profile needs a default")
            _check_probability(self.default, "default")
            for j, v in self.entries:
                _check_probability(v, f"table[{j}]")

    # ---------- constructors ----------

    @classmethod
    def constant(cls, p) -> "ProfileSpec":
        return cls(ProfileKind.CONSTANT, constant_p=to_probability(p))

    @classmethod
    def periodic(cls, values: Iterable) -> "ProfileSpec":
        return cls(ProfileKind.PERIODIC, values=tuple(to_probability(v) for v in values))

    @classmethod
    def comb(cls) -> "ProfileSpec":
        return cls(ProfileKind.COMB)

    @classmethod
    def hphc(cls) -> "ProfileSpec":
        return cls(ProfileKind.HPHC)

    @classmethod
    def power_tail(cls, gamma: float, alpha: float, p0: float = 0.25) -> "ProfileSpec":
        return cls(ProfileKind.POWER_TAIL, gamma=float(gamma), alpha=float(alpha), p0=float(p0))

    @classmethod
    def table(cls, mapping: Mapping, default) -> "ProfileSpec":
        """Table values may be floats; they are read exactly from their decimal repr"""
        entries = tuple(sorted((int(j), to_probability(v)) for j, v in mapping.items()))
        return cls(ProfileKind.TABLE, entries=entries, default=to_probability(default))

    # ---------- queries ----------

    @property
    def is_exact(self) -> bool:
        """True when p_j are exact rationals"""
        return self.kind is not ProfileKind.POWER_TAIL

    @property
    def label(self) -> str:
        if self.kind is ProfileKind.CONSTANT:
            return f"constant({self.constant_p})"
        if self.kind is ProfileKind.PERIODIC:
            return "periodic(" + ",".join(str(v) for v in self.values) + ")"
        if self.kind is ProfileKind.POWER_TAIL:
            return f"power_tail(gamma={self.gamma:g},alpha={self.alpha:g},p0={self.p0:g})"
        if self.kind is ProfileKind.TABLE:
            return f"table({len(self.entries)} rows,default={self.default})"
        return self.kind.value

    def p(self, j: int) -> Probability:
        """p_j for row j"""
        kind = self.kind
        if kind is ProfileKind.CONSTANT:
            return self.constant_p
        if kind is ProfileKind.PERIODIC:
            return self.values[j % len(self.values)]
        if kind is ProfileKind.COMB:
            return QUARTER if j == 0 else HALF
        if kind is ProfileKind.HPHC:
            return QUARTER if j >= 0 else HALF
        if kind is ProfileKind.POWER_TAIL:
            if j == 0:
                return self.p0
            f = (self.gamma - 1.0) * _tail_increment(abs(j), self.alpha)
            return 1.0 / (2.0 * (1.0 + f))
        return self._table_lookup().get(j, self.default)

    def _table_lookup(self) -> Dict[int, Fraction]:
        lookup = self.__dict__.get('_lookup')
        if lookup is None:
            lookup = dict(self.entries)
            object.__setattr__(self, '_lookup', lookup)
        return lookup

    def p_array(self, js: np.ndarray) -> np.ndarray:
        """Vectorised float p_j over an integer array of rows"""
        js = np.asarray(js, dtype=np.int64)
        kind = self.kind
        if kind is ProfileKind.CONSTANT:
            return np.full(js.shape, float(self.constant_p))
        if kind is ProfileKind.PERIODIC:
            vals = np.array([float(v) for v in self.values])
            return vals[np.mod(js, len(vals))]
        if kind is ProfileKind.COMB:
            return np.where(js == 0, 0.25, 0.5)
        if kind is ProfileKind.HPHC:
            return np.where(js >= 0, 0.25, 0.5)
        if kind is ProfileKind.POWER_TAIL:
            m = np.abs(js).astype(np.float64)
            prev = np.where(m > 1, np.maximum(m - 1.0, 0.0) ** self.alpha, 0.0)
            f = (self.gamma - 1.0) * (m ** self.alpha - prev)
            return np.where(js == 0, self.p0, 1.0 / (2.0 * (1.0 + f)))
        compiled = self.compile()
        out = np.full(js.shape, float(self.default))
        idx = js + compiled.offset
        inside = (idx >= 0) & (idx < compiled.table.shape[0])
        out[inside] = compiled.table[idx[inside]]
        return out

    def drift_weight(self, j: int) -> Probability:
        """f(j) = (1 - 2 p_j) / (2 p_j): mean horizontal burst length at row j"""
        p = self.p(j)
        return (1 - 2 * p) / (2 * p)

    def satisfies_standing_assumption(self) -> bool:
        """Some row has p_j < 1/2"""
        kind = self.kind
        if kind is ProfileKind.CONSTANT:
            return self.constant_p < HALF
        if kind is ProfileKind.PERIODIC:
            return any(v < HALF for v in self.values)
        if kind is ProfileKind.TABLE:
            return self.default < HALF or any(v < HALF for _, v in self.entries)
        return True

    def validate(self) -> "ProfileSpec":
        """Raise unless min_j p_j < 1/2; returns self for chaining"""
        if not self.satisfies_standing_assumption():
            raise StandingAssumptionError(
                f"{self.label}: every p_j equals 1/2, the walk never moves horizontally"
            )
        return self

    def compile(self) -> CompiledProfile:
        """Flatten to numeric arrays for the walk kernels (cached)"""
        compiled = self.__dict__.get('_compiled')
        if compiled is None:
            compiled = self._compile()
            object.__setattr__(self, '_compiled', compiled)
        return compiled

    def _compile(self) -> CompiledProfile:
        empty = np.zeros(0, dtype=np.float64)
        code = KIND_CODES[self.kind]
        kind = self.kind
        if kind is ProfileKind.CONSTANT:
            return CompiledProfile(code, np.array([float(self.constant_p)]), empty, 0)
        if kind is ProfileKind.PERIODIC:
            return CompiledProfile(code, empty.copy(),
                                   np.array([float(v) for v in self.values]), 0)
        if kind is ProfileKind.POWER_TAIL:
            return CompiledProfile(code, np.array([self.gamma, self.alpha, self.p0]), empty, 0)
        if kind is ProfileKind.TABLE:
            params = np.array([float(self.default)])
            if not self.entries:
                return CompiledProfile(code, params, empty, 0)
            lo, hi = self.entries[0][0], self.entries[-1][0]
            dense = np.full(hi - lo + 1, float(self.default))
            for j, v in self.entries:
                dense[j - lo] = float(v)
            return CompiledProfile(code, params, dense, -lo)
        return CompiledProfile(code, empty, empty.copy(), 0)

    def to_config(self) -> Dict:
        """Inverse of profile_from_config"""
        kind = self.kind
        if kind is ProfileKind.CONSTANT:
            return {'kind': kind.value, 'p': str(self.constant_p)}
        if kind is ProfileKind.PERIODIC:
            return {'kind': kind.value, 'values': [str(v) for v in self.values]}
        if kind is ProfileKind.POWER_TAIL:
            return {'kind': kind.value, 'gamma': self.gamma, 'alpha': self.alpha, 'p0': self.p0}
        if kind is ProfileKind.TABLE:
            return {'kind': kind.value, 'table': {j: str(v) for j, v in self.entries},
                    'default': str(self.default)}
        return {'kind': kind.value}


# ==================== Module-level operations ====================

def p(profile: ProfileSpec, j: int) -> Probability:
    return profile.p(j)


def drift_weight(profile: ProfileSpec, j: int) -> Probability:
    return profile.drift_weight(j)


def gamma_periodic(profile: ProfileSpec) -> Fraction:
    """gamma = sum_{j<L} 1/p_j / (2L); at least 1, above 1 iff some p_j < 1/2"""
    if profile.kind is not ProfileKind.PERIODIC:
        raise InvalidProfileError(f"gamma_periodic needs a periodic profile, got {profile.label}")
    profile.validate()
    L = len(profile.values)
    return sum((1 / v for v in profile.values), Fraction(0)) / (2 * L)


def inverse_p_block_sum(profile: ProfileSpec, k: int) -> Probability:
    """sum_{j=-k}^{k} 1/p_j, exact for rational profiles"""
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")
    total = Fraction(0) if profile.is_exact else 0.0
    for j in range(-k, k + 1):
        total += 1 / profile.p(j)
    return total


def inverse_p_block_sums(profile: ProfileSpec, K: int) -> np.ndarray:
    """Float block sums for every k = 0..K at once"""
    if K < 0:
        raise ValueError(f"K must be nonnegative, got {K}")
    ks = np.arange(1, K + 1, dtype=np.int64)
    pairs = 1.0 / profile.p_array(ks) + 1.0 / profile.p_array(-ks)
    return np.concatenate(([1.0 / float(profile.p(0))], 1.0 / float(profile.p(0)) + np.cumsum(pairs)))


def drift_partial_sums(profile: ProfileSpec, k: int) -> Tuple[Probability, Probability]:
    """(b_k, c_k) = (sum_{j=1}^k f(j), sum_{j=1}^k f(-j))"""
    zero = Fraction(0) if profile.is_exact else 0.0
    b = sum((profile.drift_weight(j) for j in range(1, k + 1)), zero)
    c = sum((profile.drift_weight(-j) for j in range(1, k + 1)), zero)
    return b, c


def f_bar(profile: ProfileSpec) -> Probability:
    """sum_j f(j) for the alpha = 0 kinds; 2(gamma - 1) + f(0) in general"""
    kind = profile.kind
    if kind is ProfileKind.COMB:
        return profile.drift_weight(0)
    if kind is ProfileKind.POWER_TAIL and profile.alpha == 0:
        return 2.0 * (profile.gamma - 1.0) + float(profile.drift_weight(0))
    if kind is ProfileKind.TABLE and profile.default == HALF:
        rows = {0} | {j for j, _ in profile.entries}
        return sum((profile.drift_weight(j) for j in rows), Fraction(0))
    raise NotSummableError(f"f(j) is not summable for {profile.label}")


def profile_from_config(section: Mapping) -> ProfileSpec:
    """Build a profile from the `profile` config section"""
    try:
        kind = ProfileKind(str(section['kind']).lower())
    except (KeyError, ValueError):
        raise InvalidProfileError(f"Unknown or missing profile kind in {dict(section)!r}")

    try:
        if kind is ProfileKind.CONSTANT:
            profile = ProfileSpec.constant(section['p'])
        elif kind is ProfileKind.PERIODIC:
            profile = ProfileSpec.periodic(section['values'])
        elif kind is ProfileKind.COMB:
            profile = ProfileSpec.comb()
        elif kind is ProfileKind.HPHC:
            profile = ProfileSpec.hphc()
        elif kind is ProfileKind.POWER_TAIL:
            profile = ProfileSpec.power_tail(section['gamma'], section['alpha'],
                                             section.get('p0', 0.25))
        else:
            profile = ProfileSpec.table(section.get('table') or {}, section['default'])
    except KeyError as e:
        raise InvalidProfileError(f"Profile kind '{kind.value}' is missing key {e}")

    logger.debug(f"Profile from config: {profile.label}")
    return profile.validate()


def bundled_profiles() -> Dict[str, ProfileSpec]:
    """The five profiles every acceptance check runs on"""
    return {
        'constant-1/4': ProfileSpec.constant(QUARTER),
        'comb': ProfileSpec.comb(),
        'periodic-1/4-1/2': ProfileSpec.periodic([QUARTER, HALF]),
        'hphc': ProfileSpec.hphc(),
        'power-tail-2-2': ProfileSpec.power_tail(2.0, 2.0, 0.25),
    }


def sqrt_growth_table(extent: int, amplitude: float = 3.0, wobble: float = 0.3) -> ProfileSpec:
    """
    Table profile with 1/p_j = amplitude * sqrt|j| * (1 + wobble * sin j) for 0 < |j| <= extent

    Block sums grow like k^{3/2} without the exact power form; p_0 = 1/4 and
    rows beyond the extent use 1/2.
    """
    if extent < 1:
        raise InvalidProfileError(f"extent must be positive, got {extent}")
    js = np.arange(1, extent + 1)
    inverse = amplitude * np.sqrt(js) * (1.0 + wobble * np.sin(js))
    if np.any(inverse < 2.0):
        raise InvalidProfileError("amplitude and wobble give p_j above 1/2")
    entries: Dict[int, Fraction] = {0: QUARTER}
    for j, w in zip(js.tolist(), inverse.tolist()):
        entries[j] = entries[-j] = to_probability(1.0 / w)
    return ProfileSpec.table(entries, HALF)


def block_sum_identity_residual(profile: ProfileSpec, k: int) -> Probability:
    """inverse_p_block_sum(k) - [(4k+2) + 2(b_k + c_k + f(0))]; zero by 1/p = 2(1+f)"""
    b, c = drift_partial_sums(profile, k)
    return inverse_p_block_sum(profile, k) - ((4 * k + 2) + 2 * (b + c + profile.drift_weight(0)))


if __name__ == "__main__":
    for name, prof in bundled_profiles().items():
        print(f"{name:20s} p(0)={prof.p(0)} p(1)={prof.p(1)} p(-1)={prof.p(-1)} "
              f"block(2)={inverse_p_block_sum(prof, 2)}")
    print(f"gamma(periodic 1/4,1/2) = {gamma_periodic(ProfileSpec.periodic(['1/4', '1/2']))}")
