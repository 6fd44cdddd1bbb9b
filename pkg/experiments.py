"""
🔬 Experiments
רישום הניסויים והרצתם

Every registered experiment turns replicas of the walk (or exact oracle
values) into one pass/fail outcome against a stated target and tolerance.
Each has a full parameter set (acceptance scale) and a quick one (smoke
scale). Seeds for sub-runs derive from the master seed and a label only,
so outcomes do not depend on worker count.
"""

from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Tuple
import logging
import math
import time
import zlib

import numpy as np

from classifier import (
    Verdict, block_sum_matches_cut, classify, detailed_balance_check, invariant_measure_check,
    nash_williams_terms,
)
from config_manager import get_config
from engine import ENGINES, SEED_RULE, Ensemble, ObserverConfig, replica_rng, run_ensemble
from logging_system import get_experiment_logger, log_errors, log_outcome, log_performance
from oracle import (
    exact_expected_range, exact_origin_local_time_distribution, exact_site_distribution,
    return_probability_series,
)
from profiles import (
    QUARTER, HALF, ProfileSpec, bundled_profiles, f_bar, gamma_periodic, sqrt_growth_table,
)
from stats import (
    chi_square, continuity_jitter, interquartile_range, ks_statistic, loglog_slope, mean_ci,
    two_proportion_z,
)
from theory import (
    LimitLaw, comb_return_prob, gamma_quarter, green_truncated, local_time_ratio_limit,
    periodic_return_prob, quadrature_vs_sampling, reflection_residual, theorem_d_variances,
)

logger = logging.getLogger("anisowalk.experiments")


class UnknownExperimentError(KeyError):
    """No experiment registered under that name"""


# ==================== Data classes ====================

@dataclass
class Measurement:
    """What an experiment runner reports back"""
    statistic: float
    target: float
    tolerance: float
    passed: bool
    N: int
    replicas: int
    details: Dict[str, Any] = field(default_factory=dict)
    series: Dict[str, List[List[float]]] = field(default_factory=dict)


@dataclass
class ExperimentSpec:
    """Fully resolved experiment request; nothing is left to hidden defaults"""
    name: str
    profiles: List[str]
    schedule: List[int]
    replicas: int
    observable: str
    target: str
    tolerance: float
    seed: int
    quick: bool = False
    params: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class ExperimentOutcome:
    experiment: str
    spec: Dict[str, Any]
    N: int
    replicas: int
    statistic: float
    target: float
    tolerance: float
    passed: bool
    seed: int
    details: Dict[str, Any]
    series: Dict[str, List[List[float]]]
    wall_time: float
    seed_rule: str = SEED_RULE

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentOutcome":
        return cls(**data)

    def reproducible_dict(self) -> Dict[str, Any]:
        """Everything except wall time; equal across reruns with the same seed"""
        data = self.to_dict()
        data.pop('wall_time')
        return data


@dataclass
class Experiment:
    name: str
    anchor: str
    claim: str
    observable: str
    target: str
    profiles: Tuple[str, ...]
    full: Dict[str, Any]
    quick: Dict[str, Any]
    runner: Callable[[Dict[str, Any], "RunContext"], Measurement]


def derive_seed(seed: int, *labels) -> int:
    """Child seed from the master seed and string labels"""
    words = [int(seed)] + [zlib.crc32(str(label).encode('utf-8')) for label in labels]
    return int(np.random.SeedSequence(words).generate_state(1, dtype=np.uint64)[0])


@dataclass
class RunContext:
    seed: int
    jobs: Optional[int] = None
    progress: bool = False

    def seed_for(self, *labels) -> int:
        return derive_seed(self.seed, *labels)

    def rng(self, *labels) -> np.random.Generator:
        return replica_rng(self.seed_for(*labels), 0)

    def ensemble(self, profile: ProfileSpec, N: int, replicas: int, label: str,
                 engine: str = 'direct', observer: Optional[ObserverConfig] = None) -> Ensemble:
        return run_ensemble(profile, N, replicas, self.seed_for(label), engine=engine,
                            observer=observer, jobs=self.jobs, progress=self.progress)


# ==================== Registry ====================

REGISTRY: Dict[str, Experiment] = {}


def experiment(name: str, anchor: str, claim: str, observable: str, target: str,
               profiles: Tuple[str, ...], full: Dict[str, Any], quick: Dict[str, Any]):
    """Register a runner under a name"""
    def decorator(func):
        REGISTRY[name] = Experiment(name, anchor, claim, observable, target, tuple(profiles),
                                    full, quick, func)
        return func
    return decorator


def get_experiment(name: str) -> Experiment:
    try:
        return REGISTRY[name]
    except KeyError:
        raise UnknownExperimentError(
            f"Unknown experiment '{name}'. Known: {', '.join(sorted(REGISTRY))}"
        ) from None


def list_experiments() -> List[Dict[str, str]]:
    """name, anchor, claim and target of every registered experiment"""
    return [{'name': e.name, 'anchor': e.anchor, 'claim': e.claim,
             'observable': e.observable, 'target': e.target}
            for e in REGISTRY.values()]


def build_spec(name: str, seed: int, quick: bool = False,
               overrides: Optional[Dict[str, Any]] = None) -> ExperimentSpec:
    """Resolve a named experiment into an explicit spec"""
    if seed is None or int(seed) < 0:
        raise ValueError(f"a nonnegative master seed is required, got {seed}")
    exp = get_experiment(name)
    params = dict(exp.quick if quick else exp.full)
    params.update(overrides or {})
    if isinstance(params['tolerance'], str):
        # tolerance named by a config key
        params['tolerance'] = float(get_config().get(params['tolerance']))
    schedule = params.get('schedule') or [params.get('N', params.get('K', params.get('k_max', 0)))]
    return ExperimentSpec(
        name=name,
        profiles=list(exp.profiles),
        schedule=[int(n) for n in schedule],
        replicas=int(params.get('replicas', 0)),
        observable=exp.observable,
        target=exp.target,
        tolerance=float(params['tolerance']),
        seed=int(seed),
        quick=quick,
        params=params,
    )


def _plain(value):
    """Recursively turn numpy scalars and tuples into JSON-native values"""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, Fraction)):
        return float(value)
    return value


@log_errors()
@log_performance
def run_experiment(spec: ExperimentSpec, jobs: Optional[int] = None,
                   progress: bool = False) -> ExperimentOutcome:
    """Execute one experiment and evaluate it against its target"""
    exp = get_experiment(spec.name)
    ctx = RunContext(spec.seed, jobs, progress)
    log = get_experiment_logger()
    log.info(f"▶️  {spec.name} seed={spec.seed} quick={spec.quick} replicas={spec.replicas}")

    start = time.perf_counter()
    measured = exp.runner(dict(spec.params), ctx)
    wall_time = time.perf_counter() - start

    outcome = ExperimentOutcome(
        experiment=spec.name,
        spec=_plain(spec.to_dict()),
        N=int(measured.N),
        replicas=int(measured.replicas),
        statistic=float(measured.statistic),
        target=float(measured.target),
        tolerance=float(measured.tolerance),
        passed=bool(measured.passed),
        seed=spec.seed,
        details=_plain(measured.details),
        series=_plain(measured.series),
        wall_time=wall_time,
    )
    log_outcome(spec.name, outcome.passed, outcome.statistic, outcome.target, outcome.tolerance)
    return outcome


# ==================== Helpers ====================

def _relative_error(value: float, target: float) -> float:
    return abs(value / target - 1.0)


def _exact_agreement(observed: Dict, expected: Dict) -> float:
    """p-value for a law with a single outcome: 1 if every observation sits on it"""
    support = {k for k, m in expected.items() if m > 0}
    return 1.0 if all(k in support for k, c in observed.items() if c > 0) else 0.0


def _chi_square_p(observed: Dict, expected: Dict) -> float:
    if sum(1 for m in expected.values() if m > 0) < 2:
        return _exact_agreement(observed, expected)
    return chi_square(observed, expected).p_value


COMB = 'comb'
CONSTANT = 'constant-1/4'
PERIODIC = 'periodic-1/4-1/2'
HPHC = 'hphc'
POWER_TAIL = 'power-tail-2-2'
SLOPE_SCHEDULE = [10_000, 31_623, 100_000, 316_228, 1_000_000]
QUICK_SLOPE_SCHEDULE = [1_000, 3_162, 10_000, 31_623, 100_000]


# ==================== Exact-law checks ====================

@experiment(
    'engine-equivalence',
    anchor="Eq (1.1)",
    claim="direct chain and burst construction both reproduce the exact small-N laws",
    observable="final site and origin local time histograms",
    target="chi-square p-value above the family-wise stats.chi_square_level",
    profiles=(CONSTANT, COMB, PERIODIC, HPHC, POWER_TAIL),
    full={'schedule': list(range(1, 9)), 'replicas': 1_000_000,
          'tolerance': 'stats.chi_square_level'},
    quick={'schedule': [1, 2, 4, 6], 'replicas': 20_000,
           'tolerance': 'stats.chi_square_level'},
)
def _engine_equivalence(params, ctx: RunContext) -> Measurement:
    profiles = bundled_profiles()
    names = params.get('profiles', list(profiles))
    replicas = params['replicas']
    results = []
    for name in names:
        prof = profiles[name]
        for N in params['schedule']:
            sites = exact_site_distribution(prof, N).masses
            local_time = exact_origin_local_time_distribution(prof, N)
            for engine in ENGINES:
                ens = ctx.ensemble(prof, N, replicas, f"{name}/{N}/{engine}", engine=engine)
                results.append([name, N, engine,
                                _chi_square_p(ens.site_counts(), sites),
                                _chi_square_p(ens.origin_local_time_counts(), local_time)])

    p_values = [r[3] for r in results] + [r[4] for r in results]
    per_test = params['tolerance'] / len(p_values)
    worst = min(p_values)
    return Measurement(
        statistic=worst, target=params['tolerance'], tolerance=per_test,
        passed=worst > per_test, N=max(params['schedule']), replicas=replicas,
        details={'tests': len(p_values), 'per_test_level': per_test,
                 'p_values': results},
    )


@experiment(
    'detailed-balance',
    anchor="Eqs (1.2)-(1.4)",
    claim="pi(k,j) = 1/p_j makes the chain reversible; shell cuts reduce to block sums",
    observable="exact rational balance on every edge of a window",
    target="no failing check, corrupted weights rejected",
    profiles=(CONSTANT, COMB, PERIODIC, HPHC),
    full={'K': 50, 'invariant_K': 10, 'cut_k': 20, 'tolerance': 0.0},
    quick={'K': 10, 'invariant_K': 4, 'cut_k': 6, 'tolerance': 0.0},
)
def _detailed_balance(params, ctx: RunContext) -> Measurement:
    failures = []
    checked = []
    for name, prof in bundled_profiles().items():
        if not prof.is_exact:
            continue
        checked.append(name)
        if not detailed_balance_check(prof, params['K']):
            failures.append(f"{name}: detailed balance")
        if not invariant_measure_check(prof, params['invariant_K']):
            failures.append(f"{name}: invariant measure")
        if not all(block_sum_matches_cut(prof, k) for k in range(params['cut_k'] + 1)):
            failures.append(f"{name}: shell cut")

    comb = ProfileSpec.comb()

    def corrupted(site):
        return Fraction(5) if tuple(site) == (0, 1) else 1 / comb.p(site[1])

    if detailed_balance_check(comb, 2, weights=corrupted):
        failures.append("negative control accepted")

    return Measurement(
        statistic=float(len(failures)), target=0.0, tolerance=params['tolerance'],
        passed=not failures, N=params['K'], replicas=0,
        details={'profiles': checked, 'failures': failures},
    )


@experiment(
    'classifier-verdicts',
    anchor="Theorems 1.1, 1.2",
    claim="Nash-Williams block sums separate recurrent from transient profiles",
    observable="classifier verdict per profile",
    target="expected verdict for all five profiles; constant-p partial sums match",
    profiles=(COMB, CONSTANT, PERIODIC, POWER_TAIL, 'sqrt-growth-table'),
    full={'k_max': 100_000, 'margin': 0.1, 'tolerance': 1e-4},
    quick={'k_max': 10_000, 'margin': 0.1, 'tolerance': 1e-3},
)
def _classifier_verdicts(params, ctx: RunContext) -> Measurement:
    k_max = params['k_max']
    profiles = bundled_profiles()
    cases = [
        (COMB, profiles[COMB], Verdict.RECURRENT),
        (CONSTANT, profiles[CONSTANT], Verdict.RECURRENT),
        (PERIODIC, profiles[PERIODIC], Verdict.RECURRENT),
        (POWER_TAIL, profiles[POWER_TAIL], Verdict.TRANSIENT),
        ('sqrt-growth-table', sqrt_growth_table(k_max), Verdict.CONJECTURED_TRANSIENT),
    ]
    verdicts = {}
    wrong = []
    for name, prof, expected in cases:
        report = classify(prof, K_max=k_max, margin=params['margin'])
        verdicts[name] = [report.verdict.value, report.fitted_growth_exponent]
        if report.verdict is not expected:
            wrong.append(name)

    # sum_{k<=K} p/(2k+1) = p (ln K / 2 + ln 2 + euler_gamma / 2) + O(1/K)
    p = float(QUARTER)
    partial = float(np.sum(nash_williams_terms(profiles[CONSTANT], k_max)))
    expansion = p * (0.5 * math.log(k_max) + math.log(2.0) + 0.5 * np.euler_gamma)
    rel = _relative_error(partial, expansion)

    return Measurement(
        statistic=rel, target=0.0, tolerance=params['tolerance'],
        passed=not wrong and rel <= params['tolerance'], N=k_max, replicas=0,
        details={'verdicts': verdicts, 'wrong': wrong, 'constant_partial_sum': partial,
                 'constant_expansion': expansion},
    )


@experiment(
    'range-oracle',
    anchor="§4",
    claim="Monte Carlo mean range matches exact path enumeration",
    observable="R(N) at small N",
    target="|mean - exact| within 4 standard errors for every profile",
    profiles=(CONSTANT, COMB, PERIODIC, HPHC, POWER_TAIL),
    full={'N': 8, 'replicas': 20_000, 'tolerance': 4.0},
    quick={'N': 6, 'replicas': 4_000, 'tolerance': 4.0},
)
def _range_oracle(params, ctx: RunContext) -> Measurement:
    N, replicas = params['N'], params['replicas']
    rows = {}
    worst = 0.0
    for name, prof in bundled_profiles().items():
        exact = float(exact_expected_range(prof, N))
        ens = ctx.ensemble(prof, N, replicas, f"range/{name}", observer=ObserverConfig.full())
        mean, se = mean_ci(ens.ranges)
        z = abs(mean - exact) / se if se > 0 else (0.0 if mean == exact else math.inf)
        rows[name] = {'exact': exact, 'mean': mean, 'se': se, 'z': z}
        worst = max(worst, z)
    return Measurement(statistic=worst, target=0.0, tolerance=params['tolerance'],
                       passed=worst <= params['tolerance'], N=N, replicas=replicas,
                       details={'profiles': rows})


# ==================== Return probabilities ====================

@experiment(
    'simple-walk-return',
    anchor="Lemma 3.1",
    claim="return probability of the planar simple walk is about 1/(pi N) at time 2N",
    observable="P(C(2N) = (0,0))",
    target="1/(4 pi N p0 sqrt(gamma - 1)) with gamma = 2, p0 = 1/4",
    profiles=(CONSTANT,),
    full={'N': 200, 'replicas': 4_000_000, 'batch': 500_000, 'tolerance': 0.1},
    quick={'N': 200, 'replicas': 1_000_000, 'batch': 500_000, 'tolerance': 0.1},
)
def _simple_walk_return(params, ctx: RunContext) -> Measurement:
    half, replicas, batch = params['N'], params['replicas'], params['batch']
    prof = bundled_profiles()[CONSTANT]
    hits = 0
    done = 0
    index = 0
    while done < replicas:
        m = min(batch, replicas - done)
        ens = ctx.ensemble(prof, 2 * half, m, f"origin/{index}")
        hits += int(np.count_nonzero((ens.final_k == 0) & (ens.final_j == 0)))
        done += m
        index += 1
    estimate = hits / replicas
    target = periodic_return_prob(2.0, 0.25, half)
    exact = float(return_probability_series(prof, 2 * half)[2 * half])
    rel = _relative_error(estimate, target)
    return Measurement(
        statistic=estimate, target=target, tolerance=params['tolerance'],
        passed=rel <= params['tolerance'], N=half, replicas=replicas,
        details={'hits': hits, 'relative_error': rel, 'exact_dp': exact,
                 'standard_error': math.sqrt(estimate * (1 - estimate) / replicas)},
    )


@experiment(
    'periodic-return-prob',
    anchor="Lemma 3.1",
    claim="exact return probabilities of periodic profiles approach the local limit formula",
    observable="P(C(2N) = (0,0)) by float forward DP",
    target="1/(4 pi N p0 sqrt(gamma - 1))",
    profiles=(PERIODIC, 'constant-1/4 as period 1'),
    full={'N': 200, 'tolerance': 0.1},
    quick={'N': 100, 'tolerance': 0.1},
)
def _periodic_return_prob(params, ctx: RunContext) -> Measurement:
    half = params['N']
    rows = {}
    worst = 0.0
    for name, prof in ((PERIODIC, ProfileSpec.periodic([QUARTER, HALF])),
                       ('period-1', ProfileSpec.periodic([QUARTER]))):
        exact = float(return_probability_series(prof, 2 * half)[2 * half])
        target = periodic_return_prob(float(gamma_periodic(prof)), float(prof.p(0)), half)
        rel = _relative_error(exact, target)
        rows[name] = {'exact': exact, 'formula': target, 'relative_error': rel}
        worst = max(worst, rel)
    return Measurement(statistic=worst, target=0.0, tolerance=params['tolerance'],
                       passed=worst <= params['tolerance'], N=half, replicas=0,
                       details={'profiles': rows})


@experiment(
    'comb-return-trend',
    anchor="§3.2",
    claim="comb return probability approaches sqrt(2) / (Gamma(1/4) N^{3/4})",
    observable="relative error of the exact return probability against the asymptotic",
    target="relative error shrinking along the schedule",
    profiles=(COMB,),
    full={'schedule': [25, 50, 100, 200, 400], 'tolerance': 0.0},
    quick={'schedule': [25, 50, 100, 200], 'tolerance': 0.0},
)
def _comb_return_trend(params, ctx: RunContext) -> Measurement:
    schedule = params['schedule']
    series = return_probability_series(ProfileSpec.comb(), 2 * max(schedule))
    errors = [_relative_error(float(series[2 * n]), comb_return_prob(n)) for n in schedule]
    shrinking = all(b < a for a, b in zip(errors, errors[1:]))
    return Measurement(
        statistic=errors[-1], target=0.0, tolerance=errors[0], passed=shrinking,
        N=max(schedule), replicas=0,
        details={'relative_errors': errors, 'gamma_quarter': gamma_quarter()},
        series={'relative_error': [[n, e] for n, e in zip(schedule, errors)]},
    )


# ==================== Periodic profiles ====================

@experiment(
    'periodic-marginals',
    anchor="Theorem D",
    claim="periodic profile coordinates over sqrt(N) are normal with variances 1 - 1/gamma, 1/gamma",
    observable="C1(N)/sqrt(N), C2(N)/sqrt(N)",
    target="(1/3, 2/3) for gamma = 3/2",
    profiles=(PERIODIC,),
    full={'N': 100_000, 'replicas': 10_000, 'tolerance': 0.05, 'ks_tolerance': 0.03},
    quick={'N': 10_000, 'replicas': 2_000, 'tolerance': 0.1, 'ks_tolerance': 0.06},
)
def _periodic_marginals(params, ctx: RunContext) -> Measurement:
    N, replicas = params['N'], params['replicas']
    prof = bundled_profiles()[PERIODIC]
    v1, v2 = theorem_d_variances(float(gamma_periodic(prof)))
    ens = ctx.ensemble(prof, N, replicas, "marginals")
    x1 = ens.final_k / math.sqrt(N)
    x2 = ens.final_j / math.sqrt(N)
    var1, var2 = float(np.var(x1, ddof=1)), float(np.var(x2, ddof=1))
    rel = max(_relative_error(var1, v1), _relative_error(var2, v2))
    ks1 = ks_statistic(x1, LimitLaw.scaled_normal(v1))
    ks2 = ks_statistic(x2, LimitLaw.scaled_normal(v2))
    return Measurement(
        statistic=rel, target=0.0, tolerance=params['tolerance'],
        passed=rel <= params['tolerance'] and max(ks1, ks2) <= params['ks_tolerance'],
        N=N, replicas=replicas,
        details={'variances': [var1, var2], 'targets': [v1, v2], 'ks': [ks1, ks2]},
    )


@experiment(
    'darling-kac',
    anchor="Corollary 3.1",
    claim="periodic origin local time over the truncated Green function is Exp(1)",
    observable="Xi((0,0),N) / g(N)",
    target="Exponential(1), KS shrinking with N",
    profiles=(PERIODIC,),
    full={'schedule': [10_000, 1_000_000], 'replicas': 10_000, 'tolerance': 0.10},
    quick={'schedule': [1_000, 100_000], 'replicas': 2_000, 'tolerance': 0.15},
)
def _darling_kac(params, ctx: RunContext) -> Measurement:
    prof = bundled_profiles()[PERIODIC]
    gamma, p0 = float(gamma_periodic(prof)), float(prof.p(0))
    law = LimitLaw.exponential1()
    ks_values = []
    for N in params['schedule']:
        ens = ctx.ensemble(prof, N, params['replicas'], f"darling-kac/{N}")
        x = continuity_jitter(ens.returns, ctx.rng("jitter", N)) / green_truncated(gamma, p0, N)
        ks_values.append(ks_statistic(x, law))
    last = ks_values[-1]
    return Measurement(
        statistic=last, target=0.0, tolerance=params['tolerance'],
        passed=last <= params['tolerance'] and last < ks_values[0],
        N=params['schedule'][-1], replicas=params['replicas'],
        details={'ks': ks_values},
        series={'ks': [[n, k] for n, k in zip(params['schedule'], ks_values)]},
    )


@experiment(
    'periodic-local-time-ratio',
    anchor="§3.1",
    claim="ratio of local times tends to the ratio of invariant weights",
    observable="sum Xi((0,0),N) / sum Xi((0,1),N)",
    target="p_1 / p_0 = 2",
    profiles=(PERIODIC,),
    full={'N': 1_000_000, 'replicas': 1_000, 'tolerance': 0.1},
    quick={'N': 10_000, 'replicas': 1_000, 'tolerance': 0.2},
)
def _periodic_local_time_ratio(params, ctx: RunContext) -> Measurement:
    N, replicas = params['N'], params['replicas']
    prof = bundled_profiles()[PERIODIC]
    ens = ctx.ensemble(prof, N, replicas, "ratio", observer=ObserverConfig.tracked((0, 1)))
    ratio = float(ens.returns.sum()) / max(1.0, float(ens.tracked_column((0, 1)).sum()))
    target = float(local_time_ratio_limit(prof, (0, 1)))
    rel = _relative_error(ratio, target)
    return Measurement(statistic=ratio, target=target, tolerance=params['tolerance'],
                       passed=rel <= params['tolerance'], N=N, replicas=replicas,
                       details={'relative_error': rel})


@experiment(
    'range-lln',
    anchor="§4",
    claim="range of the planar walk grows like pi N / log N",
    observable="mean R(N) log N / (pi N)",
    target="1, closer at the larger N",
    profiles=(CONSTANT,),
    full={'schedule': [10_000, 1_000_000], 'replicas': 100, 'tolerance': 0.15},
    quick={'schedule': [1_000, 100_000], 'replicas': 100, 'tolerance': 0.3},
)
def _range_lln(params, ctx: RunContext) -> Measurement:
    prof = bundled_profiles()[CONSTANT]
    ratios = []
    for N in params['schedule']:
        ens = ctx.ensemble(prof, N, params['replicas'], f"range/{N}", observer=ObserverConfig.full())
        ratios.append(float(ens.ranges.mean()) * math.log(N) / (math.pi * N))
    last = ratios[-1]
    return Measurement(
        statistic=last, target=1.0, tolerance=params['tolerance'],
        passed=abs(last - 1.0) <= params['tolerance'] and abs(last - 1.0) < abs(ratios[0] - 1.0),
        N=params['schedule'][-1], replicas=params['replicas'],
        details={'ratios': ratios},
        series={'range_ratio': [[n, r] for n, r in zip(params['schedule'], ratios)]},
    )


# ==================== Comb ====================

@experiment(
    'comb-scaling',
    anchor="Theorem B",
    claim="comb coordinates scale as N^{1/4} (horizontal) and N^{1/2} (vertical)",
    observable="C1(N)/N^{1/4}, C2(N)/sqrt(N), median |C1(N)| along N",
    target="U sqrt|Z| and N(0,1) laws; log-log slope 1/4",
    profiles=(COMB,),
    full={'schedule': SLOPE_SCHEDULE, 'replicas': 10_000, 'tolerance': 0.03,
          'ks_c1': 0.05, 'ks_c2': 0.03},
    quick={'schedule': QUICK_SLOPE_SCHEDULE, 'replicas': 2_000, 'tolerance': 0.05,
           'ks_c1': 0.08, 'ks_c2': 0.06},
)
def _comb_scaling(params, ctx: RunContext) -> Measurement:
    comb = ProfileSpec.comb()
    schedule, replicas = params['schedule'], params['replicas']
    medians = []
    last = None
    for N in schedule:
        last = ctx.ensemble(comb, N, replicas, f"comb/{N}")
        c1 = continuity_jitter(last.final_k, ctx.rng("jitter", N), centered=True)
        medians.append(float(np.median(np.abs(c1))))
    fit = loglog_slope(list(zip(schedule, medians)))

    N = schedule[-1]
    c1 = continuity_jitter(last.final_k, ctx.rng("jitter", N), centered=True) / N ** 0.25
    ks_c1 = ks_statistic(c1, LimitLaw.u_root_abs_z())
    ks_c2 = ks_statistic(last.final_j / math.sqrt(N), LimitLaw.std_normal())
    slope_ok = abs(fit.slope - 0.25) <= params['tolerance']
    return Measurement(
        statistic=fit.slope, target=0.25, tolerance=params['tolerance'],
        passed=slope_ok and ks_c1 <= params['ks_c1'] and ks_c2 <= params['ks_c2'],
        N=N, replicas=replicas,
        details={'ks_c1': ks_c1, 'ks_c2': ks_c2, 'medians': medians, 'fit_residual': fit.residual},
        series={'median_abs_c1': fit.points()},
    )


@experiment(
    'comb-local-time',
    anchor="Theorem 3.1",
    claim="comb origin local time over N^{1/4} converges to 2|U|sqrt|V|",
    observable="Xi((0,0),N)/N^{1/4}",
    target="2|U|sqrt|V| law",
    profiles=(COMB,),
    full={'N': 1_000_000, 'replicas': 10_000, 'tolerance': 0.05},
    quick={'N': 100_000, 'replicas': 2_000, 'tolerance': 0.07},
)
def _comb_local_time(params, ctx: RunContext) -> Measurement:
    N, replicas = params['N'], params['replicas']
    ens = ctx.ensemble(ProfileSpec.comb(), N, replicas, "local-time")
    x = continuity_jitter(ens.returns, ctx.rng("jitter")) / N ** 0.25
    ks = ks_statistic(x, LimitLaw.two_abs_u_root_v())
    return Measurement(statistic=ks, target=0.0, tolerance=params['tolerance'],
                       passed=ks <= params['tolerance'], N=N, replicas=replicas,
                       details={'mean_local_time': float(ens.returns.mean())})


@experiment(
    'comb-tooth-local-time',
    anchor="Theorem 3.1",
    claim="a tooth site collects half the origin local time, a backbone site the same",
    observable="sum Xi((0,0)) / sum Xi((0,1)) and sum Xi((0,0)) / sum Xi((1,0))",
    target="2 and 1",
    profiles=(COMB,),
    full={'N': 1_000_000, 'replicas': 1_000, 'tolerance': 0.1},
    quick={'N': 100_000, 'replicas': 1_000, 'tolerance': 0.15},
)
def _comb_tooth_local_time(params, ctx: RunContext) -> Measurement:
    N, replicas = params['N'], params['replicas']
    comb = ProfileSpec.comb()
    ens = ctx.ensemble(comb, N, replicas, "tooth",
                       observer=ObserverConfig.tracked((0, 1), (1, 0)))
    origin = float(ens.returns.sum())
    tooth = origin / max(1.0, float(ens.tracked_column((0, 1)).sum()))
    backbone = origin / max(1.0, float(ens.tracked_column((1, 0)).sum()))
    targets = (float(local_time_ratio_limit(comb, (0, 1))), float(local_time_ratio_limit(comb, (1, 0))))
    worst = max(_relative_error(tooth, targets[0]), _relative_error(backbone, targets[1]))
    return Measurement(statistic=worst, target=0.0, tolerance=params['tolerance'],
                       passed=worst <= params['tolerance'], N=N, replicas=replicas,
                       details={'tooth_ratio': tooth, 'backbone_ratio': backbone,
                                'targets': list(targets)})


@experiment(
    'comb-ratio-ergodic',
    anchor="§2.1",
    claim="horizontal steps on the comb equal f-bar times the vertical visits to row 0",
    observable="median H_N / xi2(0, V_N)",
    target="f-bar = 1",
    profiles=(COMB,),
    full={'N': 1_000_000, 'replicas': 1_000, 'tolerance': 0.1},
    quick={'N': 10_000, 'replicas': 500, 'tolerance': 0.15},
)
def _comb_ratio_ergodic(params, ctx: RunContext) -> Measurement:
    N, replicas = params['N'], params['replicas']
    comb = ProfileSpec.comb()
    ens = ctx.ensemble(comb, N, replicas, "ratio-ergodic", engine='construction')
    # row-0 visits including time 0
    ratio = float(np.median(ens.h / (ens.xi2 + 1.0)))
    target = float(f_bar(comb))
    return Measurement(statistic=ratio, target=target, tolerance=params['tolerance'],
                       passed=_relative_error(ratio, target) <= params['tolerance'],
                       N=N, replicas=replicas)


# ==================== Power tails and HPHC ====================

@experiment(
    'powertail-exponents',
    anchor="§2.2, §2.4",
    claim="power-tail profiles: H_N ~ N^{(1+alpha)/2} for alpha < 1, C2 ~ N^{1/(1+alpha)} for alpha > 1",
    observable="median H_N (alpha = 1/2), interquartile range of C2(N) (alpha = 2)",
    target="slopes 3/4 and 1/3",
    profiles=('power-tail-2-0.5', POWER_TAIL),
    full={'schedule': SLOPE_SCHEDULE, 'replicas': 1_000, 'tolerance': 0.05},
    quick={'schedule': QUICK_SLOPE_SCHEDULE, 'replicas': 400, 'tolerance': 0.08},
)
def _powertail_exponents(params, ctx: RunContext) -> Measurement:
    schedule, replicas = params['schedule'], params['replicas']
    sub = ProfileSpec.power_tail(2.0, 0.5, 0.25)
    sup = ProfileSpec.power_tail(2.0, 2.0, 0.25)
    medians, iqrs = [], []
    for N in schedule:
        medians.append(float(np.median(ctx.ensemble(sub, N, replicas, f"alpha-half/{N}").h)))
        c2 = ctx.ensemble(sup, N, replicas, f"alpha-two/{N}", engine='construction').final_j
        iqrs.append(interquartile_range(continuity_jitter(c2, ctx.rng("jitter", N), centered=True)))
    fit_h = loglog_slope(list(zip(schedule, medians)))
    fit_c2 = loglog_slope(list(zip(schedule, iqrs)))
    dev = max(abs(fit_h.slope - 0.75), abs(fit_c2.slope - 1.0 / 3.0))
    return Measurement(
        statistic=dev, target=0.0, tolerance=params['tolerance'],
        passed=dev <= params['tolerance'], N=schedule[-1], replicas=replicas,
        details={'slope_h_n': fit_h.slope, 'slope_iqr_c2': fit_c2.slope},
        series={'median_h_n': fit_h.points(), 'iqr_c2': fit_c2.points()},
    )


@experiment(
    'hphc-asymmetry',
    anchor="Corollary 2.2",
    claim="half-plane half-comb walk reaches further into the comb half",
    observable="P(C2(N) < -c sqrt N) against P(C2(N) > c sqrt N)",
    target="two-proportion z-score at least 3",
    profiles=(HPHC,),
    full={'N': 1_000_000, 'replicas': 10_000, 'threshold': 1.2, 'tolerance': 3.0},
    quick={'N': 10_000, 'replicas': 2_000, 'threshold': 1.2, 'tolerance': 3.0},
)
def _hphc_asymmetry(params, ctx: RunContext) -> Measurement:
    N, replicas = params['N'], params['replicas']
    ens = ctx.ensemble(ProfileSpec.hphc(), N, replicas, "hphc")
    cut = params['threshold'] * math.sqrt(N)
    below = int(np.count_nonzero(ens.final_j < -cut))
    above = int(np.count_nonzero(ens.final_j > cut))
    z = two_proportion_z(below, replicas, above, replicas)
    return Measurement(statistic=z, target=params['tolerance'], tolerance=0.0,
                       passed=z >= params['tolerance'], N=N, replicas=replicas,
                       details={'below': below, 'above': above})


# ==================== Theory ====================

@experiment(
    'theory-self-check',
    anchor="Theorem 3.1, Theorem D",
    claim="limit-law quadrature, Gamma(1/4) and variance identities are sound",
    observable="sup distance quadrature vs direct normal-pair sampling",
    target="sup distance within tolerance, reflection residual below 1e-10",
    profiles=(),
    full={'samples': 10_000_000, 'grid_points': 1_000, 'tolerance': 0.003},
    quick={'samples': 1_000_000, 'grid_points': 200, 'tolerance': 0.006},
)
def _theory_self_check(params, ctx: RunContext) -> Measurement:
    failures = []
    distances = {}
    laws = (LimitLaw.two_abs_u_root_v(), LimitLaw.u_root_abs_z())
    for law, lo in zip(laws, (0.0, -12.0)):
        distances[law.name] = quadrature_vs_sampling(law, params['samples'], ctx.rng(law.name))
        values = np.asarray(law.cdf(np.linspace(lo, 12.0, params['grid_points'])))
        if np.any(np.diff(values) < -1e-9):
            failures.append(f"{law.name}: cdf not monotone")
        if values[0] > 1e-3 or values[-1] < 1.0 - 1e-3:
            failures.append(f"{law.name}: cdf boundary values {values[0]:.2e}, {values[-1]:.6f}")

    residual = reflection_residual()
    if residual > 1e-10:
        failures.append(f"reflection residual {residual:.2e}")
    for gamma in (1.0, 1.25, 1.5, 2.0, 3.0, 10.0):
        if abs(sum(theorem_d_variances(gamma)) - 1.0) > 1e-12:
            failures.append(f"variances at gamma={gamma} do not sum to 1")

    worst = max(distances.values())
    return Measurement(
        statistic=worst, target=0.0, tolerance=params['tolerance'],
        passed=worst <= params['tolerance'] and not failures,
        N=0, replicas=params['samples'],
        details={'sup_distance': distances, 'reflection_residual': residual,
                 'gamma_quarter': gamma_quarter(), 'failures': failures},
    )
