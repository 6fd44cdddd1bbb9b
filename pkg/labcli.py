#!/usr/bin/env python3
"""
🧭 Anisotropic Walk Lab - command line
ממשק שורת הפקודה של המעבדה

Subcommands:
    simulate          run replicas of one profile and print summary statistics
    classify          recurrence/transience report
    theory            print a closed-form formula, exponent or constant table
    oracle            dump an exact small-N distribution
    verify NAME|all   run registered experiments against their targets
    list-experiments  registry listing

Exit codes: 0 all verifications passed, 1 any failed, 2 usage error.
"""

import argparse
import json
import sys
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
from colorama import Fore, Style, init as colorama_init

from classifier import ClassifierInputError, classify
from config_manager import ConfigError, ConfigManager, get_config, get_profile_config, reset_config
from engine import ENGINES, MemoryBudgetError, ObserverConfig, SEED_RULE, run_ensemble
from experiments import (
    REGISTRY, ExperimentOutcome, UnknownExperimentError, build_spec, list_experiments,
    run_experiment,
)
from logging_system import get_logger, log_startup_info
from oracle import (
    OracleLimitError, exact_expected_range, exact_origin_local_time_distribution,
    exact_site_distribution, return_probability_series,
)
from outcome_store import FORMATS, ExportError, OutcomeStore
from profiles import InvalidProfileError, ProfileSpec, bundled_profiles, profile_from_config
from theory import (
    FORMULAS, FormulaDomainError, LimitLaw, UnknownCaseError, gamma_quarter, lil_constants,
    reflection_residual, scaling_exponents, theorem_d_variances,
)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

USAGE_ERRORS = (ConfigError, InvalidProfileError, UnknownExperimentError, FormulaDomainError,
                UnknownCaseError, OracleLimitError, ClassifierInputError, ExportError,
                MemoryBudgetError, ValueError)

LAWS = {
    'exponential1': LimitLaw.exponential1,
    'std-normal': LimitLaw.std_normal,
    'two-abs-u-root-v': LimitLaw.two_abs_u_root_v,
    'u-root-abs-z': LimitLaw.u_root_abs_z,
}


def nonnegative_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got '{text}'")
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {value}")
    return value


def positive_int(text: str) -> int:
    value = nonnegative_int(text)
    if value == 0:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return value


def site_arg(text: str):
    try:
        k, j = (int(part) for part in text.split(','))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a site as k,j, got '{text}'")
    return k, j


def _emit(data):
    print(json.dumps(data, indent=2, default=str))


# ==================== Parser ====================

def _profile_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_argument_group('profile (default: the config file profile section)')
    group.add_argument('--profile', choices=sorted(bundled_profiles()),
                       help='one of the bundled profiles')
    group.add_argument('--kind', choices=['constant', 'periodic', 'comb', 'hphc', 'power_tail', 'table'])
    group.add_argument('--p', help='constant p, e.g. 1/4')
    group.add_argument('--values', help='periodic values, comma separated')
    group.add_argument('--gamma', type=float)
    group.add_argument('--alpha', type=float)
    group.add_argument('--p0', type=float)
    group.add_argument('--table', help='table rows as j:p pairs, comma separated')
    group.add_argument('--default', help='table default p')
    return parent


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='YAML config file (default: config.yaml)')
    common.add_argument('--quiet', action='store_true', help='no progress bars')
    profile = _profile_options()

    parser = argparse.ArgumentParser(
        prog='labcli', description='Anisotropic random walk simulation and verification lab')
    sub = parser.add_subparsers(dest='command', required=True)

    sim = sub.add_parser('simulate', parents=[common, profile], help='run replicas of one profile')
    sim.add_argument('--N', type=nonnegative_int, required=True, help='steps per replica')
    sim.add_argument('--replicas', type=positive_int, default=1)
    sim.add_argument('--seed', type=nonnegative_int, required=True)
    sim.add_argument('--engine', choices=ENGINES, default='direct')
    sim.add_argument('--observer', choices=['counters', 'full'], default='counters')
    sim.add_argument('--track', type=site_arg, action='append', default=[],
                     help='record the local time of site k,j (repeatable)')
    sim.add_argument('--jobs', type=positive_int)

    cls = sub.add_parser('classify', parents=[common, profile], help='recurrence/transience report')
    cls.add_argument('--k-max', type=positive_int)
    cls.add_argument('--margin', type=float)

    theory = sub.add_parser('theory', parents=[common], help='closed-form reference values')
    theory.add_argument('query', choices=['formula', 'exponents', 'lil', 'variances', 'cdf',
                                          'gamma-quarter', 'formulas'])
    theory.add_argument('--name', choices=sorted(FORMULAS))
    theory.add_argument('--case', choices=['comb', 'periodic', 'hphc', 'power_tail'])
    theory.add_argument('--gamma', type=float)
    theory.add_argument('--alpha', type=float)
    theory.add_argument('--p0', type=float)
    theory.add_argument('--N', type=float)
    theory.add_argument('--law', choices=sorted(LAWS) + ['scaled-normal'])
    theory.add_argument('--variance', type=float, default=1.0)
    theory.add_argument('--x', type=float, action='append', default=[])

    oracle = sub.add_parser('oracle', parents=[common, profile], help='exact small-N distributions')
    oracle.add_argument('what', choices=['sites', 'local-time', 'range', 'returns'])
    oracle.add_argument('--N', type=nonnegative_int, required=True)

    verify = sub.add_parser('verify', parents=[common], help='run experiments against their targets')
    verify.add_argument('name', help="experiment name or 'all'")
    verify.add_argument('--seed', type=nonnegative_int, required=True, help='master seed (mandatory)')
    verify.add_argument('--quick', action='store_true', help='smoke-scale parameter set (default: experiment.quick)')
    verify.add_argument('--jobs', type=positive_int)
    verify.add_argument('--replicas', type=positive_int, help='override the replica count')
    verify.add_argument('--format', choices=FORMATS)
    verify.add_argument('--output-dir', help='default: output.dir or AW_OUTPUT_DIR')
    verify.add_argument('--no-plot-data', action='store_true')

    lst = sub.add_parser('list-experiments', parents=[common], help='registry listing')
    lst.add_argument('--json', action='store_true')
    return parser


# ==================== Helpers ====================

def _load_config(args):
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"Config file not found: {path}")
        reset_config()
        ConfigManager(str(path))
    config = get_config()
    if not config.validate():
        raise ConfigError("Configuration failed validation")
    if getattr(args, 'quiet', False):
        config.set('parallel.progress', False)
    if getattr(args, 'jobs', None):
        config.set('parallel.jobs', args.jobs)
    if getattr(args, 'output_dir', None):
        config.set('output.dir', args.output_dir)
    if getattr(args, 'format', None):
        config.set('output.format', args.format)
    return config


def profile_from_args(args) -> ProfileSpec:
    """--profile, then --kind with its keys, then the config file"""
    if args.profile:
        return bundled_profiles()[args.profile]
    if not args.kind:
        return profile_from_config(get_profile_config())

    section: Dict = {'kind': args.kind}
    if args.p is not None:
        section['p'] = args.p
    if args.values:
        section['values'] = [v for v in args.values.split(',') if v]
    for key in ('gamma', 'alpha', 'p0'):
        if getattr(args, key) is not None:
            section[key] = getattr(args, key)
    if args.table:
        rows = {}
        for pair in args.table.split(','):
            j, _, p = pair.partition(':')
            rows[int(j)] = p
        section['table'] = rows
    if args.default is not None:
        section['default'] = args.default
    return profile_from_config(section)


def _progress_enabled() -> bool:
    return bool(get_config().get('parallel.progress', True)) and sys.stderr.isatty()


def _describe(values: np.ndarray) -> Dict[str, float]:
    values = np.asarray(values, dtype=np.float64)
    return {'mean': float(values.mean()), 'var': float(values.var()),
            'min': float(values.min()), 'max': float(values.max())}


# ==================== Commands ====================

def cmd_simulate(args) -> int:
    profile = profile_from_args(args)
    observer = (ObserverConfig.full(args.track) if args.observer == 'full'
                else ObserverConfig.tracked(*args.track) if args.track
                else ObserverConfig.counters())
    ens = run_ensemble(profile, args.N, args.replicas, args.seed, engine=args.engine,
                       observer=observer, jobs=args.jobs, progress=_progress_enabled())
    report = {
        'profile': ens.profile, 'engine': ens.engine, 'N': ens.N, 'replicas': ens.replicas,
        'seed': ens.seed, 'seed_rule': SEED_RULE,
        'C1': _describe(ens.final_k), 'C2': _describe(ens.final_j),
        'H_N': _describe(ens.h), 'V_N': _describe(ens.v),
        'origin_local_time': _describe(ens.returns), 'xi2_zero': _describe(ens.xi2),
    }
    for i, site in enumerate(ens.tracked_sites):
        report[f"local_time({site.k},{site.j})"] = _describe(ens.tracked[:, i])
    if ens.ranges is not None:
        report['range'] = _describe(ens.ranges)
    if ens.replicas <= 20:
        report['per_replica'] = [
            {'final': [int(k), int(j)], 'H_N': int(h), 'V_N': int(v), 'returns': int(r)}
            for k, j, h, v, r in zip(ens.final_k, ens.final_j, ens.h, ens.v, ens.returns)
        ]
    _emit(report)
    return EXIT_OK


def cmd_classify(args) -> int:
    config = get_config()
    profile = profile_from_args(args)
    report = classify(
        profile,
        K_max=args.k_max or int(config.get('classifier.k_max', 100_000)),
        margin=args.margin if args.margin is not None else float(config.get('classifier.margin', 0.1)),
        max_residual=float(config.get('classifier.max_residual', 0.05)),
    )
    _emit(report.to_dict())
    print()
    print(report.table())
    return EXIT_OK


def _require(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise ValueError(f"missing option(s): {', '.join('--' + n for n in missing)}")


def cmd_theory(args) -> int:
    query = args.query
    if query == 'formulas':
        _emit({name: {'parameters': list(f.parameters), 'validity': f.validity}
               for name, f in FORMULAS.items()})
    elif query == 'formula':
        _require(args, 'name')
        formula = FORMULAS[args.name]
        _require(args, *formula.parameters)
        values = [getattr(args, p) for p in formula.parameters]
        _emit({'formula': formula.name, 'arguments': dict(zip(formula.parameters, values)),
               'value': formula(*values), 'validity': formula.validity})
    elif query == 'exponents':
        _require(args, 'case')
        _emit({'case': args.case, 'exponents': scaling_exponents(args.case, args.alpha)})
    elif query == 'lil':
        _require(args, 'case')
        _emit({'case': args.case, 'constants': lil_constants(args.case, args.gamma, args.p0),
               'note': 'almost-sure constants, reference only'})
    elif query == 'variances':
        _require(args, 'gamma')
        _emit({'gamma': args.gamma, 'variances': list(theorem_d_variances(args.gamma))})
    elif query == 'cdf':
        _require(args, 'law')
        law = (LimitLaw.scaled_normal(args.variance) if args.law == 'scaled-normal'
               else LAWS[args.law]())
        xs = args.x or [0.5, 1.0, 2.0]
        _emit({'law': law.name, 'identity': law.identity,
               'cdf': [[x, float(law.cdf(x))] for x in xs]})
    else:
        _emit({'gamma_quarter': gamma_quarter(), 'reflection_residual': reflection_residual()})
    return EXIT_OK


def cmd_oracle(args) -> int:
    profile = profile_from_args(args)
    N = args.N
    if args.what == 'sites':
        _emit({'profile': profile.label, **exact_site_distribution(profile, N).to_dict()})
    elif args.what == 'local-time':
        law = exact_origin_local_time_distribution(profile, N)
        _emit({'profile': profile.label, 'N': N,
               'law': [{'visits': v, 'p': str(m), 'p_float': float(m)} for v, m in law.items()]})
    elif args.what == 'range':
        value = exact_expected_range(profile, N)
        _emit({'profile': profile.label, 'N': N, 'expected_range': str(value),
               'expected_range_float': float(value)})
    else:
        series = return_probability_series(profile, N)
        _emit({'profile': profile.label, 'n_max': N,
               'return_probability': [[n, float(p)] for n, p in enumerate(series)]})
    return EXIT_OK


def _print_outcome(outcome: ExperimentOutcome):
    color = Fore.GREEN if outcome.passed else Fore.RED
    status = "PASS" if outcome.passed else "FAIL"
    print(f"{color}{status}{Style.RESET_ALL} {outcome.experiment:<28} "
          f"statistic={outcome.statistic:.6g} target={outcome.target:.6g} "
          f"tolerance={outcome.tolerance:.6g} ({outcome.wall_time:.1f}s)")


def cmd_verify(args) -> int:
    config = get_config()
    names: List[str] = list(REGISTRY) if args.name == 'all' else [args.name]
    overrides = {'replicas': args.replicas} if args.replicas else {}
    quick = args.quick or bool(config.get('experiment.quick', False))
    specs = [build_spec(name, args.seed, quick=quick, overrides=overrides) for name in names]

    store = OutcomeStore()
    fmt = config.get('output.format', 'json')
    plot_data = bool(config.get('output.plot_data', True)) and not args.no_plot_data
    logger = get_logger('main')

    outcomes: List[ExperimentOutcome] = []
    failed: List[str] = []
    for spec in specs:
        try:
            outcome = run_experiment(spec, jobs=args.jobs, progress=_progress_enabled())
        except Exception as e:
            logger.error(f"❌ {spec.name} raised {type(e).__name__}: {e}")
            print(f"{Fore.RED}ERROR{Style.RESET_ALL} {spec.name}: {e}")
            failed.append(spec.name)
            continue
        store.export(outcome, fmt=fmt, plot_data=plot_data)
        store.archive(outcome)
        _print_outcome(outcome)
        outcomes.append(outcome)
        if not outcome.passed:
            failed.append(spec.name)

    if fmt == 'csv' and len(outcomes) > 1:
        store.write_csv(outcomes)
    print(f"\n{len(specs) - len(failed)}/{len(specs)} passed; outputs in {store.output_dir}")
    return EXIT_FAILED if failed else EXIT_OK


def cmd_list(args) -> int:
    rows = list_experiments()
    if args.json:
        _emit(rows)
        return EXIT_OK
    width = max(len(r['name']) for r in rows)
    for r in rows:
        print(f"{r['name']:<{width}}  [{r['anchor']}] {r['claim']}")
        print(f"{'':<{width}}  target: {r['target']}")
    print(f"\n{len(rows)} experiments")
    return EXIT_OK


COMMANDS = {
    'simulate': cmd_simulate,
    'classify': cmd_classify,
    'theory': cmd_theory,
    'oracle': cmd_oracle,
    'verify': cmd_verify,
    'list-experiments': cmd_list,
}


def main(argv: Optional[List[str]] = None) -> int:
    colorama_init()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE

    try:
        _load_config(args)
        log_startup_info(args.command)
        return COMMANDS[args.command](args)
    except USAGE_ERRORS as e:
        print(f"{Fore.RED}error:{Style.RESET_ALL} {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
