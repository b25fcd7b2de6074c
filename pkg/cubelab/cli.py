"""
Command line front end

Exit codes: 0 on success, 1 on usage or configuration errors, 2 when a numeric
task fails or a verify check does not pass.
"""

import argparse
import logging
import os
import sys
from dataclasses import replace
from typing import Optional, Sequence

from .config import CHECKS, DEFAULT_ALPHA, METHODS, ExperimentConfig, load_config
from .dynamics import Observable, SystemKind, SystemSpec
from .errors import CubelabError, TaskError, UsageError
from .harness import run

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2

PRESETS = {
    'one': lambda: Observable.constant(1.0),
    'cos': lambda: Observable.cosine(1),
    'exp': lambda: Observable.character(1),
    'expy': lambda: Observable.character(0, 1),
    'indicator': lambda: Observable.interval(0.0, 0.5),
}

# subcommand flag -> parameter key
_PARAMETER_FLAGS = ('L', 'k', 'N', 'H', 'H_inner', 'order', 'method', 'oversample', 'trials', 'horizons', 'check')


class CubelabArgumentParser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def _global_arguments(suppress: bool) -> argparse.ArgumentParser:
    """Flags accepted before or after the subcommand

    The copy attached to subcommands suppresses its defaults, so a flag given
    only before the subcommand keeps its value.
    """
    default = argparse.SUPPRESS if suppress else None
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument('--config', default=default, help='JSON experiment configuration')
    parent.add_argument('--out', default=default, help='CSV output path')
    parent.add_argument('--seed', type=int, default=default, help='master seed for randomized trials')
    parent.add_argument('--threads', type=int, default=default, help='worker threads for trials and horizons')
    parent.add_argument('--system', choices=[k.value for k in SystemKind], default=default)
    parent.add_argument('--alpha', type=float, default=default)
    parent.add_argument('--theta', type=float, default=default)
    parent.add_argument(
        '--system-seed', type=int, default=default, help='bit stream seed of the doubling map'
    )
    parent.add_argument('--path', default=default, help='CSV file or URL of an external sequence')
    parent.add_argument('--x0', type=float, nargs='+', default=default, help='start point')
    parent.add_argument(
        '--obs',
        action='append',
        choices=sorted(PRESETS),
        default=default,
        help='observable preset, repeat per role',
    )
    parent.add_argument(
        '--mean-zero',
        action='store_true',
        default=argparse.SUPPRESS if suppress else False,
        help='subtract each observable\'s integral',
    )
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = CubelabArgumentParser(
        prog='cubelab',
        description='Finite-N experiments on cube averages of dynamical systems',
        parents=[_global_arguments(suppress=False)],
    )
    shared = [_global_arguments(suppress=True)]

    sub = parser.add_subparsers(dest='task')

    orbit = sub.add_parser('orbit', parents=shared, help='write orbit samples')
    orbit.add_argument('--L', type=int)

    avg = sub.add_parser('avg', parents=shared, help='cube average at one horizon')
    avg.add_argument('--k', type=int)
    avg.add_argument('--N', type=int)
    avg.add_argument('--method', choices=METHODS)
    avg.add_argument('--trace', dest='horizons', help="horizons, e.g. '2^6..2^12' or '8,16,32'")

    ww = sub.add_parser('ww', parents=shared, help='Wiener-Wintner grid sup')
    ww.add_argument('--N', type=int)
    ww.add_argument('--oversample', type=int)

    seminorm = sub.add_parser('seminorm', parents=shared, help='order 2 or 3 seminorm estimate')
    seminorm.add_argument('--order', type=int, choices=(2, 3))
    seminorm.add_argument('--N', type=int)
    seminorm.add_argument('--H', type=int)
    seminorm.add_argument('--H-inner', dest='H_inner', type=int)

    verify = sub.add_parser('verify', parents=shared, help='finite-N checks of the bounds')
    verify.add_argument('check', choices=CHECKS)
    verify.add_argument('--N', type=int)
    verify.add_argument('--H', type=int)
    verify.add_argument('--k', type=int)
    verify.add_argument('--trials', type=int)
    verify.add_argument('--oversample', type=int)

    trace = sub.add_parser('trace', parents=shared, help='cube average along increasing horizons')
    trace.add_argument('--k', type=int)
    trace.add_argument('--horizons')

    return parser


def _system_from_args(args: argparse.Namespace) -> SystemSpec:
    kind = SystemKind(args.system)
    alpha = args.alpha
    if alpha is None:
        alpha = 0.0 if kind in (SystemKind.DOUBLING, SystemKind.EXTERNAL_SEQUENCE) else DEFAULT_ALPHA
    theta = args.theta
    if theta is None:
        theta = DEFAULT_ALPHA / 2 if kind is SystemKind.PRODUCT_ROTATION else 0.0
    return SystemSpec(
        kind=kind, alpha=alpha, theta=theta, seed=args.system_seed or 0, path=args.path
    )


def _apply_environment(config: ExperimentConfig, environ) -> None:
    if environ.get('CUBELAB_SEED'):
        config.seed = environ['CUBELAB_SEED']
    if environ.get('CUBELAB_THREADS'):
        config.threads = environ['CUBELAB_THREADS']
    if environ.get('CUBELAB_OUT'):
        config.output = environ['CUBELAB_OUT']


def config_from_args(args: argparse.Namespace, environ=None) -> ExperimentConfig:
    """Merge config file, environment and flags (in that order) into a validated config"""
    environ = os.environ if environ is None else environ
    if args.config:
        config = load_config(args.config)
    elif args.task is None:
        raise UsageError("cubelab: a subcommand or --config is required")
    else:
        config = ExperimentConfig(parameters={})

    _apply_environment(config, environ)

    task = args.task
    if task is not None:
        if task == 'avg' and args.horizons:
            task = 'trace'
        if task != config.task:
            config.parameters = {}
        config.task = task
        for key in _PARAMETER_FLAGS:
            value = getattr(args, key, None)
            if value is not None:
                config.parameters[key] = value

    if args.system is not None:
        config.system = _system_from_args(args)
    if args.x0 is not None:
        config.x0 = tuple(args.x0)
    if args.obs:
        config.observables = {f'f{i}': PRESETS[name]() for i, name in enumerate(args.obs, start=1)}
    if args.mean_zero:
        config.observables = {
            name: replace(obs, mean_zero=True) for name, obs in config.observables.items()
        }
    if args.seed is not None:
        config.seed = args.seed
    if args.threads is not None:
        config.threads = args.threads
    if args.out is not None:
        config.output = args.out

    return ExperimentConfig.normalize(config)


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(
        level=os.environ.get('LOG_LEVEL', 'INFO').upper(),
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = config_from_args(args)
    except CubelabError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"error: cannot read configuration: {e}", file=sys.stderr)
        return EXIT_USAGE

    try:
        report = run(config)
    except TaskError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE if isinstance(e.__cause__, (ValueError, OSError)) else EXIT_NUMERIC
    except CubelabError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERIC

    print(report.summary())
    if report.passed is False:
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
