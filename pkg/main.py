"""
Main execution module: command line entry point for sampling, transforms, laws and verification suites.
"""

import argparse
import logging
import sys
from functools import partial

import pandas as pd

from config import (
    DEFAULT_GRID,
    DEFAULT_SEED,
    EXPERIMENTS,
    LAW_NAMES,
    SAMPLE_LAWS,
    SUITE_ALIASES,
    ExperimentConfig,
    build_config,
    env_seed,
)
from data_loader import load_experiment_config, load_paths_csv
from decomp import sample_law
from experiments import run_experiment
from lattice import z_pmf
from laws import named_law
from output_handler import law_table, paths_to_frame, pmf_to_frame, save_to_csv
from plot_data import FIGURES, emit_plot_data
from sampler import run_replicas
from transform import quantile_transform_bm, shift, vervaat
from utils import InvalidArgumentError, NumericError, ResourceLimitError

log = logging.getLogger(__name__)

# Default endpoint per sampler law
DEFAULT_LAMBDA = {'vbridge-pos': 1.0}


def build_argument_parser():
    parser = argparse.ArgumentParser(
        prog='vervaat',
        description='Vervaat transforms of random walks and Brownian paths: samplers, laws and checks.',
    )
    parser.add_argument('--log-level', default='WARNING',
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'], help='Logging level')
    parser.add_argument('--quiet', action='store_true', help='Suppress progress banners')
    sub = parser.add_subparsers(dest='command', required=True)

    sample = sub.add_parser('sample', help='Sample paths of one law to CSV')
    sample.add_argument('--law', required=True, choices=SAMPLE_LAWS)
    sample.add_argument('--lambda', dest='lam', type=float, default=None, help='Bridge endpoint')
    sample.add_argument('--grid', type=int, default=DEFAULT_GRID, help='Number of steps N')
    sample.add_argument('--reps', type=int, default=1, help='Number of paths')
    sample.add_argument('--seed', type=int, default=DEFAULT_SEED)
    sample.add_argument('--workers', type=int, default=1)
    sample.add_argument('--out', default='samples.csv', help='Output CSV path')

    transform = sub.add_parser('transform', help='Transform the paths of a CSV')
    transform.add_argument('--input', required=True, help='Path CSV with columns t_0..t_N')
    transform.add_argument('--kind', default='vervaat', choices=['vervaat', 'shift', 'quantile'])
    transform.add_argument('--u', type=float, default=None, help='Shift time for --kind shift')
    transform.add_argument('--out', default='transformed.csv', help='Output CSV path')

    enumerate_ = sub.add_parser('enumerate', help='Exact pmf of the first return of lattice bridges')
    enumerate_.add_argument('--n', type=int, required=True, help='Walk length')
    enumerate_.add_argument('--a', type=int, required=True, help='Negative endpoint with the parity of n')
    enumerate_.add_argument('--out', default=None, help='Output CSV path (default stdout)')

    laws = sub.add_parser('laws', help='Tabulate a law on a grid')
    laws.add_argument('--name', required=True, choices=LAW_NAMES)
    laws.add_argument('--lambda', dest='lam', type=float, default=None)
    laws.add_argument('--t', type=float, default=None, help='Time for time-indexed laws')
    laws.add_argument('--points', type=int, default=512)
    laws.add_argument('--out', default=None, help='Output CSV path (default stdout)')

    verify = sub.add_parser('verify', help='Run a verification suite')
    verify.add_argument('--suite', required=True, help=f'One of {sorted(EXPERIMENTS)} or {sorted(SUITE_ALIASES)}')
    verify.add_argument('--config', default=None, help='Flat JSON config file')
    verify.add_argument('--json', default=None, help='Report JSON path')
    verify.add_argument('--xlsx', default=None, help='Report workbook path')
    verify.add_argument('--lambda', dest='lambdas', type=float, nargs='+', default=None)
    verify.add_argument('--grid', type=int, default=None)
    verify.add_argument('--reps', dest='replicas', type=int, default=None)
    verify.add_argument('--t-grid', dest='t_grid', type=float, nargs='+', default=None)
    verify.add_argument('--seed', type=int, default=None)
    verify.add_argument('--workers', type=int, default=None)
    verify.add_argument('--output-dir', dest='output_dir', default=None)

    plot = sub.add_parser('plot-data', help='Write the tables behind the path figures')
    plot.add_argument('--figure', default='all', choices=list(FIGURES) + ['all'])
    plot.add_argument('--lambda', dest='lam', type=float, default=None)
    plot.add_argument('--grid', type=int, default=2 ** 10)
    plot.add_argument('--reps', type=int, default=3)
    plot.add_argument('--seed', type=int, default=DEFAULT_SEED)
    plot.add_argument('--output-dir', dest='output_dir', default='results')
    return parser


def _write(df, out, quiet):
    if out is None:
        df.to_csv(sys.stdout, index=False, float_format='%.17g', lineterminator='\n')
    else:
        save_to_csv(df, out, verbose=not quiet)


def _command_config(name, lam, grid, reps, seed, workers=1, output_dir='results'):
    lambdas = [] if lam is None else [lam]
    return ExperimentConfig(name, lambdas, grid, reps, seed=env_seed(seed), output_dir=output_dir,
                            workers=workers).validate()


def cmd_sample(args):
    lam = args.lam if args.lam is not None else DEFAULT_LAMBDA.get(args.law, -1.0)
    config = _command_config('sample', lam, args.grid, args.reps, args.seed, args.workers)
    samples = run_replicas(partial(sample_law, args.law, lam, config.grid), config.replicas, config.seed,
                           config.workers)
    _write(paths_to_frame(samples), args.out, args.quiet)
    return 0


def cmd_transform(args):
    paths, metadata = load_paths_csv(args.input)
    rows = []
    for path in paths:
        if args.kind == 'vervaat':
            result = vervaat(path)
            rows.append((result.path, {'argmin_index': result.argmin_index, 'A': result.split_time}))
        elif args.kind == 'shift':
            if args.u is None:
                raise InvalidArgumentError("--kind shift needs --u")
            rows.append((shift(path, args.u), {}))
        else:
            rows.append((quantile_transform_bm(path), {}))
    frame = paths_to_frame([path for path, _ in rows])
    extra = pd.DataFrame([info for _, info in rows], index=frame.index)
    # recomputed split columns replace stale ones carried in the input
    metadata = metadata.drop(columns=[c for c in extra.columns if c in metadata.columns]).reset_index(drop=True)
    frame = pd.concat([frame, extra, metadata], axis=1)
    _write(frame, args.out, args.quiet)
    return 0


def cmd_enumerate(args):
    _write(pmf_to_frame(z_pmf(args.n, args.a)), args.out, args.quiet)
    return 0


def cmd_laws(args):
    _write(law_table(named_law(args.name, args.lam, args.t), args.points), args.out, args.quiet)
    return 0


def cmd_verify(args):
    experiment = SUITE_ALIASES.get(args.suite, args.suite)
    base = load_experiment_config(args.config) if args.config else None
    overrides = {key: getattr(args, key) for key in
                 ('lambdas', 'grid', 'replicas', 't_grid', 'seed', 'workers', 'output_dir')}
    config = build_config(experiment, base, overrides)
    result = run_experiment(config, args.json, args.xlsx, args.quiet)
    if result.failures:
        print(f"Failing checks: {', '.join(result.failures)}", file=sys.stderr)
    return result.status


def cmd_plot_data(args):
    config = _command_config('plot-data', args.lam, args.grid, args.reps, args.seed, output_dir=args.output_dir)
    emit_plot_data(args.figure, config, verbose=not args.quiet)
    return 0


COMMANDS = {
    'sample': cmd_sample,
    'transform': cmd_transform,
    'enumerate': cmd_enumerate,
    'laws': cmd_laws,
    'verify': cmd_verify,
    'plot-data': cmd_plot_data,
}


def main(argv=None):
    """
    Main entry point.

    Returns:
        int: 0 on success, 1 on a failing suite or exhausted resources, 2 on usage errors
    """
    parser = build_argument_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format='%(levelname)s %(name)s: %(message)s')

    try:
        return COMMANDS[args.command](args)
    except FileNotFoundError as e:
        print(f"\nError: File not found - {e}", file=sys.stderr)
        return 2
    except (InvalidArgumentError, ValueError) as e:
        print(f"\nError: {e}", file=sys.stderr)
        return 2
    except (ResourceLimitError, NumericError) as e:
        print(f"\nError: {e}", file=sys.stderr)
        return 1
    except Exception as e:
        print(f"\nUnexpected error: {e}", file=sys.stderr)
        raise


if __name__ == "__main__":
    sys.exit(main())
