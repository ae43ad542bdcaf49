#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import argparse
import json
import logging
import sys

from elda import __version__
from elda.exceptions import EldaException
from elda.harness import charts, experiments
from elda.harness.scenarios import list_scenarios, load_settings

logger = logging.getLogger('elda')


def _global_options():
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument('--seed', type=int, default=None, help='override the scenario or experiment seed')
    parent.add_argument('--scale', type=float, default=1.0,
                        help='divide rates, catalog and table capacities by this factor')
    parent.add_argument('--detector', choices=('elda', 'strawman', 'freq'), default=None,
                        help='detector backing the prefix monitors')
    parent.add_argument('--out', default='./elda-out', help='artifact directory')
    parent.add_argument('--settings', default=None, help='JSON settings overlaid on the defaults')
    parent.add_argument('--workers', type=int, default=None, help='worker processes for sweeps')
    verbosity = parent.add_mutually_exclusive_group()
    verbosity.add_argument('--debug', action='store_true', help='log at DEBUG level')
    verbosity.add_argument('--quiet', action='store_true', help='log warnings and errors only')
    return parent


def build_parser():
    parent = _global_options()
    parser = argparse.ArgumentParser(prog='elda',
                                     description='Cache pollution attack detection experiments for NDN.')
    parser.add_argument('--version', action='version', version='%(prog)s {}'.format(__version__))
    sub = parser.add_subparsers(dest='command')
    sub.required = True

    run = sub.add_parser('run', parents=[parent], help='simulate one scenario with the detector attached')
    run.add_argument('scenario', help='scenario name (see `list`) or path to a scenario file')

    sweep = sub.add_parser('sweep', parents=[parent], help='run every shipped scenario and score detection')
    sweep.add_argument('--seeds', type=int, nargs='+', default=None, help='repeat the sweep under these seeds')
    sweep.add_argument('scenarios', nargs='*', help='restrict the sweep to these scenarios')

    accuracy = sub.add_parser('accuracy', parents=[parent], help='estimation accuracy against an exact counter')
    accuracy.add_argument('--trials', type=int, default=30)
    accuracy.add_argument('--cardinalities', type=int, nargs='+', default=None)

    complexity = sub.add_parser('complexity', parents=[parent], help='operation counts per insert')
    complexity.add_argument('--inserts', type=int, default=10 ** 6)
    complexity.add_argument('--hll-inserts', type=int, default=10 ** 5)

    calibrate = sub.add_parser('calibrate', parents=[parent], help='fit the estimator constant')
    calibrate.add_argument('--trials', type=int, default=50)
    calibrate.add_argument('--kinds', nargs='+', choices=('lfm', 'hll'), default=['lfm', 'hll'])

    bench = sub.add_parser('bench', parents=[parent], help='insert-path throughput per detector mode')
    bench.add_argument('--interests', type=int, default=10 ** 6)
    bench.add_argument('--bitmaps', type=int, default=256)

    chart = sub.add_parser('chart', parents=[parent], help='render SVG charts from run artifacts')
    chart.add_argument('source', nargs='?', default=None, help='artifact directory (defaults to --out)')

    sub.add_parser('resources', parents=[parent], help='detector memory and CPU per interest')
    sub.add_parser('list', parents=[parent], help='list shipped scenarios')
    return parser


def _configure_logging(args):
    level = logging.DEBUG if args.debug else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format='%(asctime)s:%(levelname)s:%(name)s:%(message)s')


def dispatch(args):
    seed = args.seed if args.seed is not None else 0
    if args.command == 'list':
        for name, description in experiments.describe_scenarios():
            print('{:<26} {}'.format(name, description))
        return None
    if args.command == 'run':
        return experiments.cmd_run(args.scenario, load_settings(args.settings), args.out, args.detector, args.seed,
                                   args.scale)
    if args.command == 'sweep':
        seeds = args.seeds or ([args.seed] if args.seed is not None else None)
        return experiments.cmd_sweep(load_settings(args.settings), args.out, args.detector, seeds, args.scale,
                                     args.workers, args.scenarios or list_scenarios())
    if args.command == 'accuracy':
        return experiments.cmd_accuracy(args.out, args.trials, seed, args.cardinalities)
    if args.command == 'complexity':
        return experiments.cmd_complexity(args.out, args.inserts, args.hll_inserts, seed)
    if args.command == 'calibrate':
        return experiments.cmd_calibrate(args.out, args.trials, seed, tuple(args.kinds))
    if args.command == 'bench':
        return experiments.cmd_bench(args.out, args.interests, args.bitmaps, seed)
    if args.command == 'chart':
        return charts.cmd_chart(args.source or args.out, args.out)
    if args.command == 'resources':
        return experiments.cmd_resources(args.out, seed)
    raise EldaException('unknown command {}'.format(args.command))


def main(argv=None):
    args = build_parser().parse_args(argv)
    _configure_logging(args)
    try:
        dispatch(args)
    except EldaException as e:
        print(json.dumps({'error': e.__str__(), 'type': type(e).__name__}))
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
