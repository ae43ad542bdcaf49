#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
# Experiment drivers behind the harness subcommands. Each driver returns plain
# data (lists and dicts) so it can run inside a worker process; the cmd_* wrappers
# write the artifacts.

import copy
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from elda import sketch_mapping
from elda.baselines import ExactCounter, HyperloglogFmSketch
from elda.detector import Detector, bench_insert_path, score_run
from elda.harness import artifacts
from elda.harness.scenarios import ScenarioSpec, list_scenarios, load_scenario, load_settings, validate
from elda.lfm_sketch import (LfmSketch, SketchConfig, expected_identifier_visits, expected_insert_cost,
                             closed_form_cost_bound)
from elda.ndn_sim import build_topology, run
from elda.ndn_sim import topology_mapping
from elda.ndn_sim.metrics import METRICS_FIELDS, METRICS_SCHEMA
from elda.threshold_mc import ThresholdConfig

logger = logging.getLogger(__name__)

DETECTION_SCHEMA = 'detection v1'
DETECTION_FIELDS = ('epoch', 'prefix', 'statistic', 'threshold', 'alarm_flag', 'router')
SUMMARY_SCHEMA = 'sweep-summary v1'
SUMMARY_FIELDS = ('scenario', 'seed', 'detector', 'control', 'attacks', 'detected', 'detection_rate', 'alarms',
                  'false_positives', 'false_positive_rate', 'monitored_epochs')
ACCURACY_SCHEMA = 'accuracy v1'
ACCURACY_FIELDS = ('N', 'sketch', 'cardinality', 'trials', 'mean_estimate', 'mean_ratio', 'ratio_std',
                   'reference_se')


def _merge_settings(settings, scenario_settings):
    scenario_settings = copy.deepcopy(scenario_settings)
    scenario_settings.get('simulation', {}).pop('scale', None)
    merged = copy.deepcopy(settings)
    for section, values in scenario_settings.items():
        if isinstance(values, dict):
            merged.setdefault(section, {}).update(values)
        else:
            merged[section] = values
    validate(merged, 'settings-schema.json', 'scenario settings')
    return merged


def make_detector(settings, mode=None):
    mode = mode or settings.get('detector', {}).get('mode', 'elda')
    return Detector(mode, SketchConfig.from_dict(settings['sketch']),
                    ThresholdConfig.from_dict(settings['threshold']))


def placement_for(spec, settings):
    placement = settings.get('detector', {}).get('placement')
    if placement:
        return list(placement)
    flagged = [n['id'] for n in spec.topology['nodes'] if n.get('detector')]
    return flagged or ['gateway']


def run_scenario(spec, settings, mode=None, seed=None):
    """Simulates one scenario with detectors attached and scores the alarms."""
    spec = load_scenario(spec)
    settings = _merge_settings(settings, spec.settings)
    seed = spec.seed if seed is None else int(seed)
    scale = spec.scale
    sim = settings['simulation']
    network = build_topology(spec.topology, seed,
                             cs_capacity=int(math.ceil(sim['cs_capacity'] / scale)),
                             pit_capacity=max(1, int(math.ceil(sim['pit_capacity'] / scale))),
                             pit_timeout=sim['pit_timeout'], queue_limit=sim['queue_limit'])
    for consumer in network.consumers:
        consumer.retx_timeout = sim['retx_timeout']
        consumer.max_retx = sim['max_retx']
    network.configure_traffic(spec.regular, spec.attack)
    detectors = {}
    for router_id in placement_for(spec, settings):
        detectors[router_id] = make_detector(settings, mode)
        network.attach_detector(router_id, detectors[router_id])
    logger.info('scenario %s (seed %d, scale %g, detector %s) started', spec.name, seed, scale,
                next(iter(detectors.values())).mode)
    started = time.perf_counter()
    trace = run(network, spec.duration, seed, spec.warmup, settings['epoch_length'])
    alarms = network.alarms()
    detection_rows = []
    for router_id in sorted(detectors):
        detection_rows.extend(row.as_row() + [router_id] for row in detectors[router_id].trace)
    report = score_run(alarms, spec.schedule, settings['epoch_length'], trace=detection_rows)
    summary = report.to_dict()
    summary.update({'scenario': spec.name, 'seed': seed, 'detector': next(iter(detectors.values())).mode,
                    'control': spec.control, 'scale': scale,
                    'monitored_epochs': int(spec.duration / settings['epoch_length']),
                    'counters': network.counters(), 'runtime_s': round(time.perf_counter() - started, 3)})
    logger.info('scenario %s finished: detection %s, false positive rate %.3f', spec.name,
                summary['detection_rate'], summary['false_positive_rate'])
    return {
        'name': spec.name,
        'metrics': [row.as_row() for row in trace.rows],
        'detection': detection_rows,
        'alarms': [alarm.to_dict() for alarm in alarms],
        'report': summary,
    }


def write_run_artifacts(result, out):
    artifacts.ensure_dir(out)
    name = result['name']
    paths = [
        artifacts.write_csv(os.path.join(out, 'metrics_{}.csv'.format(name)), METRICS_SCHEMA, METRICS_FIELDS,
                            result['metrics']),
        artifacts.write_csv(os.path.join(out, 'detection_{}.csv'.format(name)), DETECTION_SCHEMA,
                            DETECTION_FIELDS, result['detection']),
        artifacts.write_jsonl(os.path.join(out, 'alarms_{}.jsonl'.format(name)), result['alarms']),
        artifacts.write_json(os.path.join(out, 'report_{}.json'.format(name)), result['report']),
    ]
    return paths


def _scenario_for(name, scale):
    spec = load_scenario(name)
    return spec.scaled(scale) if scale != 1 else spec


def cmd_run(scenario, settings, out, mode=None, seed=None, scale=1):
    result = run_scenario(_scenario_for(scenario, scale), settings, mode, seed)
    write_run_artifacts(result, out)
    return result['report']


def _sweep_job(job):
    name, settings, out, mode, seed, scale = job
    result = run_scenario(_scenario_for(name, scale), settings, mode, seed)
    write_run_artifacts(result, os.path.join(out, 'seed{}'.format(seed)) if seed is not None else out)
    return result['report']


def summary_row(report):
    rate = report['detection_rate']
    return [report['scenario'], report['seed'], report['detector'], int(report['control']), report['attacks'],
            report['detected'], rate if rate == 'N/A' else '{:.4f}'.format(rate), report['alarms'],
            report['false_positives'], '{:.4f}'.format(report['false_positive_rate']), report['monitored_epochs']]


def cmd_sweep(settings, out, mode=None, seeds=None, scale=1, workers=None, scenarios=None):
    names = scenarios or list_scenarios()
    seeds = seeds or [None]
    jobs = [(name, settings, out, mode, seed, scale) for seed in seeds for name in names]
    workers = workers or os.cpu_count() or 1
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_sweep_job, jobs))
    else:
        reports = [_sweep_job(job) for job in jobs]
    artifacts.ensure_dir(out)
    artifacts.write_csv(os.path.join(out, 'sweep_summary.csv'), SUMMARY_SCHEMA, SUMMARY_FIELDS,
                        [summary_row(r) for r in reports])
    return reports


def _stream(tag, cardinality):
    return ['{}:{}'.format(tag, i) for i in range(cardinality)]


def accuracy_table(grid=None, cardinalities=(0, 10 ** 3, 10 ** 4, 10 ** 5), trials=30, seed=0,
                   calibration=sketch_mapping.default_calibration):
    """Bias and spread of Est/true for each sketch and N over seeded trials."""
    grid = grid or [{'N': 256, 'sketches': ['lfm', 'hll']}, {'N': 1024, 'sketches': ['lfm']}]
    rows = []
    for entry in grid:
        N = entry['N']
        for cardinality in cardinalities:
            estimates = {kind: [] for kind in entry['sketches']}
            for trial in range(trials):
                items = _stream('{}-{}-{}'.format(seed, N, trial), cardinality)
                exact = ExactCounter().insert_many(items).count
                for kind in entry['sketches']:
                    if kind == 'lfm':
                        sketch = LfmSketch(SketchConfig(N=N, hash_seed=seed * 1000 + trial,
                                                        pattern_seed=seed * 1000 + trial, calibration=calibration))
                    else:
                        sketch = HyperloglogFmSketch(N, seed_base=(seed * 1000 + trial) * N, calibration=calibration)
                    estimates[kind].append((sketch.insert_many(items).estimate(), exact))
            for kind, pairs in estimates.items():
                values = np.array([e for e, _ in pairs])
                if cardinality:
                    ratios = np.array([e / float(t) for e, t in pairs])
                    mean_ratio, ratio_std = float(ratios.mean()), float(ratios.std(ddof=1))
                else:
                    mean_ratio, ratio_std = None, None
                rows.append({'N': N, 'sketch': kind, 'cardinality': cardinality, 'trials': trials,
                             'mean_estimate': float(values.mean()), 'mean_ratio': mean_ratio,
                             'ratio_std': ratio_std, 'reference_se': 0.78 / math.sqrt(N)})
                logger.info('accuracy N=%d %s n=%d: mean ratio %s, std %s', N, kind, cardinality, mean_ratio,
                            ratio_std)
    return rows


def cmd_accuracy(out, trials=30, seed=0, cardinalities=None, grid=None):
    rows = accuracy_table(grid, cardinalities or (0, 10 ** 3, 10 ** 4, 10 ** 5), trials, seed)

    def fmt(value):
        return '' if value is None else '{:.6f}'.format(value)
    artifacts.ensure_dir(out)
    artifacts.write_csv(os.path.join(out, 'accuracy.csv'), ACCURACY_SCHEMA, ACCURACY_FIELDS,
                        [[r['N'], r['sketch'], r['cardinality'], r['trials'], fmt(r['mean_estimate']),
                          fmt(r['mean_ratio']), fmt(r['ratio_std']), fmt(r['reference_se'])] for r in rows])
    return rows


def complexity_report(inserts=10 ** 6, hll_inserts=10 ** 5, config=None, seed=0):
    config = config or SketchConfig(M=sketch_mapping.reference_substrings, hash_seed=seed, pattern_seed=seed)
    lfm = LfmSketch(config)
    lfm.insert_many(_stream('cx{}'.format(seed), inserts))
    counter = lfm.op_counter
    lfm_cost = (counter.substring_scans + counter.pattern_steps) / float(inserts)
    hll = HyperloglogFmSketch(config.N, config.L, seed_base=seed)
    hll.insert_many(_stream('hx{}'.format(seed), hll_inserts))
    hll_scans = hll.op_counter.substring_scans / float(hll_inserts)
    hll_formula = config.N * (2 - 0.5 ** (config.L - 1))
    expected = expected_insert_cost(config.L, config.M, config.N)
    bound = closed_form_cost_bound(config.L, config.M, config.N)
    report = {
        'config': config.to_dict(),
        'lfm': {
            'inserts': inserts,
            'hash_ops_per_insert': counter.hash_ops / float(inserts),
            'substring_scans_per_insert': counter.substring_scans / float(inserts),
            'pattern_steps_per_insert': counter.pattern_steps / float(inserts),
            'cost_per_insert': lfm_cost,
            'closed_form_bound': bound,
            'expected_cost': expected,
            'expected_identifier_visits': expected_identifier_visits(config.L, config.M),
            'within_expected': lfm_cost <= expected * 1.02,
            'within_closed_form_bound': lfm_cost <= bound,
        },
        'hll': {
            'inserts': hll_inserts,
            'hash_ops_per_insert': hll.op_counter.hash_ops / float(hll_inserts),
            'scans_per_insert': hll_scans,
            'formula': hll_formula,
            'within_5_percent': abs(hll_scans - hll_formula) <= 0.05 * hll_formula,
        },
    }
    report['hash_economy'] = (counter.hash_ops == inserts and hll.op_counter.hash_ops == config.N * hll_inserts)
    return report


def cmd_complexity(out, inserts=10 ** 6, hll_inserts=10 ** 5, seed=0):
    report = complexity_report(inserts, hll_inserts, seed=seed)
    logger.info('LFM cost %.2f per insert (expected %.2f, closed-form bound %.2f); hyperloglog-FM scans %.2f (%.2f)',
                report['lfm']['cost_per_insert'], report['lfm']['expected_cost'], report['lfm']['closed_form_bound'],
                report['hll']['scans_per_insert'], report['hll']['formula'])
    artifacts.ensure_dir(out)
    artifacts.write_json(os.path.join(out, 'complexity.json'), report)
    return report


def _raw_ratios(kind, cardinality, trials, seed, N):
    ratios = []
    for trial in range(trials):
        tag = 'cal{}-{}-{}-{}'.format(kind, seed, cardinality, trial)
        if kind == 'lfm':
            sketch = LfmSketch(SketchConfig(N=N, hash_seed=seed * 7919 + trial, pattern_seed=seed * 7919 + trial,
                                            calibration=1.0))
        else:
            sketch = HyperloglogFmSketch(N, seed_base=(seed * 7919 + trial) * N, calibration=1.0)
        sketch.insert_many(_stream(tag, cardinality))
        ratios.append(sketch.estimate() / float(cardinality))
    return ratios


def calibrate(kinds=('lfm', 'hll'), cardinalities=sketch_mapping.calibration_cardinalities,
              trials=sketch_mapping.calibration_trials, seed=0, N=sketch_mapping.default_bitmaps,
              heldout=sketch_mapping.heldout_cardinality):
    """Fits C so that the median of C * 2**H / true over the grid is 1."""
    result = {'seed': seed, 'trials': trials, 'cardinalities': list(cardinalities), 'N': N,
              'analytic': sketch_mapping.analytic_calibration()}
    for kind in kinds:
        per_cardinality = {n: _raw_ratios(kind, n, trials, seed, N) for n in cardinalities}
        pooled = np.concatenate([per_cardinality[n] for n in cardinalities])
        constant = 1.0 / float(np.median(pooled))
        residuals = {str(n): float(np.median(per_cardinality[n])) * constant for n in cardinalities}
        check = _raw_ratios(kind, heldout, trials, seed + 1, N)
        result[kind] = {'calibration': constant, 'residual_median_ratio': residuals,
                        'heldout_cardinality': heldout,
                        'heldout_median_ratio': float(np.median(check)) * constant}
        logger.info('calibrated %s: C=%.4f, held-out median ratio %.4f', kind, constant,
                    result[kind]['heldout_median_ratio'])
    return result


def cmd_calibrate(out, trials=sketch_mapping.calibration_trials, seed=0, kinds=('lfm', 'hll')):
    result = calibrate(kinds, trials=trials, seed=seed)
    artifacts.ensure_dir(out)
    artifacts.write_json(os.path.join(out, 'calibration.json'), result)
    return result


def interest_stream(count, seed=0, prefixes=topology_mapping.regular_prefixes):
    rng = np.random.default_rng(seed)
    ids = rng.integers(0, 2 ** 40, size=count)
    return ['{}/{}'.format(prefixes[i % len(prefixes)], int(identifier)) for i, identifier in enumerate(ids)]


def bench_report(interests=10 ** 6, N=sketch_mapping.default_bitmaps, seed=0):
    stream = interest_stream(interests, seed)
    config = SketchConfig(N=N)
    results = {mode: bench_insert_path(mode, stream, config) for mode in ('elda', 'strawman', 'freq')}
    parity_stream = stream[:max(1, interests // 10)]
    single = SketchConfig(N=1)
    parity = {mode: bench_insert_path(mode, parity_stream, single) for mode in ('elda', 'strawman')}
    doubled = SketchConfig(N=2 * N) if 2 * N <= math.factorial(config.M) else config
    doubling = {mode: bench_insert_path(mode, stream[:1000], doubled)['op_counter']['hash_ops'] / 1000.0
                for mode in ('elda', 'strawman')}
    return {
        'interests': interests,
        'N': N,
        'modes': results,
        'throughput_ratio': results['elda']['interests_per_second'] / results['strawman']['interests_per_second'],
        'n1_parity_ratio': parity['elda']['ns_per_interest'] / parity['strawman']['ns_per_interest'],
        'hash_ops_per_interest': {mode: results[mode]['op_counter']['hash_ops'] / float(interests)
                                  for mode in ('elda', 'strawman')},
        'hash_ops_per_interest_doubled_N': doubling,
    }


def cmd_bench(out, interests=10 ** 6, N=sketch_mapping.default_bitmaps, seed=0):
    report = bench_report(interests, N, seed)
    logger.info('ELDA %.0f interests/s, strawman %.0f interests/s (ratio %.2f)',
                report['modes']['elda']['interests_per_second'], report['modes']['strawman']['interests_per_second'],
                report['throughput_ratio'])
    artifacts.ensure_dir(out)
    artifacts.write_json(os.path.join(out, 'bench.json'), report)
    return report


def resources_report(catalogs=(10 ** 3, 10 ** 4), prefixes=10000, cpu_interests=10 ** 4, seed=0):
    """Detector memory per mode as the number of distinct observed names grows."""
    config = SketchConfig()
    report = {'catalogs': list(catalogs), 'modes': {}, 'projected_prefixes': prefixes}
    for mode in ('elda', 'strawman', 'freq'):
        rows = []
        for catalog in catalogs:
            detector = Detector(mode, config)
            names = ['{}/{}'.format(topology_mapping.attack_prefix, i) for i in range(catalog)]
            detector.observe_many(names)
            rows.append({'catalog': catalog, 'footprint': detector.memory_footprint()})
        report['modes'][mode] = rows
    per_prefix = LfmSketch(config).memory_footprint()
    shared = Detector('elda', config).patterns.footprint_bits()
    report['projected_bits'] = {'elda': per_prefix * prefixes + shared, 'strawman': per_prefix * prefixes}
    stream = interest_stream(cpu_interests, seed)
    report['cpu_ns_per_interest'] = {mode: bench_insert_path(mode, stream, config)['ns_per_interest']
                                     for mode in ('elda', 'strawman', 'freq')}
    return report


def cmd_resources(out, seed=0):
    report = resources_report(seed=seed)
    artifacts.ensure_dir(out)
    artifacts.write_json(os.path.join(out, 'resources.json'), report)
    return report


def describe_scenarios():
    described = []
    for name in list_scenarios():
        spec = load_scenario(name)
        described.append((name, spec.description))
    return described


__all__ = ['ScenarioSpec', 'accuracy_table', 'bench_report', 'calibrate', 'cmd_accuracy', 'cmd_bench',
           'cmd_calibrate', 'cmd_complexity', 'cmd_resources', 'cmd_run', 'cmd_sweep', 'complexity_report',
           'describe_scenarios', 'load_settings', 'resources_report', 'run_scenario']
