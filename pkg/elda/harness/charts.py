#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import glob
import json
import logging
import os
import re

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402

from elda.exceptions import MissingTraceError  # noqa: E402
from elda.harness.artifacts import read_csv  # noqa: E402

logger = logging.getLogger(__name__)

matplotlib.rcParams['svg.hashsalt'] = 'elda'
matplotlib.rcParams['svg.fonttype'] = 'none'

metric_charts = {
    'hit_rate': ('cache_hit_rate', 'Cache hit rate'),
    'regular_hit_rate': ('regular_hit_rate', 'Regular-interest hit rate'),
    'pit_availability': ('pit_available_rate', 'PIT available rate'),
    'rtt': ('avg_rtt_ms', 'Average RTT (ms)'),
}


def _rows(path):
    if not os.path.exists(path):
        raise MissingTraceError('missing trace {}'.format(path), source=path)
    rows = read_csv(path)
    if not rows:
        raise MissingTraceError('trace {} is empty'.format(path), source=path)
    return rows


def _save(figure, path):
    figure.savefig(path, format='svg', metadata={'Date': None})
    plt.close(figure)
    logger.info('wrote %s', path)
    return path


def metric_chart(chart, metrics_paths, output, node='gateway'):
    """One line per scenario trace; returns the number of series drawn."""
    field, label = metric_charts[chart]
    traces = [(re.sub(r'^metrics_|\.csv$', '', os.path.basename(p)), _rows(p)) for p in metrics_paths]
    figure, axes = plt.subplots(figsize=(7, 4))
    series = 0
    for name, rows in traces:
        points = [(int(r['time_s']), float(r[field])) for r in rows if r['node'] == node and r[field] != '']
        if not points:
            continue
        axes.plot([t for t, _ in points], [v for _, v in points], label=name)
        series += 1
    if not series:
        plt.close(figure)
        raise MissingTraceError('no {} samples for node {}'.format(field, node))
    axes.set_xlabel('Time (s)')
    axes.set_ylabel(label)
    axes.legend(loc='best', fontsize='small')
    _save(figure, output)
    return series


def detection_chart(summary_path, output):
    rows = _rows(summary_path)
    names = [r['scenario'] for r in rows]
    detection = [0.0 if r['detection_rate'] == 'N/A' else float(r['detection_rate']) for r in rows]
    false_positive = [float(r['false_positive_rate']) for r in rows]
    figure, axes = plt.subplots(figsize=(9, 4))
    positions = range(len(names))
    axes.bar([p - 0.2 for p in positions], detection, width=0.4, label='Detection rate')
    axes.bar([p + 0.2 for p in positions], false_positive, width=0.4, label='False positive rate')
    axes.set_xticks(list(positions))
    axes.set_xticklabels(names, rotation=45, ha='right', fontsize='small')
    axes.set_ylim(0, 1.05)
    axes.legend(loc='best', fontsize='small')
    figure.tight_layout()
    return _save(figure, output)


def _json(path):
    if not os.path.exists(path):
        raise MissingTraceError('missing report {}'.format(path), source=path)
    with open(path) as f:
        return json.load(f)


def throughput_chart(bench_path, output):
    modes = _json(bench_path)['modes']
    names = sorted(modes)
    figure, axes = plt.subplots(figsize=(5, 4))
    axes.bar(names, [modes[m]['interests_per_second'] for m in names])
    axes.set_ylabel('Interests per second')
    return _save(figure, output)


def resources_chart(resources_path, output):
    report = _json(resources_path)
    figure, axes = plt.subplots(figsize=(6, 4))
    for mode in sorted(report['modes']):
        rows = report['modes'][mode]
        axes.plot([r['catalog'] for r in rows], [r['footprint']['total_bits'] / 8192.0 for r in rows],
                  marker='o', label=mode)
    axes.set_xscale('log')
    axes.set_xlabel('Distinct names observed')
    axes.set_ylabel('Detector memory (KiB)')
    axes.legend(loc='best', fontsize='small')
    return _save(figure, output)


def cmd_chart(source, out):
    """Renders every chart whose inputs exist under `source`."""
    written = []
    metrics = sorted(glob.glob(os.path.join(source, 'metrics_*.csv')))
    groups = {}
    for path in metrics:
        kind = re.match(r'metrics_([A-Za-z]+)', os.path.basename(path)).group(1)
        groups.setdefault(kind, []).append(path)
    for kind, paths in sorted(groups.items()):
        for chart in metric_charts:
            output = os.path.join(out, '{}_{}.svg'.format(chart, kind))
            try:
                metric_chart(chart, paths, output)
                written.append(output)
            except MissingTraceError as e:
                if chart == 'hit_rate':
                    raise
                logger.debug('skipped %s: %s', output, e)
    for name, builder in (('sweep_summary.csv', detection_chart), ('bench.json', throughput_chart),
                          ('resources.json', resources_chart)):
        path = os.path.join(source, name)
        if os.path.exists(path):
            output = os.path.join(out, os.path.splitext(name)[0] + '.svg')
            builder(path, output)
            written.append(output)
    if not written:
        raise MissingTraceError('no traces to chart under {}'.format(source), source=source)
    return written
