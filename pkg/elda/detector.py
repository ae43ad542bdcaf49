#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
# Per-prefix cache pollution detection: every interest is routed by its first name
# component into a monitor whose sketch counts the distinct names of the epoch.
# At each epoch boundary the sketch statistic is compared with the monitor's
# bootstrap threshold.

import logging
import time
import zlib

import numpy as np

from elda.baselines import FrequencyBaselineState, HyperloglogFmSketch
from elda.exceptions import ConfigurationError
from elda.lfm_sketch import LfmSketch, SketchConfig, generate_patterns
from elda.threshold_mc import MonitorHistory, ThresholdConfig, mc_threshold

logger = logging.getLogger(__name__)

DETECTOR_MODES = ('elda', 'strawman', 'freq')


def name_prefix(interest_name):
    prefix = getattr(interest_name, 'prefix_uri', None)
    if prefix is not None:
        return prefix, interest_name.uri
    uri = str(interest_name)
    components = [c for c in uri.split('/') if c]
    if not components:
        raise ConfigurationError('interest name {!r} has no components'.format(uri))
    return '/' + components[0], uri


class Alarm(object):
    __slots__ = ('prefix', 'epoch_index', 'statistic', 'threshold', 'wall_time')

    def __init__(self, prefix, epoch_index, statistic, threshold, wall_time):
        self.prefix = prefix
        self.epoch_index = epoch_index
        self.statistic = statistic
        self.threshold = threshold
        self.wall_time = wall_time

    def to_dict(self):
        return {'prefix': self.prefix, 'epoch_index': self.epoch_index, 'statistic': self.statistic,
                'threshold': self.threshold, 'wall_time': self.wall_time}

    def __repr__(self):
        return 'Alarm({prefix}, epoch={epoch_index}, {statistic:.2f} > {threshold:.2f})'.format(**self.to_dict())


class PrefixMonitor(object):
    def __init__(self, prefix, sketch, history):
        self.prefix = prefix
        self.sketch = sketch
        self.history = history
        self.threshold = None
        self.epoch_index = 0


class TraceRow(object):
    __slots__ = ('epoch', 'prefix', 'statistic', 'threshold', 'alarm')

    def __init__(self, epoch, prefix, statistic, threshold, alarm):
        self.epoch = epoch
        self.prefix = prefix
        self.statistic = statistic
        self.threshold = threshold
        self.alarm = alarm

    def as_row(self):
        return [self.epoch, self.prefix, '{:.6f}'.format(self.statistic),
                '' if self.threshold is None else '{:.6f}'.format(self.threshold), int(self.alarm)]


class Detector(object):
    """Monitors keyed by name prefix.

    `elda` mode backs every monitor with an LFM sketch sharing one pattern matrix,
    `strawman` with a hyperloglog-FM sketch and `freq` replaces the sketches by the
    frequency-deviation baseline.
    """

    def __init__(self, mode='elda', sketch_config=None, threshold_config=None, hll_seed_base=None):
        if mode not in DETECTOR_MODES:
            raise ConfigurationError('unknown detector mode {!r}'.format(mode))
        self.mode = mode
        self.sketch_config = sketch_config or SketchConfig()
        self.threshold_config = threshold_config or ThresholdConfig()
        self.hll_seed_base = self.sketch_config.hash_seed if hll_seed_base is None else hll_seed_base
        self.monitors = {}
        self.trace = []
        self.alarms = []
        self.epoch_index = 0
        self.patterns = None
        if mode == 'elda':
            cfg = self.sketch_config
            self.patterns = generate_patterns(cfg.M, cfg.N, cfg.pattern_seed, cfg.pattern_strategy)
        self.frequency = FrequencyBaselineState() if mode == 'freq' else None

    def _new_sketch(self):
        cfg = self.sketch_config
        if self.mode == 'elda':
            return LfmSketch(cfg, self.patterns)
        return HyperloglogFmSketch(cfg.N, cfg.L, self.hll_seed_base, cfg.calibration)

    def monitor_for(self, prefix):
        monitor = self.monitors.get(prefix)
        if monitor is None:
            sketch = self._new_sketch() if self.mode != 'freq' else None
            monitor = PrefixMonitor(prefix, sketch, MonitorHistory(self.threshold_config.sample_size))
            monitor.epoch_index = self.epoch_index
            self.monitors[prefix] = monitor
            logger.debug('monitoring new prefix %s', prefix)
        return monitor

    def observe_interest(self, interest_name):
        prefix, uri = name_prefix(interest_name)
        monitor = self.monitor_for(prefix)
        if self.frequency is not None:
            self.frequency.observe(uri, self.epoch_index)
        else:
            monitor.sketch.insert(uri)
        return monitor

    def observe_many(self, interest_names):
        by_prefix = {}
        for name in interest_names:
            prefix, uri = name_prefix(name)
            by_prefix.setdefault(prefix, []).append(uri)
        for prefix, uris in by_prefix.items():
            monitor = self.monitor_for(prefix)
            if self.frequency is not None:
                for uri in uris:
                    self.frequency.observe(uri, self.epoch_index)
            else:
                monitor.sketch.insert_many(uris)

    def statistic(self, monitor):
        if monitor.sketch.insert_count == 0:
            return 0.0
        if self.threshold_config.statistic == 'raw':
            return monitor.sketch.raw_statistic()
        return monitor.sketch.estimate()

    def _rng(self, prefix):
        seed = [self.threshold_config.rng_seed, self.epoch_index, zlib.crc32(prefix.encode('utf-8'))]
        return np.random.default_rng(seed)

    def end_epoch(self, wall_time=None):
        if self.frequency is not None:
            alarms = self._end_frequency_epoch(wall_time)
        else:
            alarms = []
            for prefix in sorted(self.monitors):
                alarm = self._end_monitor_epoch(self.monitors[prefix], wall_time)
                if alarm is not None:
                    alarms.append(alarm)
        for alarm in alarms:
            logger.warning('cache pollution alarm on %s at epoch %d: %.2f > %.2f', alarm.prefix,
                           alarm.epoch_index, alarm.statistic, alarm.threshold)
        self.alarms.extend(alarms)
        self.epoch_index += 1
        return alarms

    def _end_monitor_epoch(self, monitor, wall_time):
        value = self.statistic(monitor)
        alarm = None
        if monitor.threshold is not None and value > monitor.threshold:
            alarm = Alarm(monitor.prefix, monitor.epoch_index, value, monitor.threshold, wall_time)
        else:
            monitor.history.push(value)
            if monitor.history.is_full:
                monitor.threshold = mc_threshold(monitor.history, self.threshold_config, self._rng(monitor.prefix))
                logger.debug('threshold for %s recomputed: %.4f', monitor.prefix, monitor.threshold)
        self.trace.append(TraceRow(monitor.epoch_index, monitor.prefix, value,
                                   alarm.threshold if alarm else monitor.threshold, alarm is not None))
        monitor.sketch.reset()
        monitor.epoch_index += 1
        return alarm

    def _end_frequency_epoch(self, wall_time):
        deviations = self.frequency.check()
        worst = {}
        for deviation in deviations:
            prefix, _ = name_prefix(deviation.content)
            current = worst.get(prefix)
            if current is None or deviation.count - deviation.limit > current.count - current.limit:
                worst[prefix] = deviation
        alarms = []
        for prefix in sorted(worst):
            deviation = worst[prefix]
            alarms.append(Alarm(prefix, self.epoch_index, float(deviation.count), deviation.limit, wall_time))
            self.trace.append(TraceRow(self.epoch_index, prefix, float(deviation.count), deviation.limit, True))
        # deviating series keep their pre-alarm mean and variance
        self.frequency.roll(self.epoch_index + 1, skip=[deviation.content for deviation in deviations])
        for monitor in self.monitors.values():
            monitor.epoch_index = self.epoch_index + 1
        return alarms

    def memory_footprint(self):
        if self.frequency is not None:
            return {'per_prefix_bits': None, 'shared_bits': 0, 'total_bits': self.frequency.memory_footprint()}
        per_prefix = self._new_sketch().memory_footprint()
        shared = self.patterns.footprint_bits() if self.patterns is not None else 0
        return {'per_prefix_bits': per_prefix, 'shared_bits': shared,
                'total_bits': per_prefix * len(self.monitors) + shared}


def observe_interest(monitors, interest_name):
    return monitors.observe_interest(interest_name)


def end_epoch(monitors, wall_time=None):
    return monitors.end_epoch(wall_time)


class AttackInterval(object):
    __slots__ = ('prefix', 'start', 'end')

    def __init__(self, prefix, start, end):
        self.prefix = prefix
        self.start = float(start)
        self.end = float(end)

    def covers(self, prefix, epoch_start, epoch_end):
        return prefix == self.prefix and epoch_start < self.end and epoch_end > self.start


class DetectionReport(object):
    def __init__(self, detection_rate, false_positive_rate, alarms, trace, detected, attacks, false_positives):
        self.detection_rate = detection_rate
        self.false_positive_rate = false_positive_rate
        self.alarms = alarms
        self.trace = trace
        self.detected = detected
        self.attacks = attacks
        self.false_positives = false_positives

    def to_dict(self):
        return {
            'detection_rate': 'N/A' if self.detection_rate is None else self.detection_rate,
            'false_positive_rate': self.false_positive_rate,
            'attacks': self.attacks,
            'detected': self.detected,
            'alarms': len(self.alarms),
            'false_positives': self.false_positives,
        }


def score_run(alarms, schedule, epoch_length=1.0, trace=None):
    """An alarm counts for an attack when the epoch it closes overlaps the attack interval."""
    intervals = [s if isinstance(s, AttackInterval) else AttackInterval(**s) for s in schedule]
    detected = set()
    false_positives = 0
    for alarm in alarms:
        end = alarm.wall_time if alarm.wall_time is not None else (alarm.epoch_index + 1) * epoch_length
        start = end - epoch_length
        hits = [i for i, interval in enumerate(intervals) if interval.covers(alarm.prefix, start, end)]
        if hits:
            detected.update(hits)
        else:
            false_positives += 1
    detection_rate = len(detected) / float(len(intervals)) if intervals else None
    false_positive_rate = false_positives / float(len(alarms)) if alarms else 0.0
    return DetectionReport(detection_rate, false_positive_rate, list(alarms), trace or [], len(detected),
                           len(intervals), false_positives)


def bench_insert_path(mode, stream, sketch_config=None):
    """Wall-clock cost of observe_interest over a pre-generated stream of names."""
    detector = Detector(mode if mode != 'freq_baseline' else 'freq', sketch_config)
    stream = [str(name) for name in stream]
    for prefix in {name_prefix(name)[0] for name in stream}:
        detector.monitor_for(prefix)
    observe = detector.observe_interest
    started = time.perf_counter_ns()
    for name in stream:
        observe(name)
    elapsed = time.perf_counter_ns() - started
    counters = {'hash_ops': 0, 'substring_scans': 0, 'pattern_steps': 0}
    for monitor in detector.monitors.values():
        if monitor.sketch is not None:
            for key, value in monitor.sketch.op_counter.as_dict().items():
                counters[key] += value
    count = len(stream)
    return {
        'mode': detector.mode,
        'interests': count,
        'ns_per_interest': elapsed / float(count) if count else 0.0,
        'interests_per_second': count * 1e9 / elapsed if elapsed else 0.0,
        'op_counter': counters,
    }
