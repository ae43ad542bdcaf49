#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import csv
import hashlib
import io
import logging
import math
from collections import OrderedDict

import mmh3
import numpy as np

from elda import sketch_mapping
from elda.exceptions import ConfigurationError, SerializationError
from elda.lfm_sketch import (OpCounter, dump_record, harmonic_estimate, harmonic_statistic, hash_value,
                             load_record, registers_of)

logger = logging.getLogger(__name__)


class HyperloglogFmSketch(object):
    """N seeded hashes per item, one bitmap per hash, same estimator as the LFM sketch."""

    kind = 'hll'

    def __init__(self, N=sketch_mapping.default_bitmaps, L=sketch_mapping.default_hash_bits, seed_base=0,
                 calibration=sketch_mapping.default_calibration):
        if N < 1 or not 1 <= L <= 128:
            raise ConfigurationError('invalid hyperloglog-FM shape N={}, L={}'.format(N, L))
        self.N = int(N)
        self.L = int(L)
        self.seed_base = int(seed_base)
        self.calibration = float(calibration)
        self.seeds = [(self.seed_base + i) % 2 ** 32 for i in range(self.N)]
        if len(set(self.seeds)) != self.N:
            raise ConfigurationError('hash seeds are not pairwise distinct')
        self.bitmaps = np.zeros((self.N, self.L), dtype=bool)
        self.insert_count = 0
        self.op_counter = OpCounter()

    def insert(self, item):
        L = self.L
        bitmaps = self.bitmaps
        scans = 0
        for i, seed in enumerate(self.seeds):
            h = hash_value(item, L, seed)
            if h:
                k = L - h.bit_length()
                scans += k + 1
                bitmaps[i, k] = True
            else:
                scans += L
        self.op_counter.hash_ops += self.N
        self.op_counter.substring_scans += scans
        self.insert_count += 1
        return self

    def insert_many(self, items):
        items = [_encode(item) for item in items]
        if not items:
            return self
        L = self.L
        for i, seed in enumerate(self.seeds):
            if L <= 32:
                shift = 32 - L
                hashes = np.array([mmh3.hash(item, seed, signed=False) >> shift for item in items], dtype=float)
                # frexp exponent is the bit length for values below 2**53.
                ranks = L - np.frexp(hashes)[1].astype(np.int64)
            else:
                ranks = np.array([L - hash_value(item, L, seed).bit_length() for item in items], dtype=np.int64)
            set_ranks = ranks[ranks < L]
            self.bitmaps[i, np.unique(set_ranks)] = True
            self.op_counter.substring_scans += int(np.where(ranks < L, ranks + 1, L).sum())
        self.op_counter.hash_ops += self.N * len(items)
        self.insert_count += len(items)
        return self

    def registers(self):
        return registers_of(self.bitmaps)

    def raw_statistic(self):
        return harmonic_statistic(self.registers())

    def estimate(self):
        if self.insert_count == 0:
            return 0.0
        return harmonic_estimate(self.registers(), self.calibration)

    def reset(self):
        self.bitmaps[:] = False
        self.insert_count = 0
        self.op_counter.reset()
        return self

    def memory_footprint(self):
        return self.N * self.L

    def dumps(self):
        settings = {'N': self.N, 'L': self.L, 'seed_base': self.seed_base, 'calibration': self.calibration}
        return dump_record(self.kind, settings, self.insert_count, self.bitmaps)

    @classmethod
    def loads(cls, text):
        kind, settings, insert_count, bitmaps = load_record(text)
        if kind != cls.kind:
            raise SerializationError('record holds a {} sketch, not {}'.format(kind, cls.kind))
        try:
            sketch = cls(settings['N'], settings['L'], settings['seed_base'], settings['calibration'])
        except KeyError as e:
            raise SerializationError('incomplete sketch header: {}'.format(e))
        if bitmaps.shape != sketch.bitmaps.shape:
            raise SerializationError('bitmap shape {} does not match header'.format(bitmaps.shape))
        sketch.bitmaps[:] = bitmaps
        sketch.insert_count = insert_count
        return sketch


def hll_insert(sketch, item):
    return sketch.insert(item)


def hll_estimate(sketch):
    return sketch.estimate()


def _encode(item):
    if isinstance(item, bytes):
        return item
    return str(item).encode('utf-8')


def _digest(item):
    item = _encode(item)
    return hashlib.blake2b(item, digest_size=16).digest()


class ExactCounter(object):
    def __init__(self):
        self.seen = set()

    @property
    def count(self):
        return len(self.seen)

    def insert(self, item):
        self.seen.add(_digest(item))
        return self

    def insert_many(self, items):
        for item in items:
            self.seen.add(_digest(item))
        return self

    def reset(self):
        self.seen.clear()
        return self


def exact_insert(counter, item):
    return counter.insert(item)


def exact_count(counter):
    return counter.count


class FrequencyRecord(object):
    __slots__ = ('current', 'epochs', 'mean', 'm2', 'last_seen')

    def __init__(self, epoch):
        self.current = 0
        self.epochs = 0
        self.mean = 0.0
        self.m2 = 0.0
        self.last_seen = epoch

    @property
    def variance(self):
        return self.m2 / (self.epochs - 1) if self.epochs > 1 else 0.0

    def close_epoch(self):
        # Welford update with the finished epoch's count.
        self.epochs += 1
        delta = self.current - self.mean
        self.mean += delta / self.epochs
        self.m2 += delta * (self.current - self.mean)
        self.current = 0

    def discard_epoch(self):
        self.current = 0

    def limit(self, k):
        return self.mean + k * math.sqrt(self.variance)


class FrequencyAlarm(object):
    __slots__ = ('content', 'count', 'limit')

    def __init__(self, content, count, limit):
        self.content = content
        self.count = count
        self.limit = limit

    def __repr__(self):
        return 'FrequencyAlarm({!r}, count={}, limit={:.2f})'.format(self.content, self.count, self.limit)


def _group_of(content_name):
    components = [c for c in content_name.split('/') if c]
    return '/' + components[0] if components else content_name


class FrequencyBaselineState(object):
    """Per-content request frequencies with historical mean and variance.

    Besides individual contents, the number of contents first seen in an epoch is
    tracked per name prefix as its own series so that floods of never-repeating names deviate too.
    """

    def __init__(self, k=sketch_mapping.frequency_deviation_multiplier,
                 capacity=sketch_mapping.frequency_capacity,
                 min_history=sketch_mapping.frequency_min_history,
                 min_count=sketch_mapping.frequency_min_count):
        if capacity < 1 or k <= 0:
            raise ConfigurationError('frequency baseline needs a positive capacity and multiplier')
        self.k = float(k)
        self.capacity = int(capacity)
        self.min_history = int(min_history)
        self.min_count = int(min_count)
        self.records = OrderedDict()
        self.new_contents = OrderedDict()
        self.epoch = 0
        self.evictions = 0

    def observe(self, content_name, epoch):
        if epoch > self.epoch:
            self.roll(epoch)
        key = str(content_name)
        record = self.records.get(key)
        if record is None:
            if len(self.records) >= self.capacity:
                self.records.popitem(last=False)
                self.evictions += 1
            record = FrequencyRecord(epoch)
            self.records[key] = record
            group = _group_of(key)
            series = self.new_contents.get(group)
            if series is None:
                series = self.new_contents[group] = FrequencyRecord(epoch)
            series.current += 1
        else:
            self.records.move_to_end(key)
        record.current += 1
        record.last_seen = epoch
        return self

    def roll(self, epoch, skip=()):
        """Closes every epoch up to `epoch`; statistics change only here.

        Series named in `skip` drop the count of the epoch being closed instead of
        folding it into their mean and variance, so an alarmed epoch never becomes history.
        """
        skip = set(skip)
        while self.epoch < epoch:
            for key, record in self.records.items():
                if key in skip:
                    record.discard_epoch()
                else:
                    record.close_epoch()
            for group, series in self.new_contents.items():
                if group in skip:
                    series.discard_epoch()
                else:
                    series.close_epoch()
            skip = ()
            self.epoch += 1

    def check(self):
        alarms = []
        series = [(group, record, self.min_count) for group, record in self.new_contents.items()]
        series.extend((key, record, self.min_count) for key, record in self.records.items())
        for key, record, floor in series:
            if record.epochs < self.min_history or record.current < floor:
                continue
            limit = record.limit(self.k)
            if record.current > limit:
                alarms.append(FrequencyAlarm(key, record.current, limit))
        return alarms

    def memory_footprint(self):
        return (len(self.records) + len(self.new_contents)) * sketch_mapping.frequency_record_bits

    def dumps(self):
        out = io.StringIO()
        writer = csv.writer(out, lineterminator='\n')
        writer.writerow(['content_digest', 'current', 'epochs', 'mean', 'variance'])
        for key, record in self.records.items():
            writer.writerow([_digest(key).hex(), record.current, record.epochs,
                             repr(record.mean), repr(record.variance)])
        return out.getvalue()


def freq_baseline_observe(state, content_name, epoch):
    return state.observe(content_name, epoch)


def freq_baseline_check(state):
    alarms = state.check()
    return alarms or None
