#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import math
from functools import lru_cache

import numpy as np

from elda.exceptions import ConfigurationError
from elda.ndn_sim import topology_mapping
from elda.ndn_sim.names import Name

TRAFFIC_KINDS = ('regular', 'LDA', 'FLA')


@lru_cache(maxsize=32)
def _zipf_cdf(alpha, K):
    weights = np.arange(1, K + 1, dtype=float) ** -alpha
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    cdf[-1] = 1.0
    cdf.setflags(write=False)
    return cdf


class ZipfSampler(object):
    def __init__(self, alpha, K):
        if alpha <= 0 or K < 1:
            raise ConfigurationError('Zipf needs alpha > 0 and K >= 1 (alpha={}, K={})'.format(alpha, K))
        self.alpha = float(alpha)
        self.K = int(K)
        self.cdf = _zipf_cdf(self.alpha, self.K)

    def sample(self, rng, size=None):
        u = rng.random(size)
        return np.searchsorted(self.cdf, u, side='right') + 1

    def probability(self, rank):
        return float(self.cdf[rank - 1] - (self.cdf[rank - 2] if rank > 1 else 0.0))


def zipf_sample(alpha, K, rng):
    return int(ZipfSampler(alpha, K).sample(rng))


class TrafficProfile(object):
    def __init__(self, kind, rate, alpha=None, catalog_size=topology_mapping.catalog_size,
                 prefix=topology_mapping.attack_prefix, start=0.0, nonexistent_start=None,
                 prefixes=topology_mapping.regular_prefixes):
        if kind not in TRAFFIC_KINDS:
            raise ConfigurationError('unknown traffic kind {!r}'.format(kind))
        if rate <= 0:
            raise ConfigurationError('traffic rate must be positive')
        if kind == 'regular' and (alpha is None or alpha <= 0):
            raise ConfigurationError('regular traffic needs a positive Zipf alpha')
        if kind == 'FLA' and nonexistent_start is None:
            raise ConfigurationError('FLA traffic needs a nonexistent_start time')
        self.kind = kind
        self.rate = float(rate)
        self.alpha = alpha
        self.catalog_size = int(catalog_size)
        self.prefix = prefix
        self.start = float(start)
        self.nonexistent_start = None if nonexistent_start is None else float(nonexistent_start)
        self.prefixes = tuple(prefixes)

    @property
    def unpopular_start(self):
        return self.start

    @classmethod
    def from_dict(cls, settings):
        settings = dict(settings)
        if 'unpopular_start' in settings:
            settings['start'] = settings.pop('unpopular_start')
        return cls(**settings)

    def regular_name(self, rank):
        rank = int(rank)
        return Name.content(self.prefixes[rank % len(self.prefixes)], rank)


class AttackGenerator(object):
    """Constant-rate attack names; emission i happens at start + i / rate."""

    def __init__(self, profile, slot=0):
        if profile.kind == 'regular':
            raise ConfigurationError('regular profiles do not generate attack streams')
        self.profile = profile
        self.slot = int(slot)
        self.emitted = 0
        self.unpopular_sequence = 0
        self.nonexistent_sequence = 0

    def next_time(self):
        return self.profile.start + self.emitted / self.profile.rate

    def _name(self, at):
        profile = self.profile
        offset = self.slot * topology_mapping.attacker_stride
        if profile.kind == 'FLA' and at >= profile.nonexistent_start:
            identifier = topology_mapping.nonexistent_base + offset + self.nonexistent_sequence
            self.nonexistent_sequence += 1
        else:
            identifier = topology_mapping.unpopular_base + offset + self.unpopular_sequence
            self.unpopular_sequence += 1
        return Name.content(profile.prefix, identifier)

    def due(self, time):
        names = []
        # Tolerance keeps float rounding of start + i / rate from skipping an emission.
        while self.next_time() <= time + 1e-12:
            names.append(self._name(self.next_time()))
            self.emitted += 1
        return names


def attack_stream(profile, time, generator=None):
    generator = generator or AttackGenerator(profile)
    return generator.due(time)


def scaled(profile, scale):
    if scale == 1:
        return profile
    return TrafficProfile(profile.kind, profile.rate / scale, profile.alpha,
                          max(1, int(math.ceil(profile.catalog_size / float(scale)))), profile.prefix,
                          profile.start, profile.nonexistent_start, profile.prefixes)
