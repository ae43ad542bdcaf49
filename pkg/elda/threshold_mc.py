#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
# Monte-Carlo bootstrap threshold for per-prefix monitoring statistics.

import logging
import math
from collections import deque

import numpy as np

from elda.exceptions import (ConfigurationError, InsufficientObservationsError, NegativeObservationError,
                             NonFiniteObservationError)

logger = logging.getLogger(__name__)

MAX_ROUNDS = 100000


class ThresholdConfig(object):
    def __init__(self, alpha=0.005, sample_size=10, resample_count=1000, growth_step=0.5, rng_seed=0,
                 epsilon=0.01, tail_guard=True, statistic='estimate'):
        self.alpha = float(alpha)
        self.sample_size = int(sample_size)
        self.resample_count = int(resample_count)
        self.growth_step = float(growth_step)
        self.rng_seed = int(rng_seed)
        self.epsilon = float(epsilon)
        self.tail_guard = bool(tail_guard)
        self.statistic = statistic
        if not 0 < self.alpha < 1:
            raise ConfigurationError('significance must lie in (0, 1), got {}'.format(self.alpha))
        if self.resample_count < 1.0 / self.alpha:
            raise ConfigurationError('{} resamples cannot resolve significance {}'.format(
                self.resample_count, self.alpha))
        if self.sample_size < 2:
            raise ConfigurationError('sample size must be at least 2')
        if self.growth_step <= 0 or self.epsilon <= 0:
            raise ConfigurationError('growth step and epsilon must be positive')
        if self.statistic not in ('estimate', 'raw'):
            raise ConfigurationError('statistic must be "estimate" or "raw"')

    @classmethod
    def from_dict(cls, settings):
        keys = ('alpha', 'sample_size', 'resample_count', 'growth_step', 'rng_seed', 'epsilon', 'tail_guard',
                'statistic')
        return cls(**{key: settings[key] for key in keys if key in settings})

    def replace(self, **changes):
        settings = dict(self.__dict__)
        settings.update(changes)
        return ThresholdConfig(**settings)


class MonitorHistory(object):
    def __init__(self, capacity):
        self.capacity = int(capacity)
        self.window = deque(maxlen=self.capacity)

    def push(self, value):
        value = float(value)
        if not math.isfinite(value):
            raise NonFiniteObservationError('monitoring statistic {} is not finite'.format(value))
        if value < 0:
            raise NegativeObservationError('monitoring statistic must be non-negative, got {}'.format(value))
        self.window.append(value)

    @property
    def is_full(self):
        return len(self.window) == self.capacity

    def values(self):
        return np.array(self.window, dtype=float)

    def __len__(self):
        return len(self.window)


def _window(history):
    values = history.values() if isinstance(history, MonitorHistory) else np.asarray(history, dtype=float)
    if not np.all(np.isfinite(values)):
        raise NonFiniteObservationError('history holds non-finite entries')
    return values


def bootstrap_resample(history, rng, size=None):
    values = _window(history)
    if values.size == 0:
        raise InsufficientObservationsError('cannot resample an empty history')
    if size is None:
        size = history.capacity if isinstance(history, MonitorHistory) else values.size
    return rng.choice(values, size=size, replace=True)


def _tail_bound(means, stds, candidate):
    # One-sided Chebyshev (Cantelli) bound per resample; 1 when the candidate is not above the mean.
    gap = candidate - means
    var = stds ** 2
    with np.errstate(divide='ignore', invalid='ignore'):
        bound = np.where(gap > 0, var / (var + gap ** 2), 1.0)
    return np.nan_to_num(bound, nan=0.0)


def mc_threshold(history, cfg, rng=None):
    values = _window(history)
    if values.size < 2:
        raise InsufficientObservationsError('threshold needs at least 2 observations, got {}'.format(values.size))
    mu = float(values.mean())
    sigma = float(values.std(ddof=1))
    if sigma == 0:
        return mu * (1 + cfg.epsilon)
    if rng is None:
        rng = np.random.default_rng(cfg.rng_seed)
    resamples = rng.choice(values, size=(cfg.resample_count, values.size), replace=True)
    means = resamples.mean(axis=1)
    stds = resamples.std(axis=1, ddof=1)
    candidate = mu + sigma
    for _ in range(MAX_ROUNDS):
        p = float(np.mean(means >= candidate))
        if cfg.tail_guard:
            p = max(p, float(np.mean(_tail_bound(means, stds, candidate))))
        if p <= cfg.alpha:
            logger.debug('threshold %.4f qualified (mean %.4f, std %.4f, p %.5f)', candidate, mu, sigma, p)
            return candidate
        candidate += cfg.growth_step * sigma
    raise InsufficientObservationsError('threshold search did not converge', source=values.tolist())
