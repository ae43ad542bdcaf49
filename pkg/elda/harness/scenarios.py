#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import copy
import json
import logging
import math
from pathlib import Path

import jsonschema

from elda.exceptions import ConfigurationError
from elda.ndn_sim import topology_mapping
from elda.ndn_sim.traffic import TrafficProfile

logger = logging.getLogger(__name__)

package_path = Path(__file__).resolve().parent.parent
files_path = package_path / 'files'
scenarios_path = files_path / 'scenarios'
topologies_path = files_path / 'topologies'
default_settings_path = files_path / 'elda_settings.json'
schema_path = package_path.parent / 'format' / '1.0'


def _load_json(path):
    try:
        with open(str(path)) as f:
            return json.load(f)
    except OSError as e:
        raise ConfigurationError('cannot read {}: {}'.format(path, e.strerror), source=str(path))
    except ValueError as e:
        raise ConfigurationError('{} is not valid JSON: {}'.format(path, e), source=str(path))


def _schema(name):
    return _load_json(schema_path / name)


def validate(document, schema_name, source=None):
    try:
        jsonschema.validate(instance=document, schema=_schema(schema_name))
    except jsonschema.ValidationError as e:
        location = '/'.join(str(p) for p in e.absolute_path) or '<root>'
        raise ConfigurationError('{} at {}: {}'.format(source or schema_name, location, e.message), source=source)


def _overlay(base, update):
    merged = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _overlay(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_settings(path=None, overrides=None):
    settings = _load_json(default_settings_path)
    if path is not None:
        user = _load_json(path)
        validate(user, 'settings-schema.json', str(path))
        settings = _overlay(settings, user)
    if overrides:
        settings = _overlay(settings, overrides)
    validate(settings, 'settings-schema.json', 'settings')
    return settings


def load_topology(reference):
    if isinstance(reference, dict):
        return reference
    path = topologies_path / '{}.json'.format(reference)
    if not path.exists():
        path = Path(reference)
    if not path.exists():
        raise ConfigurationError('unknown topology {!r}'.format(reference), source=str(reference))
    return _load_json(path)


def list_scenarios():
    return sorted(p.stem for p in scenarios_path.glob('*.json'))


class ScenarioSpec(object):
    def __init__(self, document, source=None):
        validate(document, 'scenario-schema.json', source or document.get('name'))
        self.document = document
        self.name = document['name']
        self.description = document.get('description', '')
        self.control = bool(document.get('control', False))
        self.topology = load_topology(document['topology'])
        self.duration = float(document['duration'])
        self.warmup = float(document.get('warmup', topology_mapping.warmup))
        self.seed = int(document['seed'])
        self.regular = TrafficProfile.from_dict(document['regular'])
        attack = document.get('attack')
        self.attack = TrafficProfile.from_dict(attack) if attack else None
        self.schedule = [dict(interval) for interval in document['schedule']]
        self.settings = document.get('settings', {})
        self._check_schedule()

    def _check_schedule(self):
        if self.attack is None:
            if self.schedule:
                raise ConfigurationError('{}: schedule lists attacks but no attack profile'.format(self.name))
            return
        if self.attack.kind == 'FLA' and self.attack.nonexistent_start < self.attack.start:
            raise ConfigurationError('{}: nonexistent phase starts before the attack'.format(self.name))
        starts = [i['start'] for i in self.schedule if i['prefix'] == self.attack.prefix]
        if not starts or min(starts) != self.attack.start:
            raise ConfigurationError('{}: schedule does not start with the attack at {}'.format(
                self.name, self.attack.start))
        for interval in self.schedule:
            if interval['end'] <= interval['start']:
                raise ConfigurationError('{}: empty attack interval {}'.format(self.name, interval))

    def scaled(self, scale):
        """Divides rates, catalog and table capacities by `scale`; durations are kept."""
        if scale <= 0:
            raise ConfigurationError('scale must be positive, got {}'.format(scale))
        document = copy.deepcopy(self.document)
        if scale == 1:
            return ScenarioSpec(document)
        document['regular']['rate'] = document['regular']['rate'] / float(scale)
        catalog = document['regular'].get('catalog_size', topology_mapping.catalog_size)
        document['regular']['catalog_size'] = max(1, int(math.ceil(catalog / float(scale))))
        if document.get('attack'):
            document['attack']['rate'] = document['attack']['rate'] / float(scale)
        document['settings'] = _overlay(document.get('settings', {}), {'simulation': {'scale': scale}})
        return ScenarioSpec(document)

    @property
    def scale(self):
        return float(self.settings.get('simulation', {}).get('scale', 1))


def load_scenario(reference):
    if isinstance(reference, ScenarioSpec):
        return reference
    path = scenarios_path / '{}.json'.format(reference)
    if not path.exists():
        path = Path(reference)
    if not path.exists():
        raise ConfigurationError('unknown scenario {!r}; try `list`'.format(reference), source=str(reference))
    return ScenarioSpec(_load_json(path), str(path))
