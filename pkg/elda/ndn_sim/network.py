#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import logging
from collections import deque

import numpy as np
import simpy

from elda.exceptions import ConfigurationError
from elda.ndn_sim import topology_mapping
from elda.ndn_sim.link import Link
from elda.ndn_sim.metrics import MetricsCollector
from elda.ndn_sim.nodes import Consumer, Producer, Router, RouterState

logger = logging.getLogger(__name__)

NODE_KINDS = ('consumer', 'router', 'producer')


class Network(object):
    def __init__(self, env, name='network'):
        self.env = env
        self.name = name
        self.nodes = {}
        self.links = []
        self.downstream = {}
        self.subtree = {}
        self.detectors = {}
        self.warmup = 0.0

    @property
    def routers(self):
        return [n for n in self.nodes.values() if n.kind == 'router']

    @property
    def consumers(self):
        return [n for n in self.nodes.values() if n.kind == 'consumer']

    @property
    def producers(self):
        return [n for n in self.nodes.values() if n.kind == 'producer']

    def configure_traffic(self, regular=None, attack=None):
        slot = 0
        for consumer in self.consumers:
            consumer.regular = regular
            if consumer.compromised:
                consumer.attack = attack
                consumer.slot = slot
                slot += 1

    def attach_detector(self, router_id, detector):
        router = self.nodes.get(router_id)
        if router is None or router.kind != 'router':
            raise ConfigurationError('detector placement {!r} is not a router'.format(router_id))
        router.detector = detector
        self.detectors[router_id] = detector

    def alarms(self):
        """Alarms of epochs that overlap the measured interval, in time order."""
        alarms = []
        for router_id in sorted(self.detectors):
            if self.detectors[router_id] is None:
                continue
            alarms.extend(a for a in self.detectors[router_id].alarms if a.wall_time is not None and a.wall_time > 0)
        return sorted(alarms, key=lambda a: (a.wall_time, a.prefix))

    def counters(self):
        routers = self.routers
        consumers = self.consumers
        return {
            'pit_drops': sum(r.state.pit.dropped for r in routers),
            'pit_expired': sum(r.state.pit.expired for r in routers),
            'no_route': sum(r.no_route for r in routers),
            'unsolicited': sum(r.unsolicited for r in routers),
            'link_drops': sum(link.dropped for link in self.links),
            'unanswered': sum(p.unanswered for p in self.producers),
            'served': sum(p.served for p in self.producers),
            'regular_sent': sum(c.sent for c in consumers),
            'attack_sent': sum(c.attack_sent for c in consumers),
            'retransmissions': sum(c.retransmissions for c in consumers),
            'satisfied': sum(c.satisfied for c in consumers),
            'timeouts': sum(c.timeouts for c in consumers),
        }


def _link_delay(delay, rng):
    if isinstance(delay, (list, tuple)):
        if len(delay) != 2 or delay[0] > delay[1]:
            raise ConfigurationError('delay range must be [low, high], got {!r}'.format(delay))
        return float(rng.uniform(delay[0], delay[1]))
    return float(delay)


def _validate(spec):
    if not isinstance(spec, dict) or 'nodes' not in spec or 'links' not in spec:
        raise ConfigurationError('topology needs "nodes" and "links"')
    ids = [n.get('id') for n in spec['nodes']]
    if len(set(ids)) != len(ids) or not all(isinstance(i, str) and i for i in ids):
        raise ConfigurationError('node ids must be unique non-empty strings')
    for node in spec['nodes']:
        if node.get('kind') not in NODE_KINDS:
            raise ConfigurationError('node {} has unknown kind {!r}'.format(node['id'], node.get('kind')))
    known = set(ids)
    for link in spec['links']:
        if link.get('a') not in known or link.get('b') not in known or link.get('a') == link.get('b'):
            raise ConfigurationError('link {}-{} references unknown nodes'.format(link.get('a'), link.get('b')))
    if len(spec['links']) != len(ids) - 1:
        raise ConfigurationError('topology must be a tree ({} nodes, {} links)'.format(len(ids), len(spec['links'])))
    if not any(n['kind'] == 'producer' for n in spec['nodes']):
        raise ConfigurationError('topology has no producer')


def build_topology(spec=None, seed=0, cs_capacity=topology_mapping.cs_capacity,
                   pit_capacity=topology_mapping.pit_capacity, pit_timeout=topology_mapping.pit_timeout,
                   queue_limit=topology_mapping.queue_limit, env=None):
    spec = spec or topology_mapping.default_topology()
    _validate(spec)
    env = env or simpy.Environment()
    network = Network(env, spec.get('name', 'network'))
    for node in spec['nodes']:
        if node['kind'] == 'router':
            built = Router(env, node['id'], RouterState(cs_capacity, pit_capacity, pit_timeout))
        elif node['kind'] == 'producer':
            built = Producer(env, node['id'], node.get('prefixes', topology_mapping.regular_prefixes))
        else:
            built = Consumer(env, node['id'], None, compromised=bool(node.get('compromised', False)))
        network.nodes[node['id']] = built
    rng = np.random.default_rng(seed)
    for link in spec['links']:
        a, b = network.nodes[link['a']], network.nodes[link['b']]
        built = Link(env, a, b, link.get('bandwidth', topology_mapping.access_bandwidth),
                     _link_delay(link.get('delay', topology_mapping.access_delay), rng),
                     link.get('queue_limit', queue_limit))
        a.attach(built)
        b.attach(built)
        network.links.append(built)
    for consumer in network.consumers:
        if len(consumer.faces) != 1:
            raise ConfigurationError('consumer {} must have exactly one link'.format(consumer.node_id))
    parents = _install_routes(network)
    _map_downstream(network, parents)
    for node in spec['nodes']:
        if node.get('detector'):
            network.detectors.setdefault(node['id'], None)
    return network


def _install_routes(network):
    """Multi-source BFS from the producers of each prefix; returns the parent map for the first prefix."""
    prefixes = []
    for producer in network.producers:
        prefixes.extend(p for p in sorted(producer.prefixes) if p not in prefixes)
    first_parents = None
    for prefix in prefixes:
        sources = [p for p in network.producers if prefix in p.prefixes]
        parents = {p.node_id: None for p in sources}
        queue = deque(sources)
        while queue:
            node = queue.popleft()
            for face in sorted(node.faces):
                if face in parents:
                    continue
                parents[face] = node.node_id
                neighbour = network.nodes[face]
                if neighbour.kind == 'router':
                    neighbour.state.fib.add_route('/' + prefix, node.node_id)
                    queue.append(neighbour)
        if len(parents) != len(network.nodes):
            unreachable = sorted(set(network.nodes) - set(parents))
            raise ConfigurationError('nodes {} cannot reach a producer of /{}'.format(unreachable, prefix))
        if first_parents is None:
            first_parents = parents
    return first_parents


def _map_downstream(network, parents):
    network.downstream = {router.node_id: [] for router in network.routers}
    network.subtree = {router.node_id: [] for router in network.routers}
    for consumer in network.consumers:
        hop = parents[consumer.node_id]
        while hop is not None:
            if hop in network.downstream:
                network.downstream[hop].append(consumer.node_id)
            hop = parents[hop]
    for router in sorted(network.routers, key=lambda r: r.node_id):
        hop = router.node_id
        while hop is not None:
            if hop in network.subtree:
                network.subtree[hop].append(router.node_id)
            hop = parents[hop]


def run(network, duration, seed=0, warmup=0.0, epoch_length=topology_mapping.epoch_length):
    env = network.env
    network.warmup = float(warmup)
    streams = np.random.SeedSequence(seed).spawn(len(network.consumers))
    for consumer, stream in zip(sorted(network.consumers, key=lambda c: c.node_id), streams):
        consumer.rng = np.random.default_rng(stream)
        consumer.start(offset=warmup)
    collector = MetricsCollector(network)
    env.process(collector.process(warmup))
    active = {k: v for k, v in network.detectors.items() if v is not None}
    if active:
        env.process(_epoch_clock(env, active, epoch_length, warmup))
    logger.info('simulating %s for %.1f s after %.1f s warm-up', network.name, duration, warmup)
    env.run(until=warmup + duration + 1e-9)
    counters = network.counters()
    logger.info('run finished: %s', ', '.join('{}={}'.format(k, v) for k, v in sorted(counters.items())))
    return collector.trace


def _epoch_clock(env, detectors, epoch_length, warmup):
    while True:
        yield env.timeout(epoch_length)
        for router_id in sorted(detectors):
            detectors[router_id].end_epoch(wall_time=round(env.now - warmup, 9))
