#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import logging
from collections import deque

import numpy as np

from elda.ndn_sim import topology_mapping
from elda.ndn_sim.names import DataPacket, Interest
from elda.ndn_sim.tables import ContentStore, Fib, PitTable
from elda.ndn_sim.traffic import AttackGenerator, ZipfSampler

logger = logging.getLogger(__name__)

CS_HIT = 'cs-hit'
AGGREGATED = 'aggregated'
FORWARDED = 'forwarded'
RETX_FORWARDED = 'retx-forwarded'
DROPPED_PIT_FULL = 'dropped-pit-full'
DROPPED_NO_ROUTE = 'dropped-no-route'
DELIVERED = 'delivered'
UNSOLICITED = 'unsolicited'

SAMPLE_BLOCK = 4096


class Node(object):
    kind = 'node'

    def __init__(self, env, node_id):
        self.env = env
        self.node_id = node_id
        self.faces = {}

    def attach(self, link):
        self.faces[link.peer(self).node_id] = link

    def send(self, face, packet):
        return self.faces[face].transmit(packet, self)

    def deliver(self, event):
        packet, face = event.value
        if isinstance(packet, Interest):
            self.receive_interest(packet, face)
        else:
            self.receive_data(packet, face)

    def receive_interest(self, interest, face):
        pass

    def receive_data(self, packet, face):
        pass

    def __repr__(self):
        return '{}({})'.format(type(self).__name__, self.node_id)


class RouterState(object):
    def __init__(self, cs_capacity=topology_mapping.cs_capacity, pit_capacity=topology_mapping.pit_capacity,
                 pit_timeout=topology_mapping.pit_timeout):
        self.cs = ContentStore(cs_capacity)
        self.pit = PitTable(pit_capacity, pit_timeout)
        self.fib = Fib()


class Router(Node):
    kind = 'router'

    def __init__(self, env, node_id, state=None, detector=None):
        super(Router, self).__init__(env, node_id)
        self.state = state or RouterState()
        self.detector = detector
        self.interests_in = 0
        self.data_out = 0
        self.no_route = 0
        self.unsolicited = 0
        self.regular_requests = 0
        self.regular_hits = 0
        self.consumer_faces = set()
        self.pit_low = self.state.pit.capacity

    def attach(self, link):
        super(Router, self).attach(link)
        peer = link.peer(self)
        if peer.kind == 'consumer':
            self.consumer_faces.add(peer.node_id)

    def receive_interest(self, interest, face):
        self.process_interest(interest, face)

    def receive_data(self, packet, face):
        self.process_data(packet)

    def process_interest(self, interest, ingress):
        state = self.state
        now = self.env.now
        self.interests_in += 1
        if self.detector is not None:
            self.detector.observe_interest(interest.name)
        if interest.regular and ingress in self.consumer_faces:
            self.regular_requests += 1
        packet = state.cs.lookup(interest.name)
        if packet is not None:
            if interest.regular:
                self.regular_hits += 1
            self.send(ingress, packet)
            self.data_out += 1
            return CS_HIT
        pit = state.pit
        pit.expire(now)
        entry = pit.get(interest.name)
        if entry is not None:
            entry.add_ingress(ingress)
            if interest.retx:
                pit.refresh(entry, now)
                egress = state.fib.longest_prefix_match(interest.name)
                if egress is not None:
                    self.send(egress, interest)
                return RETX_FORWARDED
            return AGGREGATED
        if pit.full:
            pit.dropped += 1
            self.pit_low = 0
            logger.debug('%s: PIT full, dropped %s', self.node_id, interest.name)
            return DROPPED_PIT_FULL
        egress = state.fib.longest_prefix_match(interest.name)
        if egress is None:
            self.no_route += 1
            logger.debug('%s: no route for %s', self.node_id, interest.name)
            return DROPPED_NO_ROUTE
        pit.create(interest.name, ingress, now)
        free = pit.capacity - len(pit)
        if free < self.pit_low:
            self.pit_low = free
        self.send(egress, interest)
        return FORWARDED

    def process_data(self, packet):
        state = self.state
        state.pit.expire(self.env.now)
        entry = state.pit.pop(packet.name)
        if entry is None:
            self.unsolicited += 1
            logger.debug('%s: unsolicited data %s', self.node_id, packet.name)
            return UNSOLICITED
        state.cs.insert(packet)
        for face in entry.ingress:
            self.send(face, packet)
        self.data_out += len(entry.ingress)
        return DELIVERED

    def sample_pit_low(self):
        """Lowest free PIT share since the previous sample."""
        pit = self.state.pit
        pit.expire(self.env.now)
        low = self.pit_low / float(pit.capacity)
        self.pit_low = pit.capacity - len(pit)
        return low


def process_interest(router, interest, ingress):
    return router.process_interest(interest, ingress)


def process_data(router, packet):
    return router.process_data(packet)


class Producer(Node):
    kind = 'producer'

    def __init__(self, env, node_id, prefixes, payload_size=topology_mapping.content_payload_bytes):
        super(Producer, self).__init__(env, node_id)
        self.prefixes = set(p.strip('/') for p in prefixes)
        self.payload_size = payload_size
        self.served = 0
        self.unanswered = 0

    def receive_interest(self, interest, face):
        name = interest.name
        if name.prefix not in self.prefixes or name.is_nonexistent():
            self.unanswered += 1
            return
        self.served += 1
        self.send(face, DataPacket(name, self.payload_size))


class Consumer(Node):
    """Regular consumers issue Poisson Zipf traffic and retransmit; compromised ones only attack."""

    kind = 'consumer'

    def __init__(self, env, node_id, rng, regular=None, attack=None, compromised=False, slot=0,
                 retx_timeout=topology_mapping.retx_timeout, max_retx=topology_mapping.max_retx):
        super(Consumer, self).__init__(env, node_id)
        self.rng = rng
        self.regular = regular
        self.attack = attack
        self.compromised = compromised
        self.slot = slot
        self.retx_timeout = retx_timeout
        self.max_retx = max_retx
        self.outstanding = {}
        self._sent_order = deque()
        self._nonce = 0
        self.sent = 0
        self.attack_sent = 0
        self.retransmissions = 0
        self.satisfied = 0
        self.timeouts = 0
        self.rtt_sum = 0.0
        self.rtt_count = 0

    @property
    def gateway_face(self):
        return next(iter(self.faces))

    def start(self, offset=0.0):
        if self.compromised:
            if self.attack is not None:
                self.env.process(self._attack_loop(offset))
        elif self.regular is not None:
            self.env.process(self._regular_loop())
            self.env.process(self._retx_loop())

    def _next_nonce(self):
        self._nonce += 1
        return self._nonce

    def _emit(self, name, regular=True, retx=False):
        interest = Interest(name, self._next_nonce(), self.env.now, self.node_id, regular, retx)
        self.send(self.gateway_face, interest)

    def _regular_loop(self):
        sampler = ZipfSampler(self.regular.alpha, self.regular.catalog_size)
        mean_gap = 1.0 / self.regular.rate
        while True:
            gaps = self.rng.exponential(mean_gap, SAMPLE_BLOCK)
            ranks = sampler.sample(self.rng, SAMPLE_BLOCK)
            for gap, rank in zip(gaps, ranks):
                yield self.env.timeout(gap)
                self.request(self.regular.regular_name(rank))

    def request(self, name):
        now = self.env.now
        self.sent += 1
        if name.uri not in self.outstanding:
            self.outstanding[name.uri] = [now, now, 0]
            self._sent_order.append((now, name))
        self._emit(name)

    def _retx_loop(self):
        step = self.retx_timeout / 4.0
        while True:
            yield self.env.timeout(step)
            now = self.env.now
            order = self._sent_order
            while order and order[0][0] + self.retx_timeout <= now:
                sent_at, name = order.popleft()
                record = self.outstanding.get(name.uri)
                if record is None or record[1] != sent_at:
                    continue
                if record[2] >= self.max_retx:
                    del self.outstanding[name.uri]
                    self.timeouts += 1
                    # abandoned interests count with their give-up time
                    self.rtt_sum += now - record[0]
                    self.rtt_count += 1
                    continue
                record[1] = now
                record[2] += 1
                order.append((now, name))
                self.retransmissions += 1
                self._emit(name, retx=True)

    def _attack_loop(self, offset):
        generator = AttackGenerator(self.attack, self.slot)
        while True:
            wait = generator.next_time() + offset - self.env.now
            if wait > 0:
                yield self.env.timeout(wait)
            for name in generator.due(self.env.now - offset):
                self.attack_sent += 1
                self._emit(name, regular=False)

    def receive_data(self, packet, face):
        record = self.outstanding.pop(packet.name.uri, None)
        if record is None:
            return
        self.satisfied += 1
        self.rtt_sum += self.env.now - record[0]
        self.rtt_count += 1

    def take_rtt(self):
        total, count = self.rtt_sum, self.rtt_count
        self.rtt_sum, self.rtt_count = 0.0, 0
        return total, count
