import csv
import logging

logger = logging.getLogger(__name__)

METRICS_SCHEMA = 'metrics v2'
METRICS_FIELDS = ('time_s', 'node', 'cache_hit_rate', 'pit_available_rate', 'avg_rtt_ms', 'interests_in',
                  'data_out', 'regular_hit_rate')


class MetricsRow(object):
    __slots__ = METRICS_FIELDS

    def __init__(self, time_s, node, cache_hit_rate, pit_available_rate, avg_rtt_ms, interests_in, data_out,
                 regular_hit_rate=None):
        self.time_s = time_s
        self.node = node
        self.cache_hit_rate = cache_hit_rate
        self.pit_available_rate = pit_available_rate
        self.avg_rtt_ms = avg_rtt_ms
        self.interests_in = interests_in
        self.data_out = data_out
        self.regular_hit_rate = regular_hit_rate

    def as_row(self):
        def fmt(value):
            return '' if value is None else '{:.6f}'.format(value)
        return [self.time_s, self.node, fmt(self.cache_hit_rate), fmt(self.pit_available_rate),
                fmt(self.avg_rtt_ms), self.interests_in, self.data_out, fmt(self.regular_hit_rate)]

    def __eq__(self, other):
        return isinstance(other, MetricsRow) and self.as_row() == other.as_row()


class MetricsTrace(object):
    def __init__(self, rows=None):
        self.rows = rows or []

    def append(self, row):
        self.rows.append(row)

    def for_node(self, node):
        return [row for row in self.rows if row.node == node]

    def series(self, node, field):
        return [getattr(row, field) for row in self.for_node(node)]

    def write_csv(self, path):
        with open(path, 'w', newline='') as f:
            f.write('# schema: {}\n'.format(METRICS_SCHEMA))
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(METRICS_FIELDS)
            for row in self.rows:
                writer.writerow(row.as_row())

    def __len__(self):
        return len(self.rows)

    def __eq__(self, other):
        return isinstance(other, MetricsTrace) and [r.as_row() for r in self.rows] == [r.as_row() for r in other.rows]


class MetricsCollector(object):
    """Samples every router and consumer once per simulated second.

    A router's regular_hit_rate is the share of regular interests entering its
    subtree from consumers that some content store in the subtree answered.
    """

    def __init__(self, network):
        self.network = network
        self.trace = MetricsTrace()
        self._last = {}
        self._regular = {}

    def _router_counters(self, router):
        cs = router.state.cs
        return cs.hits, cs.misses, router.interests_in, router.data_out

    def _snapshot(self):
        for router in self.network.routers:
            self._last[router.node_id] = self._router_counters(router)
            self._regular[router.node_id] = (router.regular_hits, router.regular_requests)
            router.sample_pit_low()
        for consumer in self.network.consumers:
            self._last[consumer.node_id] = (consumer.sent + consumer.attack_sent + consumer.retransmissions,
                                            consumer.satisfied)
            consumer.take_rtt()

    def process(self, warmup):
        env = self.network.env
        if warmup > 0:
            yield env.timeout(warmup)
        self._snapshot()
        second = 0
        while True:
            yield env.timeout(1.0)
            self.record(second)
            second += 1

    def record(self, second):
        rtts = {}
        for consumer in self.network.consumers:
            total, count = consumer.take_rtt()
            rtts[consumer.node_id] = (total, count)
            previous_sent, previous_satisfied = self._last[consumer.node_id]
            sent = consumer.sent + consumer.attack_sent + consumer.retransmissions
            self._last[consumer.node_id] = (sent, consumer.satisfied)
            self.trace.append(MetricsRow(second, consumer.node_id, None, None, _avg_ms(total, count),
                                         sent - previous_sent, consumer.satisfied - previous_satisfied))
        regular = {}
        for router in self.network.routers:
            hits0, requests0 = self._regular[router.node_id]
            regular[router.node_id] = (router.regular_hits - hits0, router.regular_requests - requests0)
            self._regular[router.node_id] = (router.regular_hits, router.regular_requests)
        for router in self.network.routers:
            hits0, misses0, in0, out0 = self._last[router.node_id]
            hits, misses, interests_in, data_out = self._router_counters(router)
            self._last[router.node_id] = (hits, misses, interests_in, data_out)
            hits, misses = hits - hits0, misses - misses0
            total = sum(rtts[c][0] for c in self.network.downstream[router.node_id])
            count = sum(rtts[c][1] for c in self.network.downstream[router.node_id])
            subtree = self.network.subtree.get(router.node_id, [router.node_id])
            regular_hits = sum(regular[r][0] for r in subtree)
            regular_requests = sum(regular[r][1] for r in subtree)
            self.trace.append(MetricsRow(second, router.node_id,
                                         hits / float(hits + misses) if hits + misses else 0.0,
                                         router.sample_pit_low(), _avg_ms(total, count),
                                         interests_in - in0, data_out - out0,
                                         min(1.0, regular_hits / float(regular_requests)) if regular_requests else 0.0))


def _avg_ms(total, count):
    return 1000.0 * total / count if count else None
