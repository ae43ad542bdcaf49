import logging
from collections import deque

from elda.exceptions import ConfigurationError
from elda.ndn_sim import topology_mapping

logger = logging.getLogger(__name__)


class _Direction(object):
    __slots__ = ('busy_until', 'departures', 'sent', 'dropped')

    def __init__(self):
        self.busy_until = 0.0
        self.departures = deque()
        self.sent = 0
        self.dropped = 0


class Link(object):
    """Full-duplex point-to-point link with a drop-tail queue in each direction."""

    def __init__(self, env, a, b, bandwidth, delay, queue_limit=topology_mapping.queue_limit):
        if bandwidth <= 0 or delay < 0 or queue_limit < 1:
            raise ConfigurationError('link {}-{} has invalid parameters'.format(a.node_id, b.node_id))
        self.env = env
        self.a = a
        self.b = b
        self.bandwidth = float(bandwidth)
        self.delay = float(delay)
        self.queue_limit = int(queue_limit)
        self._directions = {a.node_id: _Direction(), b.node_id: _Direction()}

    def peer(self, node):
        return self.b if node is self.a else self.a

    def transmit(self, packet, sender):
        now = self.env.now
        direction = self._directions[sender.node_id]
        departures = direction.departures
        while departures and departures[0] <= now:
            departures.popleft()
        if len(departures) >= self.queue_limit:
            direction.dropped += 1
            return False
        start = direction.busy_until if direction.busy_until > now else now
        done = start + packet.wire_size * 8 / self.bandwidth
        direction.busy_until = done
        departures.append(done)
        direction.sent += 1
        arrival = self.env.timeout(done + self.delay - now, value=(packet, sender.node_id))
        arrival.callbacks.append(self.peer(sender).deliver)
        return True

    @property
    def dropped(self):
        return sum(d.dropped for d in self._directions.values())
