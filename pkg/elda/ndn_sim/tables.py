import logging
from collections import OrderedDict

from elda.exceptions import ConfigurationError

logger = logging.getLogger(__name__)


class ContentStore(object):
    def __init__(self, capacity):
        if capacity < 0:
            raise ConfigurationError('content store capacity must be non-negative')
        self.capacity = int(capacity)
        self.entries = OrderedDict()
        self.hits = 0
        self.misses = 0

    def lookup(self, name):
        packet = self.entries.get(name.uri)
        if packet is None:
            self.misses += 1
            return None
        self.entries.move_to_end(name.uri)
        self.hits += 1
        return packet

    def insert(self, packet):
        if self.capacity == 0:
            return
        key = packet.name.uri
        if key in self.entries:
            self.entries.move_to_end(key)
        elif len(self.entries) >= self.capacity:
            self.entries.popitem(last=False)
        self.entries[key] = packet

    def __len__(self):
        return len(self.entries)

    def __contains__(self, name):
        return name.uri in self.entries


def cs_lookup(cs, name):
    return cs.lookup(name)


def cs_insert(cs, packet):
    cs.insert(packet)


class PitEntry(object):
    __slots__ = ('name', 'ingress', 'created')

    def __init__(self, name, created):
        self.name = name
        self.ingress = []
        self.created = created

    def add_ingress(self, face):
        if face not in self.ingress:
            self.ingress.append(face)


class PitTable(object):
    """Pending interests ordered by creation; expiry is lazy and happens on access."""

    def __init__(self, capacity, timeout):
        if capacity < 1 or timeout <= 0:
            raise ConfigurationError('PIT needs a positive capacity and timeout')
        self.capacity = int(capacity)
        self.timeout = float(timeout)
        self.entries = OrderedDict()
        self.expired = 0
        self.dropped = 0

    def expire(self, now):
        entries = self.entries
        limit = now - self.timeout
        while entries:
            entry = next(iter(entries.values()))
            if entry.created > limit:
                break
            entries.popitem(last=False)
            self.expired += 1

    def get(self, name):
        return self.entries.get(name.uri)

    def create(self, name, face, now):
        entry = PitEntry(name, now)
        entry.add_ingress(face)
        self.entries[name.uri] = entry
        return entry

    def refresh(self, entry, now):
        entry.created = now
        self.entries.move_to_end(entry.name.uri)

    def pop(self, name):
        return self.entries.pop(name.uri, None)

    @property
    def full(self):
        return len(self.entries) >= self.capacity

    def available_rate(self):
        return (self.capacity - len(self.entries)) / float(self.capacity)

    def __len__(self):
        return len(self.entries)


class Fib(object):
    def __init__(self):
        self.routes = {}

    def add_route(self, prefix, face):
        components = tuple(c for c in prefix.split('/') if c) if isinstance(prefix, str) else tuple(prefix)
        self.routes[components] = face

    def longest_prefix_match(self, name):
        components = name.components
        for length in range(len(components), -1, -1):
            face = self.routes.get(components[:length])
            if face is not None:
                return face
        return None
