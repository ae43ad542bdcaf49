from elda.exceptions import ConfigurationError
from elda.ndn_sim import topology_mapping


class Name(object):
    __slots__ = ('components', 'uri')

    def __init__(self, components):
        components = tuple(components)
        if not components or not all(isinstance(c, str) and c for c in components):
            raise ConfigurationError('a name needs at least one non-empty component: {!r}'.format(components))
        self.components = components
        self.uri = '/' + '/'.join(components)

    @classmethod
    def from_uri(cls, uri):
        return cls([c for c in uri.split('/') if c])

    @classmethod
    def content(cls, prefix, identifier):
        return cls([prefix.strip('/'), str(identifier)])

    @property
    def prefix(self):
        return self.components[0]

    @property
    def prefix_uri(self):
        return '/' + self.components[0]

    @property
    def identifier(self):
        try:
            return int(self.components[-1])
        except ValueError:
            return None

    def is_nonexistent(self):
        identifier = self.identifier
        return identifier is not None and identifier >= topology_mapping.nonexistent_base

    def __str__(self):
        return self.uri

    def __repr__(self):
        return 'Name({!r})'.format(self.uri)

    def __eq__(self, other):
        return isinstance(other, Name) and self.uri == other.uri

    def __hash__(self):
        return hash(self.uri)


class Interest(object):
    __slots__ = ('name', 'nonce', 'issue_time', 'consumer', 'regular', 'retx')

    wire_size = topology_mapping.interest_wire_bytes

    def __init__(self, name, nonce, issue_time, consumer=None, regular=True, retx=False):
        self.name = name
        self.nonce = nonce
        self.issue_time = issue_time
        self.consumer = consumer
        self.regular = regular
        self.retx = retx


class DataPacket(object):
    __slots__ = ('name', 'payload_size')

    def __init__(self, name, payload_size=topology_mapping.content_payload_bytes):
        self.name = name
        self.payload_size = payload_size

    @property
    def wire_size(self):
        return self.payload_size + topology_mapping.data_header_bytes
