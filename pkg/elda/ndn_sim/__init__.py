from elda.ndn_sim.names import DataPacket, Interest, Name
from elda.ndn_sim.network import Network, build_topology, run
from elda.ndn_sim.tables import ContentStore, Fib, PitTable, cs_insert, cs_lookup
from elda.ndn_sim.traffic import AttackGenerator, TrafficProfile, ZipfSampler, attack_stream, zipf_sample

__all__ = ['AttackGenerator', 'ContentStore', 'DataPacket', 'Fib', 'Interest', 'Name', 'Network', 'PitTable',
           'TrafficProfile', 'ZipfSampler', 'attack_stream', 'build_topology', 'cs_insert', 'cs_lookup', 'run',
           'zipf_sample']
