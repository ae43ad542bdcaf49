regular_prefixes = ('/google.com', '/amazon.com', '/youtube.com', '/yahoo.com', '/facebook.com')
attack_prefix = '/yahoo.com'

catalog_size = 10000
content_payload_bytes = 1024
interest_wire_bytes = 50
data_header_bytes = 0

cs_capacity = 1000
pit_capacity = 15000
pit_timeout = 2.0

regular_rate = 3000.0
retx_timeout = 0.2
max_retx = 4
zipf_alphas = (0.7, 0.9, 1.1)

access_bandwidth = 50e6
access_delay = (0.003, 0.005)
provider_bandwidth = 500e6
provider_delay = 0.020
queue_limit = 100

duration = 60.0
warmup = 10.0
epoch_length = 1.0

# Attack names are drawn from ranges that never meet the regular catalog.
unpopular_base = 10 ** 9
nonexistent_base = 5 * 10 ** 9
attacker_stride = 10 ** 8

consumer_edges = {
    'consumer1': 'edge1', 'consumer2': 'edge1', 'consumer3': 'edge1',
    'consumer4': 'edge2', 'consumer5': 'edge2', 'consumer6': 'edge2',
    'consumer7': 'edge3', 'consumer8': 'edge3',
}
compromised_consumers = ('consumer2', 'consumer4', 'consumer7')

# name: (zipf alpha, attack kind, per-attacker rate)
scenario_table = {
    'LDA1': (0.7, 'LDA', 3000.0), 'LDA2': (0.7, 'LDA', 6000.0),
    'LDA3': (0.9, 'LDA', 3000.0), 'LDA4': (0.9, 'LDA', 6000.0),
    'LDA5': (1.1, 'LDA', 3000.0), 'LDA6': (1.1, 'LDA', 6000.0),
    'FLA1': (0.7, 'FLA', 3000.0), 'FLA2': (0.7, 'FLA', 6000.0),
    'FLA3': (0.9, 'FLA', 3000.0), 'FLA4': (0.9, 'FLA', 6000.0),
    'FLA5': (1.1, 'FLA', 3000.0), 'FLA6': (1.1, 'FLA', 6000.0),
}
attack_start = 2.0
fla_nonexistent_start = 3.0
control_scenarios = {'baseline-noattack-a0.7': 0.7, 'baseline-noattack-a0.9': 0.9,
                     'baseline-noattack-a1.1': 1.1}


def default_topology():
    nodes = [{'id': consumer, 'kind': 'consumer', 'compromised': consumer in compromised_consumers}
             for consumer in sorted(consumer_edges)]
    nodes.extend({'id': edge, 'kind': 'router'} for edge in ('edge1', 'edge2', 'edge3'))
    nodes.append({'id': 'gateway', 'kind': 'router', 'detector': True})
    nodes.append({'id': 'provider', 'kind': 'producer', 'prefixes': list(regular_prefixes)})
    links = [{'a': consumer, 'b': edge, 'bandwidth': access_bandwidth, 'delay': list(access_delay)}
             for consumer, edge in sorted(consumer_edges.items())]
    links.extend({'a': edge, 'b': 'gateway', 'bandwidth': access_bandwidth, 'delay': list(access_delay)}
                 for edge in ('edge1', 'edge2', 'edge3'))
    links.append({'a': 'gateway', 'b': 'provider', 'bandwidth': provider_bandwidth, 'delay': provider_delay})
    return {'name': 'default', 'nodes': nodes, 'links': links}
