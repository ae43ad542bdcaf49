#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
# Lightweight Flajolet-Martin sketch.
#
# One murmur hash per item is split into M substrings. The index of the leftmost
# 1 bit of each substring forms the item's index set, and N permutation patterns
# read the index set in different substring orders, which emulates N independent
# hash functions at the cost of one. Each pattern owns an L-bit bitmap; the
# harmonic mean of the bitmaps' leftmost-0 positions gives the estimate.

import functools
import itertools
import json
import logging
import math

import mmh3
import numpy as np

from elda import sketch_mapping
from elda.exceptions import ConfigurationError, SerializationError

logger = logging.getLogger(__name__)

NONE = None

SKETCH_KEYS = ('L', 'M', 'N', 'hash_seed', 'pattern_seed', 'calibration', 'pattern_strategy')


class SketchConfig(object):
    def __init__(self, L=sketch_mapping.default_hash_bits, M=sketch_mapping.default_substrings,
                 N=sketch_mapping.default_bitmaps, hash_seed=0, pattern_seed=0,
                 calibration=sketch_mapping.default_calibration, pattern_strategy='balanced'):
        self.L = int(L)
        self.M = int(M)
        self.N = int(N)
        self.hash_seed = int(hash_seed)
        self.pattern_seed = int(pattern_seed)
        self.calibration = float(calibration)
        self.pattern_strategy = pattern_strategy
        self._validate()

    def _validate(self):
        if self.M < 1 or self.L < 1 or self.N < 1:
            raise ConfigurationError('L, M and N must be positive (L={}, M={}, N={})'.format(self.L, self.M, self.N))
        if self.L > 128:
            raise ConfigurationError('hash length is limited to 128 bits, got {}'.format(self.L))
        if self.L % self.M:
            raise ConfigurationError('L={} is not divisible by M={}'.format(self.L, self.M))
        if self.L // self.M < 2:
            raise ConfigurationError('substring length L/M must be at least 2, got {}'.format(self.L // self.M))
        if self.N > math.factorial(self.M):
            raise ConfigurationError('N={} exceeds the {} permutations of {} substrings'.format(
                self.N, math.factorial(self.M), self.M))
        if not 0 <= self.hash_seed < 2 ** 32:
            raise ConfigurationError('hash_seed must fit in 32 bits')
        if self.calibration <= 0:
            raise ConfigurationError('calibration constant must be positive')
        if self.pattern_strategy not in PATTERN_STRATEGIES:
            raise ConfigurationError('unknown pattern strategy {!r}'.format(self.pattern_strategy))

    @property
    def substring_length(self):
        return self.L // self.M

    @classmethod
    def from_dict(cls, settings):
        return cls(**{key: settings[key] for key in SKETCH_KEYS if key in settings})

    def to_dict(self):
        return {'L': self.L, 'M': self.M, 'N': self.N, 'hash_seed': self.hash_seed,
                'pattern_seed': self.pattern_seed, 'calibration': self.calibration,
                'pattern_strategy': self.pattern_strategy}

    def __eq__(self, other):
        return isinstance(other, SketchConfig) and self.to_dict() == other.to_dict()

    def __repr__(self):
        return 'SketchConfig({})'.format(', '.join('{}={}'.format(k, v) for k, v in self.to_dict().items()))


class OpCounter(object):
    __slots__ = ('hash_ops', 'substring_scans', 'pattern_steps')

    def __init__(self):
        self.reset()

    def reset(self):
        self.hash_ops = 0
        self.substring_scans = 0
        self.pattern_steps = 0

    def as_dict(self):
        return {'hash_ops': self.hash_ops, 'substring_scans': self.substring_scans,
                'pattern_steps': self.pattern_steps}


class PermutationPatternMatrix(object):
    """Immutable N x M matrix of substring identifiers, one permutation per row."""

    def __init__(self, rows):
        rows = np.array(rows, dtype=np.int16)
        if rows.ndim != 2 or rows.shape[0] < 1:
            raise ConfigurationError('pattern matrix must be a non-empty 2-D array')
        rows.setflags(write=False)
        self.rows = rows
        self._tries = {}
        self.validate()

    def validate(self):
        N, M = self.rows.shape
        identity = np.arange(M)
        for i, row in enumerate(self.rows):
            if not np.array_equal(np.sort(row), identity):
                raise ConfigurationError('pattern row {} is not a permutation of 0..{}'.format(i, M - 1))
        if len({row.tobytes() for row in self.rows}) != N:
            raise ConfigurationError('pattern matrix holds duplicate rows')

    @property
    def N(self):
        return self.rows.shape[0]

    @property
    def M(self):
        return self.rows.shape[1]

    def trie(self, L, s):
        trie = self._tries.get((L, s))
        if trie is None:
            trie = self._tries[(L, s)] = PatternTrie(self.rows, L, s)
        return trie

    def footprint_bits(self):
        return self.N * self.M * int(math.ceil(math.log2(self.M)))

    def __len__(self):
        return self.N

    def __getitem__(self, i):
        return self.rows[i]

    def __iter__(self):
        return iter(self.rows)


PATTERN_STRATEGIES = ('balanced', 'uniform')


class _PrefixBalance(object):
    """Greedy row builder for the balanced strategy.

    Two rows whose leading identifiers form the same set read the same pool of
    items at that depth, so the builder keeps both the identifier sets and the
    (set, next identifier) classes as even as the row count allows.
    """

    def __init__(self, M, N):
        self.M = M
        self.class_weight = [math.comb(M, m) * (M - m) / float(N) for m in range(M)]
        self.pool_weight = [math.comb(M, m + 1) / float(N) for m in range(M)]
        self.classes = {}
        self.pools = {}

    def draw(self, rng):
        mask = 0
        row = []
        remaining = list(range(self.M))
        for m in range(self.M):
            scores = np.array([self.classes.get((mask, x), 0) * self.class_weight[m] +
                               self.pools.get(mask | 1 << x, 0) * self.pool_weight[m] for x in remaining])
            best = np.flatnonzero(scores <= scores.min() + 1e-9)
            x = remaining.pop(int(best[rng.integers(len(best))]))
            row.append(x)
            mask |= 1 << x
        return np.array(row, dtype=np.int16)

    def commit(self, row):
        mask = 0
        for x in row.tolist():
            self.classes[(mask, x)] = self.classes.get((mask, x), 0) + 1
            mask |= 1 << x
            self.pools[mask] = self.pools.get(mask, 0) + 1


def generate_patterns(M, N, pattern_seed=0, strategy='balanced'):
    if N < 1 or M < 1:
        raise ConfigurationError('M and N must be positive')
    if strategy not in PATTERN_STRATEGIES:
        raise ConfigurationError('unknown pattern strategy {!r}'.format(strategy))
    total = math.factorial(M)
    if N > total:
        raise ConfigurationError('cannot select {} distinct patterns out of {} permutations'.format(N, total))
    rng = np.random.default_rng(pattern_seed)
    if 2 * N > total:
        # Dense selection: rejection would spend most draws on duplicates.
        every = np.array(list(itertools.permutations(range(M))), dtype=np.int16)
        return PermutationPatternMatrix(every[rng.permutation(total)[:N]])
    balance = _PrefixBalance(M, N) if strategy == 'balanced' else None
    seen = set()
    rows = []
    failures = 0
    while len(rows) < N:
        if balance is not None and failures < sketch_mapping.balanced_draw_attempts:
            row = balance.draw(rng)
        else:
            row = rng.permutation(M).astype(np.int16)
        key = row.tobytes()
        if key in seen:
            failures += 1
            continue
        failures = 0
        seen.add(key)
        rows.append(row)
        if balance is not None:
            balance.commit(row)
    return PermutationPatternMatrix(rows)


def _as_bytes(item):
    if isinstance(item, bytes):
        return item
    if isinstance(item, str):
        return item.encode('utf-8')
    return str(item).encode('utf-8')


def hash_value(item, L, seed):
    if L <= 32:
        return mmh3.hash(_as_bytes(item), seed, signed=False) >> (32 - L)
    return mmh3.hash128(_as_bytes(item), seed, signed=False) >> (128 - L)


def hash_item(item, config, counter=None):
    if counter is not None:
        counter.hash_ops += 1
    return hash_value(item, config.L, config.hash_seed)


@functools.lru_cache(maxsize=None)
def _chunk_table(s, count):
    """(index set, scan count) of `count` adjacent s-bit substrings for every chunk value."""
    values = np.arange(1 << (s * count), dtype=np.int64)
    columns = []
    scans = np.zeros(len(values), dtype=np.int64)
    for j in range(count):
        sub = (values >> ((count - 1 - j) * s)) & ((1 << s) - 1)
        # frexp exponent is the bit length
        ix = np.where(sub > 0, s - np.frexp(sub.astype(float))[1], -1)
        scans += np.where(ix >= 0, ix + 1, s)
        columns.append(ix.tolist())
    return list(zip(zip(*columns), scans.tolist()))


@functools.lru_cache(maxsize=None)
def _chunk_plan(L, M):
    """Table, mask and shifts reading an L-bit hash in chunks of whole substrings of at most 16 bits."""
    s = L // M
    count = max(c for c in range(1, M + 1) if M % c == 0 and c * s <= 16)
    width = s * count
    return _chunk_table(s, count), (1 << width) - 1, tuple(range(L - width, -1, -width))


def split_and_index(h, config, counter=None):
    """Leftmost-1 index inside each substring of h, most significant substring first."""
    if config.L > 16 * config.M:
        indices, scans = _scan_substrings(h, config.L, config.M)
    else:
        table, mask, shifts = _chunk_plan(config.L, config.M)
        indices = ()
        scans = 0
        for shift in shifts:
            chunk, chunk_scans = table[(h >> shift) & mask]
            indices += chunk
            scans += chunk_scans
    if counter is not None:
        counter.substring_scans += scans
    return indices


def _scan_substrings(h, L, M):
    s = L // M
    mask = (1 << s) - 1
    indices = []
    scans = 0
    for j in range(M):
        sub = (h >> (L - (j + 1) * s)) & mask
        if sub:
            ix = s - sub.bit_length()
            scans += ix + 1
        else:
            ix = -1
            scans += s
        indices.append(ix)
    return tuple(indices), scans


def permuted_leftmost_one(ix, pattern, config, counter=None):
    s = config.substring_length
    offset = 0
    steps = 0
    for ident in pattern:
        steps += 1
        if ix[ident] < 0:
            offset += s
            continue
        if counter is not None:
            counter.pattern_steps += steps
        return offset + ix[ident]
    if counter is not None:
        counter.pattern_steps += steps
    return NONE


def leftmost_zero(bitmap):
    zeros = np.flatnonzero(~np.asarray(bitmap, dtype=bool))
    return int(zeros[0]) if zeros.size else len(bitmap)


def registers_of(bitmaps):
    bitmaps = np.asarray(bitmaps, dtype=bool)
    unset = ~bitmaps
    return np.where(unset.any(axis=1), unset.argmax(axis=1), bitmaps.shape[1])


def harmonic_statistic(registers):
    registers = np.maximum(np.asarray(registers, dtype=float), 1.0)
    return len(registers) / float(np.sum(1.0 / registers))


def harmonic_estimate(registers, calibration):
    return calibration * 2.0 ** harmonic_statistic(registers)


def index_batch(hashes, config):
    """Vectorised split_and_index over an array of hash values; returns (index sets, scan count)."""
    s = config.substring_length
    hashes = np.asarray(hashes, dtype=object if config.L > 64 else np.uint64)
    result = np.full((len(hashes), config.M), -1, dtype=np.int16)
    scans = 0
    for j in range(config.M):
        shift = config.L - (j + 1) * s
        if config.L > 64:
            subs = np.array([(int(h) >> shift) & ((1 << s) - 1) for h in hashes], dtype=object)
            column = np.array([s - int(v).bit_length() if v else -1 for v in subs], dtype=np.int16)
        else:
            subs = (hashes >> np.uint64(shift)) & np.uint64((1 << s) - 1)
            column = np.full(len(hashes), -1, dtype=np.int16)
            for b in range(s):
                bit = (subs >> np.uint64(s - 1 - b)) & np.uint64(1)
                column[(column < 0) & (bit == 1)] = b
        result[:, j] = column
        scans += int(np.where(column >= 0, column + 1, s).sum())
    return result, scans


def resolve_patterns(ix_batch, rows, s):
    """For a batch of index sets, each pattern's (found, bit index, source identifier, steps)."""
    ordered = ix_batch[:, rows]
    hit = ordered >= 0
    first = hit.argmax(axis=2)
    found = hit.any(axis=2)
    chosen = np.take_along_axis(ordered, first[..., None], axis=2)[..., 0].astype(np.int64)
    k = first * s + chosen
    source = np.take_along_axis(np.broadcast_to(rows, ordered.shape), first[..., None], axis=2)[..., 0]
    steps = int(np.where(found, first + 1, rows.shape[1]).sum())
    return found, k, source, steps


class PatternTrie(object):
    """Pattern rows grouped by their leading identifiers.

    Rows that share a prefix of all-zero substrings resolve together, so one insert
    visits each distinct prefix once. Every edge keeps, per leftmost-1 index,
    the flat bitmap positions of the rows it reaches.
    """

    def __init__(self, rows, L, s):
        rows = np.asarray(rows)
        self.L = L
        self.s = s
        self.M = rows.shape[1]
        self.edges = self._level(rows, np.arange(rows.shape[0]), 0)

    def _level(self, rows, members, depth):
        edges = []
        column = rows[members, depth]
        for ident in np.unique(column).tolist():
            below = members[column == ident]
            base = below.astype(np.intp) * self.L + depth * self.s
            targets = tuple(base + v for v in range(self.s))
            children = self._level(rows, below, depth + 1) if depth + 1 < self.M else []
            edges.append((ident, depth + 1, len(below), targets, children))
        return edges

    def resolve(self, ix):
        """Flat bitmap positions set by index set `ix` and the pattern steps it takes."""
        hits = []
        steps = _walk(self.edges, ix, hits)
        return hits, steps

    def resolve_batch(self, ix_batch):
        """Like `resolve` for a whole batch; only the union of positions is kept."""
        hits = []
        steps = _walk_batch(self.edges, np.asarray(ix_batch), hits)
        return hits, steps


def _walk(edges, ix, hits):
    steps = 0
    for ident, depth, size, targets, children in edges:
        v = ix[ident]
        if v >= 0:
            hits.append(targets[v])
            steps += depth * size
        elif children:
            steps += _walk(children, ix, hits)
        else:
            steps += depth * size
    return steps


def _walk_batch(edges, ix_batch, hits):
    steps = 0
    for ident, depth, size, targets, children in edges:
        column = ix_batch[:, ident]
        found = column >= 0
        count = int(found.sum())
        steps += depth * size * count
        if count:
            hits.extend(targets[v] for v in np.unique(column[found]).tolist())
        if count == len(column):
            continue
        if children:
            steps += _walk_batch(children, ix_batch[~found], hits)
        else:
            steps += depth * size * (len(column) - count)
    return steps


def collision_rate(patterns, pairs, hashes, config):
    """Per pair, the fraction of hashes where both patterns return the same index taken from the same substring."""
    rows = np.asarray(patterns.rows if isinstance(patterns, PermutationPatternMatrix) else patterns)
    involved = sorted({i for pair in pairs for i in pair})
    column = {i: c for c, i in enumerate(involved)}
    hashes = list(hashes)
    hits = np.zeros(len(pairs), dtype=np.int64)
    chunk = sketch_mapping.insert_chunk_size * 4
    for start in range(0, len(hashes), chunk):
        ix_batch, _ = index_batch(hashes[start:start + chunk], config)
        found, k, source, _ = resolve_patterns(ix_batch, rows[involved], config.substring_length)
        for n, (p, q) in enumerate(pairs):
            a, b = column[p], column[q]
            same = found[:, a] & found[:, b] & (source[:, a] == source[:, b]) & (k[:, a] == k[:, b])
            hits[n] += int(same.sum())
    return [float(h) / len(hashes) for h in hits]


def closed_form_cost_bound(L, M, N):
    return M * (2 - 0.5 ** (L // M - 1)) + N


def expected_identifier_visits(L, M):
    p = 2.0 ** -(L // M)
    return sum(k * p ** (k - 1) * (1 - p) for k in range(1, M + 1)) + M * p ** M


def expected_insert_cost(L, M, N):
    return M * (2 - 0.5 ** (L // M - 1)) + N * expected_identifier_visits(L, M)


class LfmSketch(object):
    def __init__(self, config=None, patterns=None):
        self.config = config or SketchConfig()
        if patterns is None:
            patterns = generate_patterns(self.config.M, self.config.N, self.config.pattern_seed,
                                         self.config.pattern_strategy)
        if patterns.rows.shape != (self.config.N, self.config.M):
            raise ConfigurationError('pattern matrix shape {} does not match N={}, M={}'.format(
                patterns.rows.shape, self.config.N, self.config.M))
        self.patterns = patterns
        self.bitmaps = np.zeros((self.config.N, self.config.L), dtype=bool)
        self.insert_count = 0
        self.op_counter = OpCounter()
        self._trie = None
        if self.config.N > sketch_mapping.trie_pattern_threshold:
            self._trie = self.patterns.trie(self.config.L, self.config.substring_length)
        self._pattern_lists = [row.tolist() for row in self.patterns.rows]

    kind = 'lfm'

    def insert(self, item):
        h = hash_item(item, self.config, self.op_counter)
        ix = split_and_index(h, self.config, self.op_counter)
        if self._trie is not None:
            hits, steps = self._trie.resolve(ix)
            if hits:
                self.bitmaps.reshape(-1)[np.concatenate(hits)] = True
        else:
            # permuted_leftmost_one, inlined
            bitmaps = self.bitmaps
            s = self.config.substring_length
            steps = 0
            for i, pattern in enumerate(self._pattern_lists):
                offset = 0
                for ident in pattern:
                    steps += 1
                    if ix[ident] >= 0:
                        bitmaps[i, offset + ix[ident]] = True
                        break
                    offset += s
        self.op_counter.pattern_steps += steps
        self.insert_count += 1
        return self

    def insert_many(self, items):
        items = list(items)
        chunk = sketch_mapping.insert_chunk_size
        for start in range(0, len(items), chunk):
            part = items[start:start + chunk]
            hashes = [hash_item(item, self.config, self.op_counter) for item in part]
            ix_batch, scans = index_batch(hashes, self.config)
            self.op_counter.substring_scans += scans
            self._apply(ix_batch)
            self.insert_count += len(part)
        return self

    def _apply(self, ix_batch):
        if self._trie is not None:
            hits, steps = self._trie.resolve_batch(ix_batch)
            if hits:
                self.bitmaps.reshape(-1)[np.concatenate(hits)] = True
        else:
            found, k, _, steps = resolve_patterns(ix_batch, self.patterns.rows, self.config.substring_length)
            batch, rows = np.nonzero(found)
            self.bitmaps[rows, k[batch, rows]] = True
        self.op_counter.pattern_steps += steps

    def registers(self):
        return registers_of(self.bitmaps)

    def raw_statistic(self):
        return harmonic_statistic(self.registers())

    def estimate(self):
        if self.insert_count == 0:
            return 0.0
        return harmonic_estimate(self.registers(), self.config.calibration)

    def reset(self):
        self.bitmaps[:] = False
        self.insert_count = 0
        self.op_counter.reset()
        return self

    def memory_footprint(self):
        return self.config.N * self.config.L

    def dumps(self):
        return dump_record(self.kind, self.config.to_dict(), self.insert_count, self.bitmaps)

    @classmethod
    def loads(cls, text, patterns=None):
        kind, settings, insert_count, bitmaps = load_record(text)
        if kind != cls.kind:
            raise SerializationError('record holds a {} sketch, not {}'.format(kind, cls.kind))
        sketch = cls(SketchConfig.from_dict(settings), patterns)
        if bitmaps.shape != sketch.bitmaps.shape:
            raise SerializationError('record holds {} bitmaps of {} bits, expected {}'.format(
                bitmaps.shape[0], bitmaps.shape[1], sketch.bitmaps.shape))
        sketch.bitmaps[:] = bitmaps
        sketch.insert_count = insert_count
        return sketch


def dump_record(kind, settings, insert_count, bitmaps):
    header = dict(settings)
    header.update({'format': sketch_mapping.sketch_record_format, 'version': sketch_mapping.sketch_record_version,
                   'kind': kind, 'insert_count': int(insert_count), 'bitmaps': int(bitmaps.shape[0]),
                   'bits': int(bitmaps.shape[1])})
    lines = [json.dumps(header, sort_keys=True)]
    lines.extend(np.packbits(row).tobytes().hex() for row in bitmaps)
    return '\n'.join(lines) + '\n'


def load_record(text):
    lines = text.strip().split('\n')
    try:
        header = json.loads(lines[0])
    except ValueError as e:
        raise SerializationError('unreadable sketch header: {}'.format(e))
    if header.get('format') != sketch_mapping.sketch_record_format:
        raise SerializationError('not a sketch record')
    if header.get('version') != sketch_mapping.sketch_record_version:
        raise SerializationError('unsupported sketch record version {}'.format(header.get('version')))
    count, bits = header.get('bitmaps'), header.get('bits')
    if len(lines) - 1 != count:
        raise SerializationError('header announces {} bitmaps, record holds {}'.format(count, len(lines) - 1))
    try:
        packed = [np.frombuffer(bytes.fromhex(line), dtype=np.uint8) for line in lines[1:]]
    except ValueError as e:
        raise SerializationError('corrupt bitmap line: {}'.format(e))
    if any(len(row) != (bits + 7) // 8 for row in packed):
        raise SerializationError('bitmap line length does not match {} bits'.format(bits))
    bitmaps = np.array([np.unpackbits(row)[:bits] for row in packed], dtype=bool)
    try:
        return header['kind'], header, int(header['insert_count']), bitmaps
    except (KeyError, TypeError, ValueError) as e:
        raise SerializationError('incomplete sketch header: {}'.format(e))
