import os
import unittest

import numpy as np

from elda.baselines import (ExactCounter, FrequencyBaselineState, HyperloglogFmSketch, exact_count, exact_insert,
                            freq_baseline_check, freq_baseline_observe, hll_estimate, hll_insert)
from elda.exceptions import ConfigurationError, SerializationError
from elda.lfm_sketch import LfmSketch, SketchConfig

SLOW = os.environ.get('ELDA_SLOW_TESTS') == '1'


class TestHyperloglogFm(unittest.TestCase):

    def test_distinct_seeds(self):
        sketch = HyperloglogFmSketch(N=16, seed_base=5)
        self.assertEqual(sketch.seeds, list(range(5, 21)))
        with self.assertRaises(ConfigurationError):
            HyperloglogFmSketch(N=0)

    def test_insert_many_matches_insert(self):
        items = ['hll-{}'.format(i) for i in range(500)]
        one = HyperloglogFmSketch(N=32)
        for item in items:
            hll_insert(one, item)
        many = HyperloglogFmSketch(N=32).insert_many(items)
        self.assertTrue(np.array_equal(one.bitmaps, many.bitmaps))
        self.assertEqual(one.op_counter.as_dict(), many.op_counter.as_dict())
        self.assertEqual(many.op_counter.hash_ops, 32 * 500)

    def test_empty_and_reset(self):
        sketch = HyperloglogFmSketch(N=8)
        self.assertEqual(hll_estimate(sketch), 0.0)
        sketch.insert_many(['a', 'b'])
        self.assertGreater(sketch.estimate(), 0)
        sketch.reset()
        self.assertEqual(sketch.estimate(), 0.0)
        self.assertFalse(sketch.bitmaps.any())

    def test_footprint_matches_lfm(self):
        self.assertEqual(HyperloglogFmSketch().memory_footprint(), LfmSketch().memory_footprint())

    def test_record(self):
        sketch = HyperloglogFmSketch(N=8, seed_base=3).insert_many(['x', 'y'])
        loaded = HyperloglogFmSketch.loads(sketch.dumps())
        self.assertTrue(np.array_equal(loaded.bitmaps, sketch.bitmaps))
        self.assertEqual(loaded.seeds, sketch.seeds)
        with self.assertRaises(SerializationError):
            HyperloglogFmSketch.loads(LfmSketch().dumps())

    def test_accuracy(self):
        sketch = HyperloglogFmSketch().insert_many('card-{}'.format(i) for i in range(10 ** 4))
        self.assertAlmostEqual(sketch.estimate() / 10 ** 4, 1.0, delta=4 * 0.78 / 16)

    @unittest.skipUnless(SLOW, 'set ELDA_SLOW_TESTS=1')
    def test_agrees_with_lfm(self):
        # One standard error per estimate is about 0.78 / sqrt(N).
        standard_error = 0.78 / 16
        for cardinality in (10 ** 3, 10 ** 4, 10 ** 5):
            lfm, hll = [], []
            for trial in range(30):
                items = ['agree{}-{}'.format(trial, i) for i in range(cardinality)]
                lfm.append(LfmSketch(SketchConfig(hash_seed=trial, pattern_seed=trial)).insert_many(items).estimate())
                hll.append(HyperloglogFmSketch(seed_base=1000 * trial).insert_many(items).estimate())
            difference = abs(np.mean(lfm) - np.mean(hll)) / cardinality
            self.assertLessEqual(difference, 2 * np.sqrt(2) * standard_error)


class TestExactCounter(unittest.TestCase):

    def test_count(self):
        counter = ExactCounter()
        for item in ['a', 'b', 'a', b'b', 'c']:
            exact_insert(counter, item)
        self.assertEqual(exact_count(counter), 3)
        counter.insert_many(str(i) for i in range(100))
        self.assertEqual(counter.count, 103)
        self.assertEqual(counter.reset().count, 0)


class TestFrequencyBaseline(unittest.TestCase):

    def feed(self, state, epoch, name, times):
        for _ in range(times):
            freq_baseline_observe(state, name, epoch)

    def test_steady_then_spike(self):
        state = FrequencyBaselineState()
        for epoch, times in enumerate([10, 11, 9, 10, 10]):
            self.feed(state, epoch, '/a/1', times)
            self.assertIsNone(freq_baseline_check(state))
        self.feed(state, 5, '/a/1', 40)
        alarms = freq_baseline_check(state)
        self.assertEqual([alarm.content for alarm in alarms], ['/a/1'])
        self.assertEqual(alarms[0].count, 40)

    def test_statistics_change_only_on_roll(self):
        state = FrequencyBaselineState()
        self.feed(state, 0, '/a/1', 3)
        self.feed(state, 1, '/a/1', 5)
        record = state.records['/a/1']
        before = (record.mean, record.variance, record.epochs)
        self.feed(state, 1, '/a/1', 50)
        self.assertEqual((record.mean, record.variance, record.epochs), before)
        state.roll(2)
        self.assertEqual(record.epochs, 2)
        self.assertAlmostEqual(record.mean, 29.0)

    def test_roll_skips_deviating_series(self):
        state = FrequencyBaselineState()
        for epoch, times in enumerate([10, 11, 9]):
            self.feed(state, epoch, '/a/1', times)
            self.feed(state, epoch, '/a/2', times)
        self.feed(state, 3, '/a/1', 40)
        self.feed(state, 3, '/a/2', 40)
        first, second = state.records['/a/1'], state.records['/a/2']
        before = (first.epochs, first.mean, first.variance)
        state.roll(5, skip=['/a/1'])
        self.assertEqual(state.epoch, 5)
        # only the epoch being closed is dropped, the following empty one counts
        self.assertEqual(first.epochs, before[0] + 1)
        self.assertAlmostEqual(first.mean, 30 / 4.0)
        self.assertEqual(first.current, 0)
        self.assertEqual(second.epochs, 5)
        self.assertAlmostEqual(second.mean, 70 / 5.0)

    def test_flood_of_new_names(self):
        state = FrequencyBaselineState()
        for epoch in range(4):
            for i in range(20):
                freq_baseline_observe(state, '/b/{}-{}'.format(epoch, i), epoch)
            self.assertIsNone(freq_baseline_check(state))
        for i in range(200):
            freq_baseline_observe(state, '/b/flood-{}'.format(i), 4)
        alarms = freq_baseline_check(state)
        self.assertEqual([alarm.content for alarm in alarms], ['/b'])

    def test_eviction(self):
        state = FrequencyBaselineState(capacity=3)
        for name in ['/a/1', '/a/2', '/a/3', '/a/4']:
            state.observe(name, 0)
        self.assertEqual(state.evictions, 1)
        self.assertNotIn('/a/1', state.records)
        self.assertEqual(state.memory_footprint(), 4 * 288)

    def test_dump(self):
        state = FrequencyBaselineState().observe('/a/1', 0)
        lines = state.dumps().strip().split('\n')
        self.assertEqual(lines[0], 'content_digest,current,epochs,mean,variance')
        self.assertEqual(len(lines), 2)
        self.assertNotIn('/a/1', lines[1])

    def test_invalid(self):
        with self.assertRaises(ConfigurationError):
            FrequencyBaselineState(capacity=0)


if __name__ == '__main__':
    unittest.main()
