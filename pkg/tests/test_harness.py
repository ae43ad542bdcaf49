import contextlib
import copy
import io
import json
import os
import re
import shutil
import tempfile
import unittest

from elda import sketch_mapping
from elda.exceptions import ConfigurationError, MissingTraceError
from elda.harness import charts, cli, experiments
from elda.harness.artifacts import read_csv
from elda.harness.scenarios import ScenarioSpec, list_scenarios, load_scenario, load_settings

SLOW = os.environ.get('ELDA_SLOW_TESTS') == '1'

SMALL_SCENARIO = {
    'name': 'small',
    'description': 'short locality-disruption run',
    'topology': 'default',
    'duration': 15,
    'warmup': 2,
    'seed': 3,
    'regular': {'kind': 'regular', 'alpha': 0.9, 'rate': 50, 'catalog_size': 1000},
    'attack': {'kind': 'LDA', 'rate': 500, 'prefix': '/yahoo.com', 'start': 12.0},
    'schedule': [{'prefix': '/yahoo.com', 'start': 12.0, 'end': 15.0}],
}


class TestScenarios(unittest.TestCase):

    def test_shipped_scenarios(self):
        names = list_scenarios()
        self.assertEqual(len(names), 15)
        for name in names:
            spec = load_scenario(name)
            self.assertEqual(spec.name, name)
            self.assertEqual(spec.duration, 60.0)
        fla = load_scenario('FLA4')
        self.assertEqual((fla.attack.kind, fla.attack.rate, fla.attack.nonexistent_start), ('FLA', 6000.0, 3.0))
        self.assertEqual(fla.regular.alpha, 0.9)
        control = load_scenario('baseline-noattack-a1.1')
        self.assertTrue(control.control)
        self.assertIsNone(control.attack)

    def test_unknown_scenario(self):
        with self.assertRaises(ConfigurationError):
            load_scenario('LDA99')

    def test_invalid_documents(self):
        missing = copy.deepcopy(SMALL_SCENARIO)
        del missing['seed']
        with self.assertRaises(ConfigurationError):
            ScenarioSpec(missing)
        shifted = copy.deepcopy(SMALL_SCENARIO)
        shifted['schedule'][0]['start'] = 5.0
        with self.assertRaises(ConfigurationError):
            ScenarioSpec(shifted)
        silent = copy.deepcopy(SMALL_SCENARIO)
        silent['attack'] = None
        with self.assertRaises(ConfigurationError):
            ScenarioSpec(silent)
        unknown = copy.deepcopy(SMALL_SCENARIO)
        unknown['attack']['kind'] = 'DDoS'
        with self.assertRaises(ConfigurationError):
            ScenarioSpec(unknown)

    def test_scaled(self):
        spec = load_scenario('LDA2').scaled(10)
        self.assertEqual(spec.regular.rate, 300.0)
        self.assertEqual(spec.attack.rate, 600.0)
        self.assertEqual(spec.regular.catalog_size, 1000)
        self.assertEqual(spec.scale, 10.0)
        self.assertEqual(spec.duration, 60.0)
        with self.assertRaises(ConfigurationError):
            spec.scaled(0)


class TestSettings(unittest.TestCase):

    def test_defaults(self):
        settings = load_settings()
        self.assertEqual(settings['sketch']['N'], 256)
        self.assertEqual(settings['threshold']['alpha'], 0.005)
        self.assertEqual(settings['sketch']['calibration'], sketch_mapping.default_calibration)
        self.assertEqual(settings['sketch']['M'], sketch_mapping.default_substrings)

    def test_overrides(self):
        settings = load_settings(overrides={'sketch': {'N': 64}})
        self.assertEqual(settings['sketch']['N'], 64)
        self.assertEqual(settings['sketch']['M'], 16)
        with self.assertRaises(ConfigurationError):
            load_settings(overrides={'sketch': {'N': 'many'}})
        with self.assertRaises(ConfigurationError):
            load_settings(overrides={'unknown': 1})


class TestRunScenario(unittest.TestCase):

    def setUp(self):
        self.out = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.out)

    def test_detects_attack(self):
        result = experiments.run_scenario(ScenarioSpec(copy.deepcopy(SMALL_SCENARIO)), load_settings())
        report = result['report']
        self.assertEqual(report['attacks'], 1)
        self.assertEqual(report['detection_rate'], 1.0)
        self.assertTrue(any(alarm['prefix'] == '/yahoo.com' and alarm['wall_time'] > 12 for alarm in result['alarms']))
        self.assertTrue(all(row[-1] == 'gateway' for row in result['detection']))
        paths = experiments.write_run_artifacts(result, self.out)
        for path in paths:
            self.assertTrue(os.path.exists(path))
        with open(os.path.join(self.out, 'metrics_small.csv')) as f:
            self.assertEqual(f.readline().strip(), '# schema: metrics v2')
        rows = read_csv(os.path.join(self.out, 'detection_small.csv'))
        self.assertEqual(list(rows[0]), ['epoch', 'prefix', 'statistic', 'threshold', 'alarm_flag', 'router'])

    def test_deterministic(self):
        first = experiments.run_scenario(ScenarioSpec(copy.deepcopy(SMALL_SCENARIO)), load_settings())
        second = experiments.run_scenario(ScenarioSpec(copy.deepcopy(SMALL_SCENARIO)), load_settings())
        self.assertEqual(first['metrics'], second['metrics'])
        self.assertEqual(first['detection'], second['detection'])
        self.assertEqual(first['alarms'], second['alarms'])

    def test_placement_override(self):
        settings = load_settings(overrides={'detector': {'placement': ['edge1', 'gateway']}})
        spec = ScenarioSpec(copy.deepcopy(SMALL_SCENARIO))
        self.assertEqual(experiments.placement_for(spec, settings), ['edge1', 'gateway'])
        self.assertEqual(experiments.placement_for(spec, load_settings()), ['gateway'])

    def test_charts(self):
        result = experiments.run_scenario(ScenarioSpec(copy.deepcopy(SMALL_SCENARIO)), load_settings())
        experiments.write_run_artifacts(result, self.out)
        first = charts.cmd_chart(self.out, self.out)
        self.assertIn(os.path.join(self.out, 'hit_rate_small.svg'), first)
        with open(first[0], 'rb') as f:
            rendered = f.read()
        charts.cmd_chart(self.out, self.out)
        with open(first[0], 'rb') as f:
            self.assertEqual(f.read(), rendered)

    def test_chart_without_traces(self):
        with self.assertRaises(MissingTraceError):
            charts.cmd_chart(self.out, self.out)


@unittest.skipUnless(SLOW, 'set ELDA_SLOW_TESTS=1')
class TestScaledSweep(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.out = tempfile.mkdtemp()
        cls.reports = {r['scenario']: r for r in experiments.cmd_sweep(load_settings(), cls.out, scale=10)}

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.out)

    def gateway_mean(self, scenario, field, first=3, last=59):
        rows = read_csv(os.path.join(self.out, 'metrics_{}.csv'.format(scenario)))
        values = [float(r[field]) for r in rows
                  if r['node'] == 'gateway' and first <= int(r['time_s']) <= last and r[field] != '']
        return sum(values) / len(values)

    def test_detection(self):
        self.assertEqual(len(self.reports), 15)
        control_epochs = 0
        for name, report in self.reports.items():
            if report['control']:
                self.assertEqual(report['detection_rate'], 'N/A', name)
                control_epochs += report['monitored_epochs']
            else:
                self.assertEqual(report['detection_rate'], 1.0, name)
            self.assertEqual(report['false_positive_rate'], 0.0, name)
        self.assertGreaterEqual(control_epochs, 180)
        self.assertTrue(os.path.exists(os.path.join(self.out, 'sweep_summary.csv')))

    def test_damage_shapes(self):
        lda = ['LDA{}'.format(i) for i in range(1, 7)]
        regular_hits = {name: self.gateway_mean(name, 'regular_hit_rate') for name in lda}
        self.assertEqual(max(regular_hits, key=regular_hits.get), 'LDA5', regular_hits)
        for name in ('LDA2', 'LDA4', 'LDA6'):
            self.assertLess(self.gateway_mean(name, 'cache_hit_rate'), 0.05, name)
        for i in range(1, 7):
            fla, matching = 'FLA{}'.format(i), 'LDA{}'.format(i)
            self.assertGreater(self.gateway_mean(fla, 'avg_rtt_ms'), self.gateway_mean(matching, 'avg_rtt_ms'),
                               fla)
            rows = read_csv(os.path.join(self.out, 'metrics_{}.csv'.format(fla)))
            available = [float(r['pit_available_rate']) for r in rows
                         if r['node'] == 'gateway' and int(r['time_s']) > 3]
            self.assertEqual(min(available), 0.0, fla)


class TestDependencies(unittest.TestCase):

    def test_requirements_are_imported(self):
        root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
        with open(os.path.join(root, 'requirements.txt')) as f:
            packages = [re.split(r'[\s<>=]', line.strip(), 1)[0] for line in f if line.strip()]
        sources = []
        for directory, _, files in os.walk(os.path.join(root, 'elda')):
            for name in files:
                if name.endswith('.py'):
                    with open(os.path.join(directory, name)) as f:
                        sources.append(f.read())
        source = '\n'.join(sources)
        for package in packages:
            if package == 'nose':
                continue
            pattern = r'^\s*(import|from)\s+{}\b'.format(re.escape(package))
            self.assertIsNotNone(re.search(pattern, source, re.MULTILINE), package)


class TestMeasurements(unittest.TestCase):

    def test_accuracy_table(self):
        rows = experiments.accuracy_table([{'N': 64, 'sketches': ['lfm', 'hll']}], (0, 1000), trials=3)
        self.assertEqual(len(rows), 4)
        empty = [r for r in rows if r['cardinality'] == 0]
        self.assertTrue(all(r['mean_estimate'] == 0.0 and r['mean_ratio'] is None for r in empty))
        filled = [r for r in rows if r['cardinality'] == 1000]
        self.assertTrue(all(0.5 < r['mean_ratio'] < 1.5 for r in filled))

    def test_complexity(self):
        report = experiments.complexity_report(inserts=10 ** 4, hll_inserts=10 ** 3)
        self.assertTrue(report['hash_economy'])
        self.assertTrue(report['lfm']['within_expected'])
        self.assertTrue(report['hll']['within_5_percent'])
        self.assertEqual(report['lfm']['hash_ops_per_insert'], 1.0)

    def test_bench(self):
        report = experiments.bench_report(interests=2000, N=64)
        self.assertEqual(set(report['modes']), {'elda', 'strawman', 'freq'})
        self.assertEqual(report['hash_ops_per_interest'], {'elda': 1.0, 'strawman': 64.0})
        self.assertEqual(report['hash_ops_per_interest_doubled_N'], {'elda': 1.0, 'strawman': 128.0})

    def test_resources(self):
        report = experiments.resources_report(catalogs=(100,), prefixes=10, cpu_interests=200)
        self.assertEqual(report['projected_bits']['strawman'], 10 * 8192)
        self.assertEqual(report['projected_bits']['elda'], 10 * 8192 + 256 * 16 * 4)
        self.assertEqual(report['modes']['freq'][0]['footprint']['total_bits'], 101 * 288)

    @unittest.skipUnless(SLOW, 'set ELDA_SLOW_TESTS=1')
    def test_calibration(self):
        result = experiments.calibrate(kinds=('lfm',), trials=20)
        self.assertAlmostEqual(result['lfm']['heldout_median_ratio'], 1.0, delta=0.05)
        self.assertAlmostEqual(result['lfm']['calibration'], sketch_mapping.default_calibration, delta=0.04)


class TestCli(unittest.TestCase):

    def call(self, argv):
        out = io.StringIO()
        with contextlib.redirect_stdout(out):
            code = cli.main(argv)
        return code, out.getvalue()

    def test_list(self):
        code, output = self.call(['list', '--quiet'])
        self.assertEqual(code, 0)
        self.assertIn('LDA1', output)
        self.assertIn('baseline-noattack-a0.7', output)

    def test_error_json(self):
        out = tempfile.mkdtemp()
        try:
            code, output = self.call(['run', 'LDA99', '--out', out, '--quiet'])
        finally:
            shutil.rmtree(out)
        self.assertEqual(code, 1)
        error = json.loads(output.strip().split('\n')[-1])
        self.assertEqual(error['type'], 'ConfigurationError')
        self.assertIn('LDA99', error['error'])

    def test_parser(self):
        args = cli.build_parser().parse_args(['sweep', '--seeds', '1', '2', '--scale', '10', 'LDA1'])
        self.assertEqual((args.seeds, args.scale, args.scenarios), ([1, 2], 10.0, ['LDA1']))


if __name__ == '__main__':
    unittest.main()
