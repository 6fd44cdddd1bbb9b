#!/usr/bin/env python3
"""
🧪 Unit Tests for outcome export and the JSONL archive
"""

import os
import shutil
import tempfile
import unittest
import sys
from pathlib import Path

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from config_manager import reset_config
from experiments import ExperimentOutcome
from outcome_store import CSV_COLUMNS, ExportError, OutcomeStore


def make_outcome(name: str = 'comb-scaling', passed: bool = True, seed: int = 7) -> ExperimentOutcome:
    return ExperimentOutcome(
        experiment=name,
        spec={'name': name, 'schedule': [1000, 3162, 10000, 31623], 'seed': seed},
        N=31623,
        replicas=200,
        statistic=0.2514,
        target=0.25,
        tolerance=0.03,
        passed=passed,
        seed=seed,
        details={'ks_c1': 0.02, 'medians': [1.1, 1.5, 2.0, 2.6]},
        series={'median_abs_c1': [[6.9078, 0.0953], [8.0590, 0.4055],
                                  [9.2103, 0.6931], [10.3616, 0.9555]]},
        wall_time=1.25,
    )


class TestExport(unittest.TestCase):

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        self.store = OutcomeStore(self.temp_dir)

    def tearDown(self):
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_json_round_trip(self):
        outcome = make_outcome()
        path = self.store.write_json(outcome)
        self.assertEqual(path.name, 'comb-scaling_seed7.json')
        self.assertEqual(OutcomeStore.read_json(path), outcome)

    def test_csv_header(self):
        path = self.store.write_csv([make_outcome()])
        lines = path.read_text().splitlines()
        self.assertEqual(lines[0], 'experiment,N,replicas,statistic,target,tolerance,pass,seed')
        self.assertEqual(lines[0].split(','), CSV_COLUMNS)
        self.assertEqual(len(lines), 2)
        self.assertTrue(lines[1].startswith('comb-scaling,31623,200,'))

    def test_csv_many_rows(self):
        path = self.store.write_csv([make_outcome('a'), make_outcome('b', passed=False)])
        self.assertEqual(len(path.read_text().splitlines()), 3)

    def test_plot_data(self):
        paths = self.store.write_plot_data(make_outcome())
        self.assertEqual(len(paths), 1)
        rows = paths[0].read_text().splitlines()
        self.assertEqual(len(rows), 4)
        self.assertEqual(len(rows[0].split()), 2)
        self.assertAlmostEqual(float(rows[0].split()[0]), 6.9078)

    def test_export_formats(self):
        written = self.store.export(make_outcome(), fmt='csv', plot_data=True)
        self.assertEqual([p.suffix for p in written], ['.csv', '.dat'])
        written = self.store.export(make_outcome(), fmt='json', plot_data=False)
        self.assertEqual([p.suffix for p in written], ['.json'])

    def test_unknown_format(self):
        with self.assertRaises(ExportError):
            self.store.export(make_outcome(), fmt='xml')

    def test_unwritable_path(self):
        blocker = Path(self.temp_dir) / 'not_a_dir'
        blocker.write_text('x')
        with self.assertRaises(ExportError):
            OutcomeStore(str(blocker / 'sub'))


class TestArchive(unittest.TestCase):

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        self.store = OutcomeStore(self.temp_dir)

    def tearDown(self):
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_empty_summary(self):
        self.assertEqual(self.store.summary()['total'], 0)
        self.assertEqual(self.store.get_outcomes('1999-01-01'), [])

    def test_archive_and_summary(self):
        self.store.archive(make_outcome('comb-scaling'))
        self.store.archive(make_outcome('darling-kac', passed=False))
        self.store.archive(make_outcome('range-lln'))

        records = self.store.get_outcomes()
        self.assertEqual(len(records), 3)
        self.assertIn('timestamp', records[0])

        summary = self.store.summary()
        self.assertEqual(summary['total'], 3)
        self.assertEqual(summary['passed'], 2)
        self.assertEqual(summary['failed'], 1)
        self.assertEqual(summary['failed_experiments'], ['darling-kac'])


class TestOutputDirFromEnvironment(unittest.TestCase):

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        os.environ['AW_OUTPUT_DIR'] = self.temp_dir
        reset_config()

    def tearDown(self):
        del os.environ['AW_OUTPUT_DIR']
        reset_config()
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_default_dir(self):
        self.assertEqual(OutcomeStore().output_dir, Path(self.temp_dir))


if __name__ == '__main__':
    unittest.main()
