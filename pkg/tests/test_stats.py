#!/usr/bin/env python3
"""
🧪 Unit Tests for statistical acceptance helpers
"""

import unittest
import sys
from pathlib import Path

import numpy as np

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from config_manager import get_config, reset_config
from stats import (
    ChiSquareInputError, FitInputError, SampleSet, SampleSizeError, chi_square,
    continuity_jitter, interquartile_range, ks_statistic, loglog_slope, mean_ci,
    two_proportion_z,
)
from theory import LimitLaw


class TestKolmogorovSmirnov(unittest.TestCase):

    def test_quantile_sample_distance(self):
        """Midpoint quantiles sit exactly 1/(2n) from the cdf on both sides"""
        n = 100
        x = -np.log(1.0 - (np.arange(1, n + 1) - 0.5) / n)
        self.assertAlmostEqual(ks_statistic(x, LimitLaw.exponential1()), 0.5 / n, places=12)

    def test_order_does_not_matter(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal(500)
        law = LimitLaw.std_normal()
        self.assertEqual(ks_statistic(x, law), ks_statistic(x[::-1].copy(), law))
        self.assertEqual(ks_statistic(x, law), ks_statistic(SampleSet(x), law))

    def test_wrong_law_detected(self):
        rng = np.random.default_rng(6)
        x = rng.exponential(2.0, 5_000)
        self.assertGreater(ks_statistic(x, LimitLaw.exponential1()), 0.1)

    def test_too_few_samples(self):
        with self.assertRaises(SampleSizeError):
            ks_statistic([], LimitLaw.std_normal())
        with self.assertRaises(SampleSizeError):
            ks_statistic([0.1, 0.2, 0.3], LimitLaw.std_normal())

    def test_invariant_under_increasing_transform(self):
        """Mapping samples and law through the same increasing map keeps the distance"""
        rng = np.random.default_rng(12)
        x = rng.standard_normal(2_000)
        law = LimitLaw.std_normal()

        class Transformed:
            def cdf(self, y):
                return law.cdf(np.log(np.asarray(y, dtype=np.float64)))

        self.assertAlmostEqual(ks_statistic(np.exp(x), Transformed()), ks_statistic(x, law),
                               places=12)


class TestJitter(unittest.TestCase):

    def test_unit_cells(self):
        values = np.array([0, 3, 3, 10])
        jittered = continuity_jitter(values, np.random.default_rng(0))
        self.assertTrue(np.all(jittered >= values))
        self.assertTrue(np.all(jittered < values + 1))

    def test_centered(self):
        values = np.zeros(1_000)
        jittered = continuity_jitter(values, np.random.default_rng(0), centered=True)
        self.assertTrue(np.all(np.abs(jittered) <= 0.5))
        self.assertLess(jittered.min(), 0.0)


class TestChiSquare(unittest.TestCase):

    def test_perfect_fit(self):
        expected = {'a': 0.5, 'b': 0.25, 'c': 0.25}
        result = chi_square({'a': 200, 'b': 100, 'c': 100}, expected)
        self.assertEqual(result.statistic, 0.0)
        self.assertAlmostEqual(result.p_value, 1.0)
        self.assertEqual(result.dof, 2)
        self.assertTrue(result.passes())

    def test_mismatch(self):
        result = chi_square({'a': 900, 'b': 100}, {'a': 0.5, 'b': 0.5})
        self.assertLess(result.p_value, 1e-10)
        self.assertFalse(result.passes(0.001))

    def test_small_bins_merged(self):
        expected = {'a': 0.5, 'b': 0.45, 'c': 0.03, 'd': 0.02}
        result = chi_square({'a': 50, 'b': 45, 'c': 3, 'd': 2}, expected)
        self.assertEqual(result.bins, 3)
        self.assertEqual(result.dof, 2)

    def test_impossible_outcome(self):
        with self.assertRaises(ChiSquareInputError):
            chi_square({'a': 10, 'z': 1}, {'a': 0.5, 'b': 0.5})

    def test_negative_counts(self):
        with self.assertRaises(ChiSquareInputError):
            chi_square({'a': -1, 'b': 5}, {'a': 0.5, 'b': 0.5})

    def test_single_bin(self):
        with self.assertRaises(ChiSquareInputError):
            chi_square({'a': 10}, {'a': 1.0})


class TestChiSquareConfig(unittest.TestCase):
    """Level and bin threshold come from the stats config section"""

    def setUp(self):
        reset_config()

    def tearDown(self):
        reset_config()

    def test_level_from_config(self):
        result = chi_square({'a': 56, 'b': 44}, {'a': 0.5, 'b': 0.5})
        self.assertTrue(result.passes())
        get_config().set('stats.chi_square_level', 0.5)
        self.assertFalse(result.passes())
        self.assertTrue(result.passes(0.001))

    def test_min_expected_from_config(self):
        expected = {'a': 0.5, 'b': 0.45, 'c': 0.03, 'd': 0.02}
        observed = {'a': 50, 'b': 45, 'c': 3, 'd': 2}
        get_config().set('stats.min_expected_count', 1.0)
        self.assertEqual(chi_square(observed, expected).bins, 4)
        self.assertEqual(chi_square(observed, expected, min_expected=5.0).bins, 3)


class TestMomentsAndFits(unittest.TestCase):

    def test_mean_ci(self):
        mean, se = mean_ci([1.0, 2.0, 3.0, 4.0])
        self.assertAlmostEqual(mean, 2.5)
        self.assertAlmostEqual(se, np.std([1, 2, 3, 4], ddof=1) / 2.0)
        with self.assertRaises(SampleSizeError):
            mean_ci([1.0])

    def test_interquartile_range(self):
        self.assertAlmostEqual(interquartile_range(np.arange(101)), 50.0)

    def test_two_proportion_z(self):
        self.assertEqual(two_proportion_z(50, 100, 50, 100), 0.0)
        self.assertEqual(two_proportion_z(0, 10, 0, 10), 0.0)
        self.assertGreater(two_proportion_z(300, 1000, 200, 1000), 3.0)
        self.assertLess(two_proportion_z(200, 1000, 300, 1000), -3.0)
        with self.assertRaises(SampleSizeError):
            two_proportion_z(1, 0, 1, 10)

    def test_exact_power_law(self):
        ns = [1e3, 1e4, 1e5, 1e6]
        report = loglog_slope([(n, 3.0 * n ** 0.25) for n in ns])
        self.assertAlmostEqual(report.slope, 0.25, places=10)
        self.assertAlmostEqual(report.intercept, np.log(3.0), places=8)
        self.assertLess(report.residual, 1e-10)
        self.assertEqual(len(report.points()), 4)

    def test_fit_inputs(self):
        with self.assertRaises(FitInputError):
            loglog_slope([(10, 1.0), (100, 2.0), (1000, 3.0)])
        with self.assertRaises(FitInputError):
            loglog_slope([(10, 1.0), (100, 2.0), (100, 3.0), (1000, 4.0)])
        with self.assertRaises(FitInputError):
            loglog_slope([(10, 1.0), (100, 0.0), (1000, 3.0), (10000, 4.0)])


class TestSampleSet(unittest.TestCase):

    def test_quantiles(self):
        s = SampleSet([5, 1, 3, 2, 4], seed=7, N=100, profile="comb")
        self.assertEqual(s.size, 5)
        self.assertEqual(s.median(), 3.0)
        np.testing.assert_array_equal(s.sorted, [1, 2, 3, 4, 5])
        self.assertAlmostEqual(s.quantile(0.25), 2.0)


if __name__ == '__main__':
    unittest.main()
