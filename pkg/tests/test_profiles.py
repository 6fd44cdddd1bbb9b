#!/usr/bin/env python3
"""
🧪 Unit Tests for step-probability profiles
"""

import unittest
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from profiles import (
    HALF, QUARTER, InvalidProfileError, NotSummableError, ProfileSpec, StandingAssumptionError,
    block_sum_identity_residual, bundled_profiles, drift_partial_sums, f_bar, gamma_periodic,
    inverse_p_block_sum, inverse_p_block_sums, profile_from_config, sqrt_growth_table,
    to_probability,
)


class TestProbabilityParsing(unittest.TestCase):
    """Probabilities written in config or on the command line"""

    def test_fraction_string(self):
        self.assertEqual(to_probability("1/4"), Fraction(1, 4))

    def test_decimal_is_read_exactly(self):
        self.assertEqual(to_probability(0.25), Fraction(1, 4))
        self.assertEqual(to_probability(0.1), Fraction(1, 10))

    def test_garbage_rejected(self):
        with self.assertRaises(InvalidProfileError):
            to_probability([0.25])


class TestProfileKinds(unittest.TestCase):
    """p_j for every kind"""

    def test_constant(self):
        prof = ProfileSpec.constant("1/4")
        self.assertEqual(prof.p(0), QUARTER)
        self.assertEqual(prof.p(-17), QUARTER)
        self.assertTrue(prof.is_exact)

    def test_out_of_range_probability_rejected(self):
        for bad in ("0", "3/5", "-1/4"):
            with self.assertRaises(InvalidProfileError):
                ProfileSpec.constant(bad)

    def test_periodic_wraps_negative_rows(self):
        prof = ProfileSpec.periodic(["1/4", "1/2"])
        self.assertEqual(prof.p(0), QUARTER)
        self.assertEqual(prof.p(-1), HALF)
        self.assertEqual(prof.p(-2), QUARTER)
        self.assertEqual(prof.p(3), HALF)

    def test_empty_periodic_rejected(self):
        with self.assertRaises(InvalidProfileError):
            ProfileSpec.periodic([])

    def test_comb_and_hphc(self):
        comb, hphc = ProfileSpec.comb(), ProfileSpec.hphc()
        self.assertEqual(comb.p(0), QUARTER)
        self.assertEqual(comb.p(1), HALF)
        self.assertEqual(comb.p(-5), HALF)
        self.assertEqual(hphc.p(7), QUARTER)
        self.assertEqual(hphc.p(-1), HALF)

    def test_power_tail_block_sums_telescope(self):
        prof = ProfileSpec.power_tail(2.0, 2.0, 0.25)
        self.assertFalse(prof.is_exact)
        self.assertAlmostEqual(prof.p(1), 0.25)
        self.assertAlmostEqual(prof.p(2), 0.125)
        # sum_{j=-k}^{k} 1/p_j = 1/p0 + 4k + 4(gamma-1) k^alpha
        for k in (1, 5, 20):
            self.assertAlmostEqual(inverse_p_block_sum(prof, k), 4.0 + 4 * k + 4.0 * k ** 2)

    def test_power_tail_parameters_checked(self):
        with self.assertRaises(InvalidProfileError):
            ProfileSpec.power_tail(1.0, 2.0)
        with self.assertRaises(InvalidProfileError):
            ProfileSpec.power_tail(2.0, -1.0)

    def test_table_default(self):
        prof = ProfileSpec.table({0: "1/4", 2: 0.125}, "1/2")
        self.assertEqual(prof.p(0), QUARTER)
        self.assertEqual(prof.p(2), Fraction(1, 8))
        self.assertEqual(prof.p(1), HALF)
        self.assertEqual(prof.p(-40), HALF)

    def test_p_array_matches_p(self):
        js = np.arange(-6, 7)
        for name, prof in bundled_profiles().items():
            expected = np.array([float(prof.p(int(j))) for j in js])
            np.testing.assert_allclose(prof.p_array(js), expected, rtol=1e-15, err_msg=name)
        table = ProfileSpec.table({-1: "1/3", 0: "1/4", 3: "1/8"}, "1/2")
        expected = np.array([float(table.p(int(j))) for j in js])
        np.testing.assert_allclose(table.p_array(js), expected)

    def test_compile_is_cached(self):
        prof = ProfileSpec.periodic(["1/4", "1/2"])
        self.assertIs(prof.compile(), prof.compile())


class TestStandingAssumption(unittest.TestCase):

    def test_all_half_rejected(self):
        with self.assertRaises(StandingAssumptionError):
            ProfileSpec.constant("1/2").validate()
        with self.assertRaises(StandingAssumptionError):
            ProfileSpec.periodic(["1/2", "1/2"]).validate()

    def test_one_row_below_half_accepted(self):
        prof = ProfileSpec.table({3: "1/3"}, "1/2")
        self.assertIs(prof.validate(), prof)


class TestBlockSums(unittest.TestCase):
    """Reciprocal block sums and the drift decomposition"""

    def test_comb_block_sum(self):
        comb = ProfileSpec.comb()
        self.assertEqual(inverse_p_block_sum(comb, 0), 4)
        self.assertEqual(inverse_p_block_sum(comb, 3), 16)
        np.testing.assert_allclose(inverse_p_block_sums(comb, 3), [4.0, 8.0, 12.0, 16.0])

    def test_gamma_periodic(self):
        self.assertEqual(gamma_periodic(ProfileSpec.periodic(["1/4", "1/2"])), Fraction(3, 2))
        self.assertEqual(gamma_periodic(ProfileSpec.periodic(["1/4"])), 2)

    def test_gamma_periodic_needs_periodic(self):
        with self.assertRaises(InvalidProfileError):
            gamma_periodic(ProfileSpec.comb())

    def test_identity_residual_is_zero(self):
        for name, prof in bundled_profiles().items():
            if not prof.is_exact:
                continue
            for k in range(6):
                self.assertEqual(block_sum_identity_residual(prof, k), 0, msg=f"{name} k={k}")

    def test_drift_partial_sums(self):
        self.assertEqual(drift_partial_sums(ProfileSpec.comb(), 4), (0, 0))
        b, c = drift_partial_sums(ProfileSpec.hphc(), 3)
        self.assertEqual((b, c), (3, 0))

    def test_f_bar(self):
        self.assertEqual(f_bar(ProfileSpec.comb()), 1)
        with self.assertRaises(NotSummableError):
            f_bar(ProfileSpec.constant("1/4"))


class TestProfileConfig(unittest.TestCase):
    """profile section of the config file"""

    def test_periodic_from_config(self):
        prof = profile_from_config({'kind': 'periodic', 'values': ['1/4', '1/2']})
        self.assertEqual(prof, ProfileSpec.periodic([QUARTER, HALF]))

    def test_round_trip(self):
        for name, prof in bundled_profiles().items():
            self.assertEqual(profile_from_config(prof.to_config()), prof, msg=name)
        table = ProfileSpec.table({0: "1/4", 1: "1/3"}, "1/2")
        self.assertEqual(profile_from_config(table.to_config()), table)

    def test_missing_key(self):
        with self.assertRaises(InvalidProfileError):
            profile_from_config({'kind': 'constant'})

    def test_unknown_kind(self):
        with self.assertRaises(InvalidProfileError):
            profile_from_config({'kind': 'hexagonal'})

    def test_config_validates(self):
        with self.assertRaises(StandingAssumptionError):
            profile_from_config({'kind': 'constant', 'p': '1/2'})


class TestSqrtGrowthTable(unittest.TestCase):

    def test_shape(self):
        prof = sqrt_growth_table(200)
        self.assertEqual(prof.p(0), QUARTER)
        self.assertEqual(prof.p(201), HALF)
        self.assertEqual(prof.p(17), prof.p(-17))
        for j in (1, 10, 150):
            self.assertAlmostEqual(1.0 / float(prof.p(j)),
                                   3.0 * np.sqrt(j) * (1.0 + 0.3 * np.sin(j)), places=9)

    def test_bad_extent(self):
        with self.assertRaises(InvalidProfileError):
            sqrt_growth_table(0)


if __name__ == '__main__':
    unittest.main()
