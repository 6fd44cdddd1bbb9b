#!/usr/bin/env python3
"""
🧪 Unit Tests for the walk engine
"""

import unittest
import sys
from pathlib import Path

import numpy as np

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from engine import (
    ORIGIN, InvalidProbabilityError, MemoryBudgetError, ObserverConfig, Site,
    SiteNotRecordedError, WalkState, WalkSummary, default_block_size, local_time, pack_sites,
    replica_rng, replica_stream, run_construction, run_direct, run_ensemble, sample_geometric,
    sample_geometric_batch, site_range, step_direct, unpack_sites,
)
from oracle import exact_site_distribution
from profiles import ProfileSpec, bundled_profiles
from stats import chi_square

RUNNERS = (run_direct, run_construction)


class TestSitePacking(unittest.TestCase):

    def test_negative_coordinates_survive(self):
        k = np.array([0, -3, 7, -2_000_000])
        j = np.array([0, 5, -1, -2_000_000])
        uk, uj = unpack_sites(pack_sites(k, j))
        np.testing.assert_array_equal(uk, k)
        np.testing.assert_array_equal(uj, j)


class TestSingleWalks(unittest.TestCase):
    """run_direct / run_construction"""

    def test_step_bookkeeping(self):
        for run in RUNNERS:
            for prof in bundled_profiles().values():
                summary = run(prof, 501, replica_rng(11, 0))
                self.assertEqual(summary.n, 501)
                self.assertEqual(summary.h + summary.v, 501)
                self.assertEqual((summary.final.k + summary.final.j - 501) % 2, 0)
                self.assertLessEqual(summary.xi2_zero, summary.v)

    def test_same_seed_same_walk(self):
        comb = ProfileSpec.comb()
        for run in RUNNERS:
            a = run(comb, 2_000, replica_rng(5, 3), ObserverConfig.full())
            b = run(comb, 2_000, replica_rng(5, 3), ObserverConfig.full())
            self.assertEqual(a, b)

    def test_summary_defaults(self):
        summary = WalkSummary(final=ORIGIN, n=0, h=0, v=0, returns_to_origin=0, xi2_zero=0)
        self.assertIsNone(summary.local_times)
        self.assertEqual(summary.tracked, {})
        self.assertIsNot(summary.tracked,
                         WalkSummary(ORIGIN, 0, 0, 0, 0, 0).tracked)

    def test_zero_steps(self):
        for run in RUNNERS:
            summary = run(ProfileSpec.comb(), 0, replica_rng(1, 0), ObserverConfig.full())
            self.assertEqual(summary.final, ORIGIN)
            self.assertEqual(summary.returns_to_origin, 0)
            self.assertEqual(site_range(summary), 0)

    def test_half_probability_never_moves_horizontally(self):
        prof = ProfileSpec.constant("1/2")
        for run in RUNNERS:
            summary = run(prof, 300, replica_rng(2, 0))
            self.assertEqual(summary.h, 0)
            self.assertEqual(summary.final.k, 0)

    def test_full_field(self):
        comb = ProfileSpec.comb()
        for run in RUNNERS:
            summary = run(comb, 5_000, replica_rng(8, 0), ObserverConfig.full([(0, 1)]))
            self.assertEqual(summary.local_times.total, 5_000)
            self.assertEqual(local_time(summary, ORIGIN), summary.returns_to_origin)
            self.assertEqual(local_time(summary, (0, 1)), summary.tracked[Site(0, 1)])
            self.assertLessEqual(site_range(summary), 5_000)
            self.assertGreaterEqual(site_range(summary), 1)

    def test_window_field(self):
        summary = run_direct(ProfileSpec.constant("1/4"), 1_000, replica_rng(4, 0),
                             ObserverConfig.windowed(3))
        self.assertEqual(local_time(summary, ORIGIN), summary.returns_to_origin)
        self.assertLessEqual(summary.local_times.total, 1_000)
        with self.assertRaises(SiteNotRecordedError):
            local_time(summary.local_times, (10, 0))
        with self.assertRaises(SiteNotRecordedError):
            site_range(summary)

    def test_counters_only_know_the_origin(self):
        summary = run_direct(ProfileSpec.comb(), 100, replica_rng(4, 0))
        self.assertEqual(local_time(summary, ORIGIN), summary.returns_to_origin)
        with self.assertRaises(SiteNotRecordedError):
            local_time(summary, (1, 0))

    def test_memory_budget(self):
        with self.assertRaises(MemoryBudgetError):
            run_direct(ProfileSpec.comb(), 1_000_000, replica_rng(0, 0), ObserverConfig.full(),
                       memory_budget_mb=1)

    def test_negative_n(self):
        with self.assertRaises(ValueError):
            run_direct(ProfileSpec.comb(), -1, replica_rng(0, 0))


class TestStepDirect(unittest.TestCase):

    def test_tooth_rows_only_move_vertically(self):
        comb = ProfileSpec.comb()
        rng = replica_rng(9, 0)
        state = WalkState(Site(2, 3))
        for _ in range(50):
            nxt = step_direct(state, comb, rng)
            self.assertEqual(nxt.pos.k, 2)
            self.assertEqual(abs(nxt.pos.j - state.pos.j), 1)
            self.assertEqual(nxt.n, state.n + 1)
            self.assertEqual(nxt.h, 0)
            state = WalkState(Site(2, 3), nxt.n, nxt.h, nxt.v)


class TestGeometricBursts(unittest.TestCase):

    def test_half_gives_zero(self):
        self.assertEqual(sample_geometric(0.5, replica_rng(0, 0)), 0)
        self.assertFalse(sample_geometric_batch(0.5, 10, replica_rng(0, 0)).any())

    def test_invalid_probability(self):
        for bad in (0.0, 0.6, -0.1):
            with self.assertRaises(InvalidProbabilityError):
                sample_geometric(bad, replica_rng(0, 0))

    def test_batch_mean(self):
        """Mean burst length is f = (1 - 2p) / (2p)"""
        draws = sample_geometric_batch(0.25, 200_000, replica_rng(3, 0))
        self.assertGreaterEqual(draws.min(), 0)
        self.assertAlmostEqual(draws.mean(), 1.0, delta=0.03)
        draws = sample_geometric_batch(0.1, 200_000, replica_rng(3, 1))
        self.assertAlmostEqual(draws.mean(), 4.0, delta=0.1)


class TestStreams(unittest.TestCase):

    def test_replica_rng_is_block_size_one(self):
        a = replica_stream(42, 7, 1).random(4)
        b = replica_rng(42, 7).random(4)
        np.testing.assert_array_equal(a, b)

    def test_streams_differ(self):
        self.assertNotEqual(replica_rng(42, 0).random(), replica_rng(42, 1).random())
        self.assertNotEqual(replica_stream(42, 0, 1).random(), replica_stream(42, 0, 4096).random())

    def test_default_block_size(self):
        self.assertEqual(default_block_size(10, ObserverConfig.counters()), 4096)
        self.assertEqual(default_block_size(100_000, ObserverConfig.counters()), 1)
        self.assertEqual(default_block_size(10, ObserverConfig.full()), 1)


class TestEnsembles(unittest.TestCase):
    """run_ensemble orchestration"""

    def test_independent_of_jobs(self):
        prof = ProfileSpec.periodic(["1/4", "1/2"])
        for engine in ('direct', 'construction'):
            one = run_ensemble(prof, 300, 400, seed=17, engine=engine, jobs=1)
            many = run_ensemble(prof, 300, 400, seed=17, engine=engine, jobs=4)
            for name in ('final_k', 'final_j', 'h', 'v', 'returns', 'xi2'):
                np.testing.assert_array_equal(getattr(one, name), getattr(many, name))

    def test_long_walks_match_single_runs(self):
        comb = ProfileSpec.comb()
        ens = run_ensemble(comb, 2_000, 3, seed=21, jobs=2)
        self.assertEqual(ens.block_size, 1)
        for r in range(3):
            summary = run_direct(comb, 2_000, replica_rng(21, r))
            self.assertEqual((ens.final_k[r], ens.final_j[r]), tuple(summary.final))
            self.assertEqual(ens.returns[r], summary.returns_to_origin)

    def test_seed_changes_result(self):
        comb = ProfileSpec.comb()
        a = run_ensemble(comb, 200, 500, seed=1)
        b = run_ensemble(comb, 200, 500, seed=2)
        self.assertFalse(np.array_equal(a.final_j, b.final_j))

    def test_ranges_at_two_steps(self):
        ens = run_ensemble(ProfileSpec.comb(), 2, 50, seed=3, observer=ObserverConfig.full())
        self.assertTrue(np.all(ens.ranges == 2))

    def test_tracked_sites(self):
        comb = ProfileSpec.comb()
        ens = run_ensemble(comb, 400, 200, seed=5, observer=ObserverConfig.tracked((0, 1), (1, 0)))
        self.assertEqual(ens.tracked.shape, (200, 2))
        self.assertTrue(np.all(ens.tracked_column((0, 1)) >= 0))
        self.assertGreater(ens.tracked_column((0, 1)).sum(), 0)

    def test_counters(self):
        ens = run_ensemble(ProfileSpec.hphc(), 64, 1000, seed=9)
        self.assertEqual(sum(ens.site_counts().values()), 1000)
        self.assertEqual(sum(ens.origin_local_time_counts().values()), 1000)
        np.testing.assert_array_equal(ens.h + ens.v, np.full(1000, 64))

    def test_bad_arguments(self):
        comb = ProfileSpec.comb()
        with self.assertRaises(ValueError):
            run_ensemble(comb, 10, 10, seed=0, engine='teleport')
        with self.assertRaises(ValueError):
            run_ensemble(comb, 10, 0, seed=0)
        with self.assertRaises(ValueError):
            run_ensemble(comb, 10, 10, seed=0, observer=ObserverConfig.windowed(2))
        with self.assertRaises(ValueError):
            run_ensemble(comb, 10, 10, seed=0, observer=ObserverConfig.full(), block_size=4)

    def test_engines_match_exact_law(self):
        """Both engines against the exact site law at N = 4"""
        for name in ('comb', 'periodic-1/4-1/2', 'power-tail-2-2'):
            prof = bundled_profiles()[name]
            exact = exact_site_distribution(prof, 4).masses
            for engine in ('direct', 'construction'):
                ens = run_ensemble(prof, 4, 40_000, seed=123, engine=engine)
                result = chi_square(ens.site_counts(), exact)
                self.assertGreater(result.p_value, 1e-5, msg=f"{name} {engine}")


if __name__ == '__main__':
    unittest.main()
