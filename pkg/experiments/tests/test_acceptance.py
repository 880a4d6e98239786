"""
Long-running statistical checks. Enabled with SPANTREE_SLOW_TESTS=True;
each one drives run_experiment end to end and gates on exit code 0.
"""
import tempfile
import unittest

from django.conf import settings
from django.test import TestCase

from experiments.analysis import delta_stability_check, vertex_count_record
from experiments.runner import EXIT_OK, run_experiment
from experiments.sampling import TreeModel

WORKERS = settings.SPANTREE_WORKERS


@unittest.skipUnless(settings.SPANTREE_SLOW_TESTS, 'set SPANTREE_SLOW_TESTS=True to run the acceptance checks')
class AcceptanceTests(TestCase):

    def run_kind(self, kind, seed=2024, **config):
        with tempfile.TemporaryDirectory() as out_dir:
            outcome = run_experiment({'kind': kind, 'seed': seed, **config}, out_dir=out_dir, workers=WORKERS)
        self.assertEqual(outcome.exit_code, EXIT_OK, outcome.run.message)
        return outcome.result

    def test_deterministic_checks(self):
        for model in (TreeModel.MST, TreeModel.EST):
            with self.subTest(model=model):
                result = self.run_kind('lemma_suite', model=model, r=1.0, R=3.0, delta=0.125, n_samples=200)
                names = {rep.name for rep in result.reports}
                if model == TreeModel.EST:
                    self.assertIn('vacant_separation', names)
                self.assertIn('vacancy_cycle', names)
        self.run_kind('cover_circle')
        self.run_kind('semipath', delta=0.125, n_samples=500)

    def test_spanning_tree_uniformity(self):
        self.run_kind('ust_uniformity', n_side=2, n_samples=100_000)

    def test_critical_bond_crossing(self):
        for side in (8, 16, 32):
            with self.subTest(side=side):
                result = self.run_kind('bernoulli_crossing', n_side=side, n_samples=10_000)
                self.assertAlmostEqual(result.records[0].p_hat, 0.5, delta=0.015)

    def test_rectangle_traversal_bound(self):
        self.run_kind('rectangle_traversal', model=TreeModel.UST, delta=0.0625, width=1.0, aspect=3.0,
                      n_samples=10_000)

    def test_geometric_decay(self):
        for model, aspect in ((TreeModel.UST, 3.0), (TreeModel.MST, 9.0)):
            with self.subTest(model=model):
                self.run_kind('geometric_decay', model=model, aspect=aspect, k_max=4, r_over_delta=8,
                              n_samples=20_000)

    def test_two_arm_exponent_is_positive(self):
        result = self.run_kind('fit_gamma', model=TreeModel.UST, k=2, r_over_delta=16, n_samples=20_000)
        fit = result.fits[0]
        self.assertGreater(fit.exponent_hat - 3 * fit.stderr, 0)
        self.assertEqual(len(fit.aspect_ratios), 4)

    def test_telescopic_split(self):
        for model in (TreeModel.UST, TreeModel.MST):
            with self.subTest(model=model):
                self.run_kind('telescopic', model=model, radii=(1.0, 2.0, 4.0, 8.0), k=2, delta=0.125,
                              n_samples=5_000)

    def test_resolution_stability(self):
        for model in (TreeModel.UST, TreeModel.MST, TreeModel.EST):
            with self.subTest(model=model):
                self.run_kind('delta_stability', model=model, k=2, aspect=3.0, deltas=(0.125, 0.0625, 0.03125),
                              n_samples=5_000)

    def test_choking_is_positive_at_two_resolutions(self):
        records = [
            self.run_kind('choking', r=1.0, r_over_delta=ratio, n_samples=10_000).records[0]
            for ratio in (8, 16)
        ]
        self.assertLessEqual(records[0].ci_low, records[1].ci_high)
        self.assertLessEqual(records[1].ci_low, records[0].ci_high)

    def test_branch_dimension_window(self):
        result = self.run_kind('branch_dimension', n_side=512, n_samples=4)
        self.assertTrue(1.05 < result.records[0].p_hat < 1.95)

    def test_droplet_threshold_is_finite(self):
        result = self.run_kind('droplet_pc', width=1.0, aspect=1.0, delta=0.05, n_samples=200)
        record = result.records[0]
        self.assertGreater(record.p_hat, 0)
        self.assertLessEqual(record.ci_low, record.p_hat)
        self.assertLessEqual(record.p_hat, record.ci_high)

    def test_vertex_count_is_resolution_sensitive(self):
        _records, report = delta_stability_check(vertex_count_record, [0.125, 0.0625, 0.03125])
        self.assertFalse(report.passed)
