from io import StringIO

from django.core.exceptions import ValidationError
from django.core.management import call_command
from django.test import TestCase

from experiments.models import EstimateRecord, ExperimentRun, ExponentFit
from experiments.sampling import TreeModel
from trees.grid import Boundary


class EstimateRecordTests(TestCase):

    def record(self, **fields):
        values = dict(model=TreeModel.UST, geometry='D(1,3) F/W', r_inner=1.0, r_outer=3.0, k=2, delta=0.125,
                      bc_inner=Boundary.FREE, bc_outer=Boundary.WIRED, n_samples=100, successes=40, p_hat=0.4,
                      ci_low=0.31, ci_high=0.5, seed=1)
        values.update(fields)
        return EstimateRecord(**values)

    def test_valid_record(self):
        rec = self.record()
        rec.full_clean()
        rec.save()
        self.assertEqual(rec.aspect, 3.0)
        self.assertAlmostEqual(rec.stderr, (0.4 * 0.6 / 100) ** 0.5)
        self.assertEqual(str(rec), 'UST crossing_probability D(1,3) F/W k=2: 0.4')

    def test_more_successes_than_samples(self):
        with self.assertRaises(ValidationError) as ctx:
            self.record(successes=101).full_clean()
        self.assertIn('successes', ctx.exception.message_dict)

    def test_estimate_outside_its_interval(self):
        with self.assertRaises(ValidationError) as ctx:
            self.record(ci_low=0.45).full_clean()
        self.assertIn('p_hat', ctx.exception.message_dict)

    def test_other_observables_may_exceed_one(self):
        rec = self.record(observable=EstimateRecord.Observable.MGF, p_hat=2.5, ci_low=2.0, ci_high=3.0)
        rec.full_clean()

    def test_records_belong_to_runs(self):
        run = ExperimentRun.objects.create(kind='crossing_prob', seed=1, code_version='0.3.0')
        rec = self.record(run=run)
        rec.save()
        self.assertEqual(list(run.estimates.all()), [rec])
        run.delete()
        self.assertFalse(EstimateRecord.objects.exists())


class ExponentFitTests(TestCase):

    def test_needs_three_aspects(self):
        fit = ExponentFit(model=TreeModel.MST, k=2, exponent_hat=0.7, stderr=0.05, intercept=-0.1,
                          aspect_ratios=[2.0, 3.0])
        with self.assertRaises(ValidationError):
            fit.full_clean()
        fit.aspect_ratios = [2.0, 3.0, 4.5]
        fit.full_clean()
        self.assertEqual(str(fit), 'MST k=2: 0.7000 +/- 0.0500')


class SchemaTests(TestCase):

    def test_observables_are_the_estimated_quantities(self):
        self.assertEqual(set(EstimateRecord.Observable.values), {
            'crossing_probability', 'mgf', 'choking_probability', 'rectangle_traversal', 'droplet_pc',
            'vertex_count', 'dimension',
        })

    def test_migrations_match_the_models(self):
        call_command('makemigrations', 'experiments', check=True, dry_run=True, stdout=StringIO())
