import csv
import json
import subprocess
import sys
import tempfile
from io import StringIO
from pathlib import Path
from unittest.mock import patch

from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import TestCase

from experiments import runner
from experiments.models import EstimateRecord, ExperimentRun
from trees.exceptions import GeometryError
from trees.structures import CheckReport


def failing_handler(cfg, seed, workers):
    return runner.ExperimentResult(reports=[CheckReport('forced_failure', checked=1, violations=[{'x': 1}])])


def broken_handler(cfg, seed, workers):
    raise GeometryError('delta too coarse')


class SpantreeCommandTests(TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)

    def config(self, text, name='experiment.env'):
        path = self.root / name
        path.write_text(text, encoding='utf-8')
        return str(path)

    def call(self, kind, config, **options):
        out = StringIO()
        call_command('spantree', kind, config=config, stdout=out, **options)
        return out.getvalue()

    def test_cover_circle_run(self):
        config = self.config('# circle cover invariants\nkind=cover_circle\nseed=3\ncs=0.1,0.25\nsigmas=1,2\n')
        out_dir = self.root / 'cover'
        output = self.call('cover_circle', config, out=str(out_dir))
        self.assertIn('passed', output)
        checks = json.loads((out_dir / 'checks.json').read_text(encoding='utf-8'))
        self.assertEqual(checks['schema_version'], 1)
        self.assertEqual(checks['checks'][0]['name'], 'cover_circle')
        self.assertTrue(checks['checks'][0]['passed'])
        manifest = json.loads((out_dir / 'manifest.json').read_text(encoding='utf-8'))
        self.assertEqual(manifest['code_version'], '0.3.0')
        self.assertEqual(manifest['config']['cs'], [0.1, 0.25])
        run = ExperimentRun.objects.get()
        self.assertEqual(run.status, ExperimentRun.Status.PASSED)
        self.assertEqual(run.exit_code, runner.EXIT_OK)

    def test_same_seed_same_files(self):
        config = self.config('kind=bernoulli_crossing\nseed=5\nn_side=3\nn_samples=60\n')
        first, second = self.root / 'a', self.root / 'b'
        self.call('bernoulli_crossing', config, out=str(first), workers=1)
        self.call('bernoulli_crossing', config, out=str(second), workers=2)
        for name in ('results.csv', 'fits.csv', 'checks.json'):
            self.assertEqual((first / name).read_bytes(), (second / name).read_bytes(), name)
        with open(first / 'results.csv', newline='', encoding='utf-8') as fh:
            rows = list(csv.DictReader(fh))
        self.assertEqual(len(rows), 1)
        self.assertEqual(rows[0]['schema_version'], '1')
        self.assertEqual(rows[0]['n_samples'], '60')
        self.assertEqual(EstimateRecord.objects.count(), 2)

    def test_seed_flag_overrides_the_file(self):
        config = self.config('kind=bernoulli_crossing\nseed=5\nn_side=3\nn_samples=10\n')
        self.call('bernoulli_crossing', config, out=str(self.root / 'c'), seed=8)
        self.assertEqual(ExperimentRun.objects.get().seed, 8)

    def test_usage_errors(self):
        unknown = self.config('kind=mgf\nseed=1\ncolour=blue\n')
        mismatch = self.config('kind=mgf\nseed=1\n', name='mgf.env')
        cases = [
            ('mgf', unknown, {}),
            ('choking', mismatch, {}),
            ('mgf', str(self.root / 'missing.env'), {}),
            ('mgf', mismatch, {'workers': 0}),
        ]
        for kind, config, options in cases:
            with self.assertRaises(CommandError) as ctx:
                self.call(kind, config, **options)
            self.assertEqual(ctx.exception.returncode, runner.EXIT_USAGE)
        self.assertFalse(ExperimentRun.objects.exists())

    def test_failed_check_exits_with_two(self):
        config = self.config('kind=cover_circle\nseed=1\n')
        with patch.dict(runner.HANDLERS, {'cover_circle': failing_handler}):
            with self.assertRaises(CommandError) as ctx:
                self.call('cover_circle', config, out=str(self.root / 'fail'))
        self.assertEqual(ctx.exception.returncode, runner.EXIT_CHECK_FAILED)
        run = ExperimentRun.objects.get()
        self.assertEqual(run.status, ExperimentRun.Status.CHECK_FAILED)
        self.assertIn('forced_failure', run.message)
        self.assertTrue((self.root / 'fail' / 'checks.json').exists())

    def test_handler_errors_are_usage_errors(self):
        config = self.config('kind=cover_circle\nseed=1\n')
        with patch.dict(runner.HANDLERS, {'cover_circle': broken_handler}):
            with self.assertLogs('experiments.runner', level='ERROR'):
                with self.assertRaises(CommandError) as ctx:
                    self.call('cover_circle', config, out=str(self.root / 'broken'))
        self.assertEqual(ctx.exception.returncode, runner.EXIT_USAGE)
        run = ExperimentRun.objects.get()
        self.assertEqual(run.status, ExperimentRun.Status.ERROR)
        self.assertEqual(run.message, 'delta too coarse')

    def test_unwritable_output(self):
        blocker = self.root / 'file'
        blocker.write_text('', encoding='utf-8')
        config = self.config('kind=cover_circle\nseed=1\n')
        with self.assertRaises(CommandError) as ctx:
            self.call('cover_circle', config, out=str(blocker / 'sub'))
        self.assertEqual(ctx.exception.returncode, runner.EXIT_USAGE)

    def test_unknown_kind_and_missing_config(self):
        config = self.config('kind=mgf\nseed=1\n')
        with self.assertRaises(CommandError) as ctx:
            self.call('no_such_kind', config)
        self.assertEqual(ctx.exception.returncode, runner.EXIT_USAGE)
        with self.assertRaises(CommandError) as ctx:
            call_command('spantree', 'mgf', stdout=StringIO())
        self.assertEqual(ctx.exception.returncode, runner.EXIT_USAGE)

    def test_command_line_usage_errors_exit_with_one(self):
        config = self.config('kind=mgf\nseed=1\n')
        manage = str(settings.BASE_DIR / 'manage.py')
        for argv in (['no_such_kind', '--config', config],
                     ['mgf'],
                     ['mgf', '--config', config, '--workers', 'many']):
            with self.subTest(argv=argv):
                proc = subprocess.run([sys.executable, manage, 'spantree', *argv], capture_output=True, text=True,
                                      cwd=settings.BASE_DIR)
                self.assertEqual(proc.returncode, runner.EXIT_USAGE, proc.stderr)
