import sys
from pathlib import Path

from decouple import RepositoryEnv
from django.core.management.base import BaseCommand, CommandError

from experiments.forms import EXPERIMENT_KINDS, ExperimentConfigForm
from experiments.runner import EXIT_CHECK_FAILED, EXIT_OK, EXIT_USAGE, UsageError, run_experiment

KINDS = [kind for kind, _label in EXPERIMENT_KINDS]


class Command(BaseCommand):
    help = 'Run one Monte Carlo experiment from a key=value config file and write its result files.'

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)
        if parser.called_from_command_line:
            # exit status 2 is reserved for failed checks
            def usage_error(message):
                parser.print_usage(sys.stderr)
                parser.exit(EXIT_USAGE, f'{parser.prog}: error: {message}\n')

            parser.error = usage_error
        return parser

    def add_arguments(self, parser):
        parser.add_argument('kind', help=f'Experiment kind: {", ".join(KINDS)}.')
        parser.add_argument('--config', help='Experiment config file (one key=value per line).')
        parser.add_argument('--seed', type=int, help='Base seed; overrides the config file.')
        parser.add_argument('--out', help='Output directory; overrides the config file.')
        parser.add_argument('--workers', type=int, help='Worker processes (default: SPANTREE_WORKERS).')

    def _load_config(self, path, kind, seed):
        path = Path(path)
        if not path.is_file():
            raise CommandError(f'Config file {path} does not exist.', returncode=EXIT_USAGE)
        data = dict(RepositoryEnv(str(path)).data)
        if data.setdefault('kind', kind) != kind:
            raise CommandError(f'Config file is for "{data["kind"]}", not "{kind}".', returncode=EXIT_USAGE)
        if seed is not None:
            data['seed'] = str(seed)
        form = ExperimentConfigForm(data)
        if not form.is_valid():
            problems = '; '.join(
                f'{name}: {" ".join(messages)}' if name != '__all__' else ' '.join(messages)
                for name, messages in form.errors.items()
            )
            raise CommandError(f'Invalid config: {problems}', returncode=EXIT_USAGE)
        return form.settings()

    def handle(self, *args, **options):
        if options['kind'] not in KINDS:
            raise CommandError(f'Unknown experiment kind "{options["kind"]}"; choose from {", ".join(KINDS)}.',
                               returncode=EXIT_USAGE)
        if not options['config']:
            raise CommandError('--config is required.', returncode=EXIT_USAGE)
        if options['workers'] is not None and options['workers'] < 1:
            raise CommandError('--workers must be at least 1.', returncode=EXIT_USAGE)
        config = self._load_config(options['config'], options['kind'], options['seed'])
        try:
            outcome = run_experiment(config, out_dir=options['out'], workers=options['workers'])
        except UsageError as exc:
            raise CommandError(str(exc), returncode=EXIT_USAGE)

        run = outcome.run
        for name, path in sorted(outcome.files.items()):
            self.stdout.write(f'  {name}: {path}')
        if outcome.exit_code == EXIT_OK:
            self.stdout.write(self.style.SUCCESS(
                f'Run {run.pk} ({run.kind}) passed in {run.runtime_seconds:.1f}s.'))
        elif outcome.exit_code == EXIT_CHECK_FAILED:
            self.stdout.write(self.style.WARNING(f'Run {run.pk} ({run.kind}): {run.message}'))
            raise CommandError('Statistical check failed.', returncode=EXIT_CHECK_FAILED)
        else:
            raise CommandError(f'Run {run.pk} ({run.kind}) failed: {run.message}', returncode=EXIT_USAGE)
