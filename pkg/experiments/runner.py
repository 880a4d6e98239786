"""
run_experiment: dispatch a validated config to the analysis layer, persist
the records, and write the result files of one run.

Result files (results.csv, fits.csv, checks.json) depend only on the config
and the seed. manifest.json adds the code version and the runtime.
"""
import csv
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError
from django.db import transaction
from django.utils import timezone

from spantree_lab import __version__
from trees.exceptions import SpanTreeError
from trees.grid import AnnulusSpec, Boundary, Rect
from trees.structures import CheckReport

from . import analysis
from .models import SCHEMA_VERSION, ExperimentRun
from .parallel import default_workers
from .sampling import ORIGIN, TreeModel, lattice_box

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CHECK_FAILED = 2

RECORD_COLUMNS = ['observable', 'model', 'geometry', 'r_inner', 'r_outer', 'k', 'delta', 'bc_inner', 'bc_outer',
                  'n_samples', 'successes', 'p_hat', 'ci_low', 'ci_high', 'seed', 'details']
FIT_COLUMNS = ['model', 'k', 'bc_inner', 'bc_outer', 'exponent_hat', 'stderr', 'intercept', 'aspect_ratios',
               'residuals', 'details']


class UsageError(ValueError):
    """A config that validates field by field but cannot be run."""


@dataclass
class ExperimentResult:
    records: list = field(default_factory=list)
    fits: list = field(default_factory=list)
    reports: list = field(default_factory=list)

    @property
    def passed(self):
        return all(rep.passed for rep in self.reports)


@dataclass
class RunOutcome:
    run: ExperimentRun
    exit_code: int
    result: ExperimentResult | None
    files: dict


def _builtin(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (set, frozenset)):
        return sorted(value)
    raise TypeError(f'{type(value).__name__} is not JSON serializable')


def plain(obj):
    """JSON-safe copy of nested results (numpy scalars and arrays become Python values)."""
    return json.loads(json.dumps(obj, default=_builtin))


def _cell(value):
    if value is None:
        return ''
    if isinstance(value, (dict, list, tuple)):
        return json.dumps(plain(value), sort_keys=True)
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else str(value)
    return str(value)


# Config access with per-kind defaults

def _get(cfg, key, default):
    value = cfg.get(key)
    return default if value is None else value


def _model(cfg, default=TreeModel.UST):
    return TreeModel(_get(cfg, 'model', default))


def _delta(cfg, r=None):
    if cfg.get('delta') is not None:
        return float(cfg['delta'])
    r = _get(cfg, 'r', 1.0) if r is None else r
    return r / _get(cfg, 'r_over_delta', 8.0)


def _outer(cfg, r, default_aspect=3.0):
    if cfg.get('R') is not None:
        return float(cfg['R'])
    return r * _get(cfg, 'aspect', default_aspect)


def _n(cfg, default=1000):
    return int(_get(cfg, 'n_samples', default))


def _aspects(cfg):
    return tuple(cfg.get('aspects') or analysis.DEFAULT_ASPECTS)


# One handler per experiment kind: (cfg, seed, workers) -> ExperimentResult

def _crossing_prob(cfg, seed, workers):
    r = _get(cfg, 'r', 1.0)
    spec = AnnulusSpec(ORIGIN, r, _outer(cfg, r), _get(cfg, 'bc_inner', Boundary.FREE),
                       _get(cfg, 'bc_outer', Boundary.WIRED))
    record = analysis.estimate_crossing_probability(_model(cfg), spec, _get(cfg, 'k', 1), _delta(cfg), _n(cfg),
                                                    seed, workers, p=_get(cfg, 'p', 0.5))
    return ExperimentResult(records=[record])


def _fit_gamma(cfg, seed, workers):
    r = _get(cfg, 'r', 1.0)
    records, fit = analysis.fit_gamma(_model(cfg), _get(cfg, 'k', 2), _delta(cfg), _n(cfg), seed, r=r,
                                      aspects=_aspects(cfg), workers=workers)
    report = CheckReport('exponent_positive', checked=1)
    lower = fit.exponent_hat - analysis.TOLERANCE_SIGMAS * fit.stderr
    if lower <= 0:
        report.violations.append({'exponent_hat': fit.exponent_hat, 'stderr': fit.stderr})
    report.details.update({'lower': lower, 'reference': (fit.k ** 2 - 1) / 4})
    return ExperimentResult(records=records, fits=[fit], reports=[report])


def _geometric_decay(cfg, seed, workers):
    records, report = analysis.geometric_decay_check(
        _model(cfg), _get(cfg, 'aspect', 3.0), _get(cfg, 'k_max', 3), _delta(cfg), _n(cfg), seed,
        r=_get(cfg, 'r', 1.0), margin=_get(cfg, 'margin', 0.0), workers=workers)
    return ExperimentResult(records=records, reports=[report])


def _telescopic(cfg, seed, workers):
    radii = cfg.get('radii') or (1.0, 2.0, 4.0, 8.0)
    records, report = analysis.telescopic_compare(_model(cfg), radii, _get(cfg, 'k', 2), _delta(cfg, radii[0]),
                                                  _n(cfg), seed, workers)
    return ExperimentResult(records=records, reports=[report])


def _mgf(cfg, seed, workers):
    ts = sorted(cfg.get('ts') or (_get(cfg, 't', 1.0),))
    records = [
        analysis.estimate_crossing_mgf(_model(cfg), _get(cfg, 'aspect', 3.0), t, _delta(cfg), _n(cfg), seed,
                                       r=_get(cfg, 'r', 1.0), workers=workers)
        for t in ts
    ]
    report = CheckReport('mgf_monotone')
    nonnegative = [rec for t, rec in zip(ts, records) if t >= 0]
    for a, b in zip(nonnegative, nonnegative[1:]):
        report.checked += 1
        if b.p_hat < a.p_hat:
            report.violations.append({'t': [a.details['t'], b.details['t']], 'values': [a.p_hat, b.p_hat]})
    return ExperimentResult(records=records, reports=[report])


def _quadratic_growth(cfg, seed, workers):
    k_min, k_max = _get(cfg, 'k_min', 1), _get(cfg, 'k_max', 4)
    records, fits, report = analysis.quadratic_growth_probe(
        _model(cfg), range(k_min, k_max + 1), _delta(cfg), _n(cfg), seed, r=_get(cfg, 'r', 1.0),
        aspects=_aspects(cfg), workers=workers)
    return ExperimentResult(records=records, fits=fits, reports=[report])


def _rectangle_traversal(cfg, seed, workers):
    delta = _delta(cfg)
    width = _get(cfg, 'width', 16 * delta)
    record, report = analysis.rectangle_traversal_probability(_model(cfg), width, _get(cfg, 'aspect', 3.0), delta,
                                                              _n(cfg), seed, workers)
    return ExperimentResult(records=[record], reports=[report])


def _delta_stability(cfg, seed, workers):
    r = _get(cfg, 'r', 1.0)
    deltas = cfg.get('deltas') or (r / 8, r / 16, r / 32)
    observable = analysis.crossing_observable(_model(cfg), _get(cfg, 'k', 2), _get(cfg, 'aspect', 3.0), r=r,
                                              n=_n(cfg), seed=seed, workers=workers)
    records, report = analysis.delta_stability_check(observable, deltas)
    return ExperimentResult(records=records, reports=[report])


def _choking(cfg, seed, workers):
    r = _get(cfg, 'r', 1.0)
    record = analysis.estimate_choking_probability(_delta(cfg), r, _n(cfg), seed, workers)
    report = CheckReport('choking_positive', checked=1)
    if record.p_hat - analysis.TOLERANCE_SIGMAS * record.stderr <= 0:
        report.violations.append({'p_hat': record.p_hat, 'stderr': record.stderr})
    return ExperimentResult(records=[record], reports=[report])


def _droplet_pc(cfg, seed, workers):
    delta = _get(cfg, 'delta', 0.05)
    width = _get(cfg, 'width', 1.0)
    record = analysis.estimate_droplet_pc(width, width * _get(cfg, 'aspect', 1.0), delta, _n(cfg, 200), seed,
                                          workers=workers)
    return ExperimentResult(records=[record])


def _bernoulli_crossing(cfg, seed, workers):
    record, report = analysis.bernoulli_rectangle_crossing(_get(cfg, 'n_side', 8), _n(cfg), seed,
                                                           p=_get(cfg, 'p', 0.5), workers=workers)
    return ExperimentResult(records=[record], reports=[report])


def _ust_uniformity(cfg, seed, workers):
    side = _get(cfg, 'n_side', 2)
    if side < 2:
        raise UsageError('The uniformity check needs a box with at least two vertices per side.')
    g = lattice_box(1.0, Rect(0.0, 0.0, float(side - 1), float(side - 1)), Boundary.FREE)
    report = analysis.ust_uniformity_check(g, _n(cfg, 10_000), seed, roots=(0, g.n_vertices - 1), workers=workers)
    return ExperimentResult(reports=[report])


def _branch_dimension(cfg, seed, workers):
    side = _get(cfg, 'n_side', 64)
    record, fits = analysis.branch_dimension(side, _n(cfg, 4), seed, workers=workers)
    report = CheckReport('branch_dimension_window', checked=1)
    if not 1.05 < record.p_hat < 1.95:
        report.violations.append({'dimension': record.p_hat})
    return ExperimentResult(records=[record], reports=[report])


def _branching_census(cfg, seed, workers):
    side = _get(cfg, 'n_side', 64)
    eps = cfg.get('eps') or (side / 32, side / 16, side / 8, side / 4)
    return ExperimentResult(reports=[analysis.branching_census_experiment(side, eps, seed)])


def _lemma_suite(cfg, seed, workers):
    r = _get(cfg, 'r', 1.0)
    reports = analysis.lemma_suite(_model(cfg, TreeModel.MST), r, _outer(cfg, r), _delta(cfg), _n(cfg, 100), seed,
                                   p=_get(cfg, 'p', 0.3), workers=workers)
    return ExperimentResult(reports=reports)


def _semipath(cfg, seed, workers):
    r = _get(cfg, 'r', 1.0)
    report = analysis.semipath_check(r, _outer(cfg, r), _delta(cfg), _n(cfg, 100), seed, workers)
    return ExperimentResult(reports=[report])


def _cover_circle(cfg, seed, workers):
    cs = cfg.get('cs') or (0.05, 0.1, 0.25, 0.5, 0.9)
    sigmas = cfg.get('sigmas') or (1.0, 1.5, 2.0, 4.0)
    return ExperimentResult(reports=[analysis.cover_circle_check(cs, sigmas)])


HANDLERS = {
    'crossing_prob': _crossing_prob,
    'fit_gamma': _fit_gamma,
    'geometric_decay': _geometric_decay,
    'telescopic': _telescopic,
    'mgf': _mgf,
    'quadratic_growth': _quadratic_growth,
    'rectangle_traversal': _rectangle_traversal,
    'delta_stability': _delta_stability,
    'choking': _choking,
    'droplet_pc': _droplet_pc,
    'bernoulli_crossing': _bernoulli_crossing,
    'ust_uniformity': _ust_uniformity,
    'branch_dimension': _branch_dimension,
    'branching_census': _branching_census,
    'lemma_suite': _lemma_suite,
    'semipath': _semipath,
    'cover_circle': _cover_circle,
}


# Result files

def _write_csv(path, columns, rows):
    with open(path, 'w', newline='', encoding='utf-8') as fh:
        writer = csv.writer(fh, lineterminator='\n')
        writer.writerow(['schema_version'] + columns)
        for row in rows:
            writer.writerow([SCHEMA_VERSION] + [_cell(getattr(row, name)) for name in columns])


def _check_dict(report):
    return {'name': report.name, 'checked': report.checked, 'passed': report.passed,
            'violations': report.violations, 'details': report.details}


def write_results(out_dir, result):
    out_dir = Path(out_dir)
    files = {
        'results': out_dir / 'results.csv',
        'fits': out_dir / 'fits.csv',
        'checks': out_dir / 'checks.json',
    }
    _write_csv(files['results'], RECORD_COLUMNS, result.records)
    _write_csv(files['fits'], FIT_COLUMNS, result.fits)
    checks = {'schema_version': SCHEMA_VERSION, 'checks': [_check_dict(rep) for rep in result.reports]}
    files['checks'].write_text(json.dumps(plain(checks), sort_keys=True, indent=2) + '\n', encoding='utf-8')
    return files


def write_manifest(out_dir, run, config, files):
    path = Path(out_dir) / 'manifest.json'
    manifest = {
        'schema_version': SCHEMA_VERSION,
        'kind': run.kind,
        'config': config,
        'seed': run.seed,
        'workers': run.workers,
        'code_version': run.code_version,
        'runtime_seconds': run.runtime_seconds,
        'status': run.status,
        'exit_code': run.exit_code,
        'files': sorted(p.name for p in files.values()),
    }
    path.write_text(json.dumps(plain(manifest), sort_keys=True, indent=2) + '\n', encoding='utf-8')
    return path


def _prepare_output(out_dir):
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        marker = out_dir / '.write-test'
        marker.write_text('', encoding='utf-8')
        marker.unlink()
    except OSError as exc:
        raise UsageError(f'Output directory {out_dir} is not writable: {exc}') from exc
    return out_dir


def default_output_dir(kind, seed):
    return Path(settings.SPANTREE_OUTPUT_DIR) / f'{kind}-seed{seed}'


@transaction.atomic
def _persist(run, result):
    for rec in result.records:
        rec.details = plain(rec.details)
        rec.run = run
        rec.full_clean()
        rec.save()
    for fit in result.fits:
        fit.details = plain(fit.details)
        fit.run = run
        fit.full_clean()
        fit.save()


def run_experiment(config, seed=None, out_dir=None, workers=None):
    """
    Execute the experiment named by config['kind'] (a cleaned
    ExperimentConfigForm payload) and write its result files.
    Returns a RunOutcome whose exit_code is 0, 1 (usage error) or 2
    (a statistical check failed).
    """
    config = plain(dict(config))
    kind = config['kind']
    if kind not in HANDLERS:
        raise UsageError(f'Unknown experiment kind "{kind}".')
    seed = int(config['seed'] if seed is None else seed)
    workers = default_workers() if workers is None else max(1, int(workers))
    out_dir = _prepare_output(out_dir or config.get('output') or default_output_dir(kind, seed))

    run = ExperimentRun.objects.create(kind=kind, config=config, seed=seed, workers=workers,
                                       code_version=__version__, output_dir=str(out_dir))
    logger.info('Run %d: %s with seed %d on %d worker(s)', run.pk, kind, seed, workers)
    started = time.perf_counter()
    result, files = None, {}
    try:
        result = HANDLERS[kind](config, seed, workers)
        _persist(run, result)
        files = write_results(out_dir, result)
    except (SpanTreeError, ValidationError, ValueError, OSError) as exc:
        logger.error('Run %d failed: %s', run.pk, exc)
        run.status = ExperimentRun.Status.ERROR
        run.exit_code = EXIT_USAGE
        run.message = str(exc)
    else:
        if result.passed:
            run.status = ExperimentRun.Status.PASSED
            run.exit_code = EXIT_OK
        else:
            run.status = ExperimentRun.Status.CHECK_FAILED
            run.exit_code = EXIT_CHECK_FAILED
            run.message = '; '.join(rep.summary() for rep in result.reports if not rep.passed)
            logger.warning('Run %d: %s', run.pk, run.message)
    run.runtime_seconds = time.perf_counter() - started
    run.finished_at = timezone.now()
    run.save()
    if files:
        files['manifest'] = write_manifest(out_dir, run, config, files)
    logger.info('Run %d finished in %.1fs with exit code %d', run.pk, run.runtime_seconds, run.exit_code)
    return RunOutcome(run=run, exit_code=run.exit_code, result=result, files=files)
