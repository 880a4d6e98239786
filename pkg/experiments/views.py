"""Read-only JSON browsing of persisted experiment runs."""
from django.forms.models import model_to_dict
from django.http import JsonResponse
from django.shortcuts import get_object_or_404
from django.views.decorators.http import require_http_methods

from .models import ExperimentRun

RUN_FIELDS = ('id', 'kind', 'seed', 'workers', 'status', 'exit_code', 'code_version', 'runtime_seconds')


def _run_summary(run):
    data = {name: getattr(run, name) for name in RUN_FIELDS}
    data['status_display'] = run.get_status_display()
    data['started_at'] = run.started_at.isoformat() if run.started_at else None
    return data


@require_http_methods(["GET"])
def run_list(request):
    """
    All runs, newest first; ?kind= and ?status= filter.
    """
    runs = ExperimentRun.objects.all()
    kind = request.GET.get('kind')
    if kind:
        runs = runs.filter(kind=kind)
    status = request.GET.get('status')
    if status:
        runs = runs.filter(status=status)
    return JsonResponse({'runs': [_run_summary(run) for run in runs]})


@require_http_methods(["GET"])
def run_detail(request, run_id):
    """
    One run with its configuration, estimates and fits.
    """
    run = get_object_or_404(ExperimentRun, pk=run_id)
    data = _run_summary(run)
    data.update({
        'config': run.config,
        'output_dir': run.output_dir,
        'message': run.message,
        'finished_at': run.finished_at.isoformat() if run.finished_at else None,
        'estimates': [model_to_dict(rec, exclude=['run']) for rec in run.estimates.all()],
        'fits': [model_to_dict(fit, exclude=['run']) for fit in run.fits.all()],
    })
    return JsonResponse(data)
