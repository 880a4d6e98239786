from django.core.exceptions import ValidationError
from django.core.validators import MinValueValidator
from django.db import models

from trees.grid import Boundary

from .sampling import TreeModel

SCHEMA_VERSION = 1


class ExperimentRun(models.Model):
    """
    One invocation of the spantree command: the echoed configuration, the
    code version, where its files went and how it ended.
    """
    class Status(models.TextChoices):
        RUNNING = 'running', 'Running'
        PASSED = 'passed', 'Passed'
        CHECK_FAILED = 'check_failed', 'Statistical check failed'
        ERROR = 'error', 'Error'

    kind = models.CharField(max_length=40)
    config = models.JSONField(default=dict)
    seed = models.BigIntegerField()
    workers = models.PositiveIntegerField(default=1)
    status = models.CharField(max_length=20, choices=Status.choices, default=Status.RUNNING)
    exit_code = models.IntegerField(null=True, blank=True)
    code_version = models.CharField(max_length=20)
    output_dir = models.CharField(max_length=500, blank=True)
    message = models.TextField(blank=True)
    started_at = models.DateTimeField(auto_now_add=True)
    finished_at = models.DateTimeField(null=True, blank=True)
    runtime_seconds = models.FloatField(null=True, blank=True)

    class Meta:
        ordering = ['-started_at']

    def __str__(self):
        return f'{self.kind} (seed {self.seed}) - {self.get_status_display()}'


class EstimateRecord(models.Model):
    """
    A Monte Carlo estimate: a crossing probability with its Wilson interval,
    or another estimated quantity (a moment generating function, a critical
    scale) with its interval in the same columns.
    """
    class Observable(models.TextChoices):
        CROSSING_PROBABILITY = 'crossing_probability', 'Crossing probability'
        MGF = 'mgf', 'Moment generating function'
        CHOKING_PROBABILITY = 'choking_probability', 'Choking probability'
        RECTANGLE_TRAVERSAL = 'rectangle_traversal', 'Rectangle traversal probability'
        DROPLET_PC = 'droplet_pc', 'Droplet critical scale'
        VERTEX_COUNT = 'vertex_count', 'Vertex count'
        DIMENSION = 'dimension', 'Box-counting dimension'

    PROBABILITY_OBSERVABLES = {
        Observable.CROSSING_PROBABILITY,
        Observable.CHOKING_PROBABILITY,
        Observable.RECTANGLE_TRAVERSAL,
    }

    run = models.ForeignKey(ExperimentRun, on_delete=models.CASCADE, null=True, blank=True,
                            related_name='estimates')
    observable = models.CharField(max_length=30, choices=Observable.choices,
                                  default=Observable.CROSSING_PROBABILITY)
    model = models.CharField(max_length=12, choices=TreeModel.choices)
    geometry = models.CharField(max_length=120)
    r_inner = models.FloatField(null=True, blank=True)
    r_outer = models.FloatField(null=True, blank=True)
    k = models.PositiveIntegerField(null=True, blank=True)
    delta = models.FloatField(validators=[MinValueValidator(0.0)])
    bc_inner = models.CharField(max_length=1, choices=Boundary.choices, blank=True)
    bc_outer = models.CharField(max_length=1, choices=Boundary.choices, blank=True)
    n_samples = models.PositiveIntegerField()
    successes = models.PositiveIntegerField()
    p_hat = models.FloatField()
    ci_low = models.FloatField()
    ci_high = models.FloatField()
    seed = models.BigIntegerField()
    details = models.JSONField(default=dict, blank=True)

    class Meta:
        ordering = ['id']

    def __str__(self):
        k = f' k={self.k}' if self.k is not None else ''
        return f'{self.model} {self.observable} {self.geometry}{k}: {self.p_hat:.4g}'

    @property
    def aspect(self):
        if self.r_inner and self.r_outer:
            return self.r_outer / self.r_inner
        return None

    @property
    def stderr(self):
        if self.n_samples == 0:
            return 0.0
        p = min(max(self.p_hat, 0.0), 1.0)
        return (p * (1 - p) / self.n_samples) ** 0.5

    def clean(self):
        errors = {}
        if self.successes > self.n_samples:
            errors['successes'] = 'Successes cannot exceed the number of samples.'
        if not (self.ci_low <= self.p_hat <= self.ci_high):
            errors['p_hat'] = 'The estimate must lie inside its confidence interval.'
        if self.observable in self.PROBABILITY_OBSERVABLES and not (0.0 <= self.p_hat <= 1.0):
            errors['p_hat'] = 'A probability estimate must lie in [0, 1].'
        if errors:
            raise ValidationError(errors)


class ExponentFit(models.Model):
    """Least-squares slope of log p_hat against log(r/R) over several aspect ratios."""
    run = models.ForeignKey(ExperimentRun, on_delete=models.CASCADE, null=True, blank=True,
                            related_name='fits')
    model = models.CharField(max_length=12, choices=TreeModel.choices)
    k = models.PositiveIntegerField()
    bc_inner = models.CharField(max_length=1, choices=Boundary.choices, blank=True)
    bc_outer = models.CharField(max_length=1, choices=Boundary.choices, blank=True)
    exponent_hat = models.FloatField()
    stderr = models.FloatField(validators=[MinValueValidator(0.0)])
    intercept = models.FloatField()
    aspect_ratios = models.JSONField(default=list)
    residuals = models.JSONField(default=list)
    details = models.JSONField(default=dict, blank=True)

    class Meta:
        ordering = ['id']

    def __str__(self):
        return f'{self.model} k={self.k}: {self.exponent_hat:.4f} +/- {self.stderr:.4f}'

    def clean(self):
        if len(self.aspect_ratios) < 3:
            raise ValidationError({'aspect_ratios': 'A fit needs at least three aspect ratios.'})
        if self.stderr < 0:
            raise ValidationError({'stderr': 'Standard errors are non-negative.'})
