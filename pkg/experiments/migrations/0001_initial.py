import django.core.validators
import django.db.models.deletion
from django.db import migrations, models

MODEL_CHOICES = [
    ('UST', 'Uniform spanning tree'),
    ('MST', 'Minimal spanning tree'),
    ('EST', 'Euclidean minimal spanning tree'),
    ('Bernoulli', 'Bernoulli bond percolation'),
    ('Droplet', 'Droplet percolation'),
    ('Vacant', 'Vacant percolation'),
]
BOUNDARY_CHOICES = [('F', 'Free'), ('W', 'Wired')]


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('kind', models.CharField(max_length=40)),
                ('config', models.JSONField(default=dict)),
                ('seed', models.BigIntegerField()),
                ('workers', models.PositiveIntegerField(default=1)),
                ('status', models.CharField(choices=[('running', 'Running'), ('passed', 'Passed'),
                                                     ('check_failed', 'Statistical check failed'),
                                                     ('error', 'Error')],
                                            default='running', max_length=20)),
                ('exit_code', models.IntegerField(blank=True, null=True)),
                ('code_version', models.CharField(max_length=20)),
                ('output_dir', models.CharField(blank=True, max_length=500)),
                ('message', models.TextField(blank=True)),
                ('started_at', models.DateTimeField(auto_now_add=True)),
                ('finished_at', models.DateTimeField(blank=True, null=True)),
                ('runtime_seconds', models.FloatField(blank=True, null=True)),
            ],
            options={
                'ordering': ['-started_at'],
            },
        ),
        migrations.CreateModel(
            name='EstimateRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('observable', models.CharField(choices=[
                    ('crossing_probability', 'Crossing probability'),
                    ('mgf', 'Moment generating function'),
                    ('choking_probability', 'Choking probability'),
                    ('rectangle_traversal', 'Rectangle traversal probability'),
                    ('droplet_pc', 'Droplet critical scale'),
                    ('vertex_count', 'Vertex count'),
                    ('dimension', 'Box-counting dimension'),
                ], default='crossing_probability', max_length=30)),
                ('model', models.CharField(choices=MODEL_CHOICES, max_length=12)),
                ('geometry', models.CharField(max_length=120)),
                ('r_inner', models.FloatField(blank=True, null=True)),
                ('r_outer', models.FloatField(blank=True, null=True)),
                ('k', models.PositiveIntegerField(blank=True, null=True)),
                ('delta', models.FloatField(validators=[django.core.validators.MinValueValidator(0.0)])),
                ('bc_inner', models.CharField(blank=True, choices=BOUNDARY_CHOICES, max_length=1)),
                ('bc_outer', models.CharField(blank=True, choices=BOUNDARY_CHOICES, max_length=1)),
                ('n_samples', models.PositiveIntegerField()),
                ('successes', models.PositiveIntegerField()),
                ('p_hat', models.FloatField()),
                ('ci_low', models.FloatField()),
                ('ci_high', models.FloatField()),
                ('seed', models.BigIntegerField()),
                ('details', models.JSONField(blank=True, default=dict)),
                ('run', models.ForeignKey(blank=True, null=True, on_delete=django.db.models.deletion.CASCADE,
                                          related_name='estimates', to='experiments.experimentrun')),
            ],
            options={
                'ordering': ['id'],
            },
        ),
        migrations.CreateModel(
            name='ExponentFit',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('model', models.CharField(choices=MODEL_CHOICES, max_length=12)),
                ('k', models.PositiveIntegerField()),
                ('bc_inner', models.CharField(blank=True, choices=BOUNDARY_CHOICES, max_length=1)),
                ('bc_outer', models.CharField(blank=True, choices=BOUNDARY_CHOICES, max_length=1)),
                ('exponent_hat', models.FloatField()),
                ('stderr', models.FloatField(validators=[django.core.validators.MinValueValidator(0.0)])),
                ('intercept', models.FloatField()),
                ('aspect_ratios', models.JSONField(default=list)),
                ('residuals', models.JSONField(default=list)),
                ('details', models.JSONField(blank=True, default=dict)),
                ('run', models.ForeignKey(blank=True, null=True, on_delete=django.db.models.deletion.CASCADE,
                                          related_name='fits', to='experiments.experimentrun')),
            ],
            options={
                'ordering': ['id'],
            },
        ),
    ]
