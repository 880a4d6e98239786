from django.contrib import admin

from .models import EstimateRecord, ExperimentRun, ExponentFit


class EstimateRecordInline(admin.TabularInline):
    model = EstimateRecord
    extra = 0
    fields = ('observable', 'model', 'geometry', 'k', 'delta', 'n_samples', 'p_hat', 'ci_low', 'ci_high')
    readonly_fields = fields
    can_delete = False


class ExponentFitInline(admin.TabularInline):
    model = ExponentFit
    extra = 0
    fields = ('model', 'k', 'exponent_hat', 'stderr', 'intercept')
    readonly_fields = fields
    can_delete = False


@admin.register(ExperimentRun)
class ExperimentRunAdmin(admin.ModelAdmin):
    list_display = ('kind', 'seed', 'workers', 'status', 'exit_code', 'runtime_seconds', 'started_at')
    list_filter = ('kind', 'status', 'started_at')
    search_fields = ('kind', 'message', 'output_dir')
    readonly_fields = ('started_at', 'finished_at', 'runtime_seconds', 'code_version')
    inlines = [EstimateRecordInline, ExponentFitInline]


@admin.register(EstimateRecord)
class EstimateRecordAdmin(admin.ModelAdmin):
    list_display = ('observable', 'model', 'geometry', 'k', 'delta', 'n_samples', 'p_hat', 'ci_low', 'ci_high')
    list_filter = ('observable', 'model', 'bc_inner', 'bc_outer')
    search_fields = ('geometry', 'run__kind')


@admin.register(ExponentFit)
class ExponentFitAdmin(admin.ModelAdmin):
    list_display = ('model', 'k', 'bc_inner', 'bc_outer', 'exponent_hat', 'stderr')
    list_filter = ('model', 'k')
    search_fields = ('run__kind',)
