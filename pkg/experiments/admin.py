from django.contrib import admin
from django.utils.html import format_html

from .models import Experiment, ExperimentCell, RunRecord

STATUS_COLORS = {
    'pending': '#999', 'running': '#07c', 'completed': '#0a0', 'solved': '#0a0',
    'partial': '#f80', 'unsolved': '#f80', 'failed': '#c00',
}


def _status_html(obj):
    color = STATUS_COLORS.get(obj.status, '#333')
    return format_html('<span style="color:{}">{}</span>', color, obj.get_status_display())


class ExperimentCellInline(admin.TabularInline):
    model = ExperimentCell
    extra = 0
    can_delete = False
    fields = ['index', 'model_kind', 'size', 'status', 'population_size', 'success_rate', 'mean_evaluations', 't_total_ms']
    readonly_fields = fields
    ordering = ['index']


@admin.register(Experiment)
class ExperimentAdmin(admin.ModelAdmin):
    list_display = ['name', 'problem', 'k', 'sizes', 'model_kinds', 'root_seed', 'status_colored', 'duration', 'created_at']
    list_filter = ['status', 'problem', 'created_at']
    search_fields = ['name', 'spec_hash']
    readonly_fields = ['spec_hash', 'spec', 'started_at', 'finished_at', 'created_at']
    inlines = [ExperimentCellInline]
    ordering = ['-created_at']

    fieldsets = (
        ('Эксперимент', {
            'fields': ('name', 'problem', 'k', 'sizes', 'model_kinds', 'root_seed', 'workers'),
        }),
        ('Статус', {
            'fields': ('status', 'output_dir', 'started_at', 'finished_at', 'created_at'),
        }),
        ('Спецификация', {
            'fields': ('spec_hash', 'spec'),
            'classes': ('collapse',),
        }),
    )

    def status_colored(self, obj):
        return _status_html(obj)
    status_colored.short_description = 'Статус'

    def duration(self, obj):
        sec = obj.duration_seconds
        if sec is None:
            return '—'
        if sec < 60:
            return f'{sec:.0f}с'
        return f'{sec / 60:.1f} мин'
    duration.short_description = 'Время'


@admin.register(ExperimentCell)
class ExperimentCellAdmin(admin.ModelAdmin):
    list_display = [
        'experiment', 'model_kind', 'size', 'status_colored', 'population_size',
        'success_rate', 'mean_evaluations', 't_model_ms', 't_total_ms',
    ]
    list_filter = ['status', 'model_kind']
    search_fields = ['experiment__name']
    readonly_fields = ['probe_log', 'error', 'celery_task_id', 'finished_at']

    def status_colored(self, obj):
        return _status_html(obj)
    status_colored.short_description = 'Статус'


@admin.register(RunRecord)
class RunRecordAdmin(admin.ModelAdmin):
    list_display = ['cell', 'run_index', 'success', 'evaluations', 'generations', 'best_fitness', 'stop_reason', 'loop_ms']
    list_filter = ['success', 'stop_reason', 'cell__model_kind']
    readonly_fields = ['trace']
