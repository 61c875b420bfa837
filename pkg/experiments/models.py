from django.db import models


class Experiment(models.Model):
    """Один прогон sweep: спецификация, зерно и итоговый статус."""

    STATUS_CHOICES = [
        ('pending', 'В очереди'),
        ('running', 'Выполняется'),
        ('completed', 'Завершено'),
        ('partial', 'Частично (есть нерешённые ячейки)'),
        ('failed', 'Ошибка'),
    ]

    name = models.CharField('Название', max_length=200)
    problem = models.CharField('Семейство задач', max_length=20)
    k = models.IntegerField('Параметр k', null=True, blank=True)
    sizes = models.JSONField('Размеры задачи', default=list)
    model_kinds = models.JSONField('Модели', default=list)
    root_seed = models.BigIntegerField('Корневое зерно')
    spec_hash = models.CharField('Хэш спецификации', max_length=64, db_index=True)
    spec = models.JSONField('Спецификация', default=dict)
    workers = models.IntegerField('Воркеры', default=1)
    status = models.CharField('Статус', max_length=20, choices=STATUS_CHOICES, default='pending')
    output_dir = models.CharField('Каталог результатов', max_length=500, blank=True, default='')

    started_at = models.DateTimeField('Начало', null=True, blank=True)
    finished_at = models.DateTimeField('Завершение', null=True, blank=True)
    created_at = models.DateTimeField('Создано', auto_now_add=True)

    class Meta:
        verbose_name = 'Эксперимент'
        verbose_name_plural = 'Эксперименты'
        ordering = ['-created_at']
        indexes = [
            models.Index(fields=['status', '-created_at'], name='experiment_status_9c1f2e_idx'),
        ]

    def __str__(self):
        return f'{self.name} [{self.problem}] — {self.get_status_display()}'

    @property
    def timing_comparable(self) -> bool:
        return self.workers == 1

    @property
    def duration_seconds(self):
        if not self.started_at:
            return None
        from django.utils import timezone
        end = self.finished_at or timezone.now()
        return (end - self.started_at).total_seconds()

    def refresh_status(self):
        """Итоговый статус по статусам ячеек; pending/running ячейки оставляют running."""
        statuses = set(self.cells.values_list('status', flat=True))
        if not statuses or statuses & {'pending', 'running'}:
            return self.status
        if statuses == {'solved'}:
            status = 'completed'
        elif 'solved' in statuses or 'unsolved' in statuses:
            status = 'partial'
        else:
            status = 'failed'
        from django.utils import timezone
        Experiment.objects.filter(pk=self.pk).update(status=status, finished_at=timezone.now())
        self.status = status
        return status


class ExperimentCell(models.Model):
    """Ячейка sweep: одна модель на одном размере задачи."""

    STATUS_CHOICES = [
        ('pending', 'В очереди'),
        ('running', 'Выполняется'),
        ('solved', 'Решено'),
        ('unsolved', 'Не решено до предела'),
        ('failed', 'Ошибка'),
    ]

    experiment = models.ForeignKey(
        Experiment, on_delete=models.CASCADE, related_name='cells', verbose_name='Эксперимент',
    )
    index = models.IntegerField('Номер ячейки')
    model_kind = models.CharField('Модель', max_length=10)
    size = models.IntegerField('Размер задачи')
    status = models.CharField('Статус', max_length=20, choices=STATUS_CHOICES, default='pending')
    celery_task_id = models.CharField('Celery Task ID', max_length=255, blank=True, default='')

    population_size = models.IntegerField('Минимальная популяция', null=True, blank=True)
    bracket_lower = models.IntegerField('Нижняя граница', null=True, blank=True)
    bracket_upper = models.IntegerField('Верхняя граница', null=True, blank=True)
    bisection_evaluations = models.BigIntegerField('Вычислений на бисекцию', default=0)

    runs = models.IntegerField('Прогонов', default=0)
    success_rate = models.FloatField('Доля успехов', null=True, blank=True)
    mean_evaluations = models.FloatField('Среднее число вычислений', null=True, blank=True)
    sd_evaluations = models.FloatField('СКО числа вычислений', null=True, blank=True)
    t_select_ms = models.FloatField('Отбор, мс', null=True, blank=True)
    t_model_ms = models.FloatField('Построение модели, мс', null=True, blank=True)
    t_sample_ms = models.FloatField('Сэмплирование, мс', null=True, blank=True)
    t_fitness_ms = models.FloatField('Фитнес, мс', null=True, blank=True)
    t_total_ms = models.FloatField('Всего, мс', null=True, blank=True)

    probe_log = models.JSONField('Лог проб', default=list, blank=True)
    error = models.TextField('Ошибка', blank=True, default='')
    finished_at = models.DateTimeField('Завершение', null=True, blank=True)

    class Meta:
        verbose_name = 'Ячейка эксперимента'
        verbose_name_plural = 'Ячейки эксперимента'
        ordering = ['experiment', 'index']
        unique_together = [('experiment', 'model_kind', 'size')]
        indexes = [
            models.Index(fields=['experiment', 'status'], name='experiment_experim_4b7d0a_idx'),
        ]

    def __str__(self):
        return f'{self.model_kind} @ {self.size} — {self.get_status_display()}'


class RunRecord(models.Model):
    """Один прогон EDA на найденном размере популяции."""

    cell = models.ForeignKey(
        ExperimentCell, on_delete=models.CASCADE, related_name='run_records', verbose_name='Ячейка',
    )
    run_index = models.IntegerField('Номер прогона')
    seed = models.DecimalField('Зерно', max_digits=20, decimal_places=0)
    success = models.BooleanField('Успех', default=False)
    evaluations = models.BigIntegerField('Вычислений фитнеса', default=0)
    generations = models.IntegerField('Поколений', default=0)
    best_fitness = models.FloatField('Лучший фитнес')
    stop_reason = models.CharField('Причина остановки', max_length=20, blank=True, default='')
    t_select_ms = models.FloatField('Отбор, мс', default=0)
    t_model_ms = models.FloatField('Построение модели, мс', default=0)
    t_sample_ms = models.FloatField('Сэмплирование, мс', default=0)
    t_fitness_ms = models.FloatField('Фитнес, мс', default=0)
    loop_ms = models.FloatField('Время цикла, мс', default=0)
    trace = models.JSONField('Трасса поколений', default=list, blank=True)

    class Meta:
        verbose_name = 'Прогон'
        verbose_name_plural = 'Прогоны'
        ordering = ['cell', 'run_index']
        unique_together = [('cell', 'run_index')]

    def __str__(self):
        return f'#{self.run_index} {"✓" if self.success else "✗"} {self.evaluations}'
