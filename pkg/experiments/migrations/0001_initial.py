# Generated by Django 5.2 on 2026-10-19 09:00

from django.db import migrations, models
import django.db.models.deletion


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='Experiment',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('name', models.CharField(max_length=200, verbose_name='Название')),
                ('problem', models.CharField(max_length=20, verbose_name='Семейство задач')),
                ('k', models.IntegerField(blank=True, null=True, verbose_name='Параметр k')),
                ('sizes', models.JSONField(default=list, verbose_name='Размеры задачи')),
                ('model_kinds', models.JSONField(default=list, verbose_name='Модели')),
                ('root_seed', models.BigIntegerField(verbose_name='Корневое зерно')),
                ('spec_hash', models.CharField(db_index=True, max_length=64, verbose_name='Хэш спецификации')),
                ('spec', models.JSONField(default=dict, verbose_name='Спецификация')),
                ('workers', models.IntegerField(default=1, verbose_name='Воркеры')),
                ('status', models.CharField(choices=[('pending', 'В очереди'), ('running', 'Выполняется'), ('completed', 'Завершено'), ('partial', 'Частично (есть нерешённые ячейки)'), ('failed', 'Ошибка')], default='pending', max_length=20, verbose_name='Статус')),
                ('output_dir', models.CharField(blank=True, default='', max_length=500, verbose_name='Каталог результатов')),
                ('started_at', models.DateTimeField(blank=True, null=True, verbose_name='Начало')),
                ('finished_at', models.DateTimeField(blank=True, null=True, verbose_name='Завершение')),
                ('created_at', models.DateTimeField(auto_now_add=True, verbose_name='Создано')),
            ],
            options={
                'verbose_name': 'Эксперимент',
                'verbose_name_plural': 'Эксперименты',
                'ordering': ['-created_at'],
                'indexes': [models.Index(fields=['status', '-created_at'], name='experiment_status_9c1f2e_idx')],
            },
        ),
        migrations.CreateModel(
            name='ExperimentCell',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('index', models.IntegerField(verbose_name='Номер ячейки')),
                ('model_kind', models.CharField(max_length=10, verbose_name='Модель')),
                ('size', models.IntegerField(verbose_name='Размер задачи')),
                ('status', models.CharField(choices=[('pending', 'В очереди'), ('running', 'Выполняется'), ('solved', 'Решено'), ('unsolved', 'Не решено до предела'), ('failed', 'Ошибка')], default='pending', max_length=20, verbose_name='Статус')),
                ('celery_task_id', models.CharField(blank=True, default='', max_length=255, verbose_name='Celery Task ID')),
                ('population_size', models.IntegerField(blank=True, null=True, verbose_name='Минимальная популяция')),
                ('bracket_lower', models.IntegerField(blank=True, null=True, verbose_name='Нижняя граница')),
                ('bracket_upper', models.IntegerField(blank=True, null=True, verbose_name='Верхняя граница')),
                ('bisection_evaluations', models.BigIntegerField(default=0, verbose_name='Вычислений на бисекцию')),
                ('runs', models.IntegerField(default=0, verbose_name='Прогонов')),
                ('success_rate', models.FloatField(blank=True, null=True, verbose_name='Доля успехов')),
                ('mean_evaluations', models.FloatField(blank=True, null=True, verbose_name='Среднее число вычислений')),
                ('sd_evaluations', models.FloatField(blank=True, null=True, verbose_name='СКО числа вычислений')),
                ('t_select_ms', models.FloatField(blank=True, null=True, verbose_name='Отбор, мс')),
                ('t_model_ms', models.FloatField(blank=True, null=True, verbose_name='Построение модели, мс')),
                ('t_sample_ms', models.FloatField(blank=True, null=True, verbose_name='Сэмплирование, мс')),
                ('t_fitness_ms', models.FloatField(blank=True, null=True, verbose_name='Фитнес, мс')),
                ('t_total_ms', models.FloatField(blank=True, null=True, verbose_name='Всего, мс')),
                ('probe_log', models.JSONField(blank=True, default=list, verbose_name='Лог проб')),
                ('error', models.TextField(blank=True, default='', verbose_name='Ошибка')),
                ('finished_at', models.DateTimeField(blank=True, null=True, verbose_name='Завершение')),
                ('experiment', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='cells', to='experiments.experiment', verbose_name='Эксперимент')),
            ],
            options={
                'verbose_name': 'Ячейка эксперимента',
                'verbose_name_plural': 'Ячейки эксперимента',
                'ordering': ['experiment', 'index'],
                'unique_together': {('experiment', 'model_kind', 'size')},
                'indexes': [models.Index(fields=['experiment', 'status'], name='experiment_experim_4b7d0a_idx')],
            },
        ),
        migrations.CreateModel(
            name='RunRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('run_index', models.IntegerField(verbose_name='Номер прогона')),
                ('seed', models.DecimalField(decimal_places=0, max_digits=20, verbose_name='Зерно')),
                ('success', models.BooleanField(default=False, verbose_name='Успех')),
                ('evaluations', models.BigIntegerField(default=0, verbose_name='Вычислений фитнеса')),
                ('generations', models.IntegerField(default=0, verbose_name='Поколений')),
                ('best_fitness', models.FloatField(verbose_name='Лучший фитнес')),
                ('stop_reason', models.CharField(blank=True, default='', max_length=20, verbose_name='Причина остановки')),
                ('t_select_ms', models.FloatField(default=0, verbose_name='Отбор, мс')),
                ('t_model_ms', models.FloatField(default=0, verbose_name='Построение модели, мс')),
                ('t_sample_ms', models.FloatField(default=0, verbose_name='Сэмплирование, мс')),
                ('t_fitness_ms', models.FloatField(default=0, verbose_name='Фитнес, мс')),
                ('loop_ms', models.FloatField(default=0, verbose_name='Время цикла, мс')),
                ('trace', models.JSONField(blank=True, default=list, verbose_name='Трасса поколений')),
                ('cell', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='run_records', to='experiments.experimentcell', verbose_name='Ячейка')),
            ],
            options={
                'verbose_name': 'Прогон',
                'verbose_name_plural': 'Прогоны',
                'ordering': ['cell', 'run_index'],
                'unique_together': {('cell', 'run_index')},
            },
        ),
    ]
