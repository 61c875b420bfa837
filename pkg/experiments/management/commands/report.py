"""
Management command: отчёт по эксперименту из БД или из ранее записанного CSV.

Использование:
    python manage.py report --experiment 12
    python manage.py report --csv results/trap5/results.csv --out results/trap5_again
    python manage.py report --experiment 12 --json
"""
import json

from django.core.management.base import CommandError

from experiments.models import Experiment
from experiments.reporting import format_fit, read_csv, report_from_experiment, write_artifacts

from ._base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Отчёт масштабирования: таблица ячеек и степенные аппроксимации'

    def add_arguments(self, parser):
        source = parser.add_mutually_exclusive_group(required=True)
        source.add_argument('--experiment', type=int, help='ID эксперимента в БД')
        source.add_argument('--csv', type=str, help='CSV, записанный sweep')
        parser.add_argument('--out', type=str, default=None, help='Записать CSV/JSON/таблицы графиков в каталог')
        parser.add_argument('--json', action='store_true', help='Вывести отчёт в JSON')

    def handle(self, *args, **options):
        if options['experiment'] is not None:
            try:
                experiment = Experiment.objects.get(pk=options['experiment'])
            except Experiment.DoesNotExist:
                raise CommandError(f'эксперимент {options["experiment"]} не найден')
            report = report_from_experiment(experiment)
            pending = experiment.cells.filter(status__in=('pending', 'running')).count()
        else:
            try:
                report = read_csv(options['csv'])
            except (OSError, ValueError) as exc:
                raise CommandError(str(exc))
            pending = 0

        if not report.cells:
            raise CommandError('в отчёте нет завершённых ячеек')

        if options['out']:
            paths = write_artifacts(report, options['out'])
        else:
            paths = []

        if options['json']:
            self.stdout.write(json.dumps(report.to_dict(), ensure_ascii=False, indent=2))
            return

        self.banner(f'REPORT: {report.problem} k={report.k}')
        self.stdout.write(f'  seed={report.seed} spec={report.spec_hash} '
                          f'timing_comparable={str(report.timing_comparable).lower()}')
        if pending:
            self.stdout.write(self.style.WARNING(f'  ⏳ ещё не завершено ячеек: {pending}'))
        self.stdout.write('')
        self.stdout.write(f'  {"model":<6} {"size":>5} {"|P|":>6} {"success":>8} {"evals":>10} '
                          f'{"model ms":>10} {"total ms":>10}')
        for cell in sorted(report.cells, key=lambda c: (c.model, c.size)):
            if cell.solved:
                self.stdout.write(
                    f'  {cell.model:<6} {cell.size:>5} {cell.pop_size:>6} {cell.success_rate:>8.0%} '
                    f'{cell.mean_evals:>10.0f} {cell.t_model_ms:>10.1f} {cell.t_total_ms:>10.1f}'
                )
            else:
                self.stdout.write(self.style.WARNING(f'  {cell.model:<6} {cell.size:>5} {"—":>6} не решено'))
        self.stdout.write('')
        for model, fits in report.fits().items():
            self.stdout.write(f'  {model}:')
            self.stdout.write(f'    вычисления:        {format_fit(fits["evaluations"])}')
            self.stdout.write(f'    общее время:       {format_fit(fits["total_time"])}')
            self.stdout.write(f'    построение модели: {format_fit(fits["model_time"])}')
        for path in paths:
            self.stdout.write(f'  📄 {path}')
