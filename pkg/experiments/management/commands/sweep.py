"""
Management command для sweep по размерам задачи: бисекция + полные прогоны для каждой
пары (модель, размер), степенные аппроксимации и файлы результатов.

Использование:
    python manage.py sweep --problem trap --k 5 --sizes 20,30,40,50 --model rbm,boa --seed 7 --out results/trap5
    python manage.py sweep --config experiments.ini
    python manage.py sweep --config experiments.ini --section trap5 --workers 4
    python manage.py sweep --problem onemax --sizes 20,40,80 --async   # ячейки уходят в Celery
"""
import time

from django.core.management.base import CommandError

from eda.engine import MODEL_KINDS
from experiments import conf
from experiments.reporting import format_fit
from experiments.runner import dispatch_experiment, run_experiment
from experiments.specs import load_specs

from ._base import ExperimentCommand, int_list, name_list


class Command(ExperimentCommand):
    help = 'Sweep масштабирования: бисекция и прогоны по сетке размеров для RBM-EDA и BOA'

    def add_arguments(self, parser):
        parser.add_argument('--config', type=str, default=None, help='Файл экспериментов (секции [name])')
        parser.add_argument('--section', type=str, default=None, help='Запустить только эту секцию файла')
        self.add_problem_arguments(parser, sizes=True)
        parser.add_argument('--model', type=str, default=','.join(MODEL_KINDS),
                            help='Модели через запятую (default: rbm,boa)')
        parser.add_argument('--name', type=str, default='sweep', help='Название эксперимента')
        parser.add_argument('--out', type=str, default=None, help='Каталог результатов')
        self.add_criterion_arguments(parser)
        self.add_eda_arguments(parser)
        parser.add_argument('--workers', type=int, default=None,
                            help=f'Параллельных ячеек (default: {conf.default_workers()}; 1 — сравнимое время)')
        parser.add_argument('--async', dest='use_async', action='store_true',
                            help='Отправить ячейки в Celery и не ждать')

    def handle(self, *args, **options):
        self.configure_logging(options['verbose'])
        workers = options['workers'] or conf.default_workers()
        if workers < 1:
            raise CommandError('--workers должен быть >= 1')

        specs = self._specs(options)
        for spec in specs:
            if options['use_async']:
                experiment = dispatch_experiment(spec, workers=workers)
                self.stdout.write(self.style.SUCCESS(
                    f'📨 Эксперимент {experiment.pk} ({spec.name}): {experiment.cells.count()} ячеек отправлено в Celery'
                ))
                self.stdout.write(f'   Отчёт: python manage.py report --experiment {experiment.pk}')
                continue
            self._run(spec, workers, options)

    def _specs(self, options):
        if options['config']:
            try:
                specs = load_specs(options['config'])
            except (OSError, ValueError) as exc:
                raise CommandError(str(exc))
            if options['section']:
                specs = [s for s in specs if s.name == options['section']]
                if not specs:
                    raise CommandError(f'секция [{options["section"]}] не найдена в {options["config"]}')
            return specs
        if not options['sizes']:
            raise CommandError('укажите --config или --problem и --sizes')
        return [self.build_spec(
            options, name=options['name'], sizes=int_list(options['sizes']),
            models=name_list(options['model']), out=options['out'],
        )]

    def _run(self, spec, workers, options):
        self.banner(f'SWEEP: {spec.name}')
        self.stdout.write(f'  Задача:   {spec.problem} k={spec.k} размеры={",".join(map(str, spec.sizes))}')
        self.stdout.write(f'  Модели:   {",".join(spec.models)}')
        self.stdout.write(f'  Зерно:    {spec.seed} (spec {spec.spec_hash})')
        self.stdout.write(f'  Воркеры:  {workers}' + ('' if workers == 1 else ' (время несравнимо)'))
        self.stdout.write('')

        started = time.time()
        total = len(spec.cells())
        done = []

        def on_cell_done(outcome):
            done.append(outcome)
            if outcome.status == 'solved':
                line = (f'  [{len(done)}/{total}] ✅ {outcome.model} @ {outcome.size}: |P|={outcome.summary.pop_size}, '
                        f'успехов {outcome.summary.success_rate:.0%}, вычислений {outcome.summary.mean_evals:.0f}')
                self.stdout.write(line)
            elif outcome.status == 'unsolved':
                self.stdout.write(self.style.WARNING(f'  [{len(done)}/{total}] ❌ {outcome.model} @ {outcome.size}: не решено'))
            else:
                self.stdout.write(self.style.ERROR(
                    f'  [{len(done)}/{total}] 💥 {outcome.model} @ {outcome.size}: {outcome.error.splitlines()[0]}'
                ))

        experiment, report = run_experiment(
            spec, workers=workers, options=self.eda_options(options),
            out_dir=options['out'], on_cell_done=on_cell_done,
        )
        if report.unsolved:
            self.unsolved = True

        self.stdout.write('')
        self.stdout.write(self.style.SUCCESS('=' * 60))
        self.stdout.write(self.style.SUCCESS('  ИТОГОВЫЙ ОТЧЁТ'))
        self.stdout.write(self.style.SUCCESS('=' * 60))
        self.stdout.write(f'  Эксперимент:  {experiment.pk} ({experiment.get_status_display()})')
        self.stdout.write(f'  Время:        {time.time() - started:.1f}с')
        self.stdout.write(f'  Нерешённых:   {len(report.unsolved)}')
        for model, fits in report.fits().items():
            self.stdout.write(f'  {model}:')
            self.stdout.write(f'    вычисления:        {format_fit(fits["evaluations"])}')
            self.stdout.write(f'    общее время:       {format_fit(fits["total_time"])}')
            self.stdout.write(f'    построение модели: {format_fit(fits["model_time"])}')
        self.stdout.write(f'  Результаты:   {experiment.output_dir}')
        self.stdout.write(self.style.SUCCESS('=' * 60))
