"""
Management command: один прогон EDA с заданным размером популяции.

Использование:
    python manage.py run --problem trap --k 4 --size 32 --model boa --population 400 --seed 3
    python manage.py run --problem nk --k 3 --size 20 --model rbm --population 600 --instance nk.txt
    python manage.py run --problem onemax --size 30 --model rbm --population 200 --json --trace
"""
import json

from django.core.management.base import CommandError

from eda.bitstring import RandomSource
from eda.engine import MODEL_KINDS, EdaConfig, run_eda
from eda.problems import load_nk_instance

from ._base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Один прогон EDA (RBM или BOA) с фиксированным размером популяции'

    def add_arguments(self, parser):
        self.add_problem_arguments(parser)
        parser.add_argument('--model', choices=MODEL_KINDS, required=True, help='Модель: rbm или boa')
        parser.add_argument('--population', type=int, required=True, help='Размер популяции (чётный)')
        parser.add_argument('--instance', type=str, default=None, help='Файл экземпляра NK (вместо генерации)')
        self.add_eda_arguments(parser)
        parser.add_argument('--json', action='store_true', help='Вывести результат в JSON')
        parser.add_argument('--trace', action='store_true', help='Добавить трассу поколений')

    def handle(self, *args, **options):
        self.configure_logging(options['verbose'])
        if options['size'] is None and not options['instance']:
            raise CommandError('укажите --size')
        model = options['model']

        if options['instance']:
            try:
                problem = load_nk_instance(options['instance'])
            except (OSError, ValueError) as exc:
                raise CommandError(f'не удалось прочитать {options["instance"]}: {exc}')
            seed_source = self.build_spec({**options, 'problem': 'nk', 'k': problem.k},
                                          name='run', sizes=[problem.N], models=[model])
            size = problem.N
        else:
            size = options['size']
            seed_source = self.build_spec(options, name='run', sizes=[size], models=[model])
            problem = seed_source.problem_for(size)
            if problem is None:
                # первый экземпляр того же набора, что использует sweep
                problem = seed_source.criterion_for(size).instances[0]

        try:
            config = EdaConfig(model_kind=model, population_size=options['population'], **self.eda_options(options))
        except ValueError as exc:
            raise CommandError(str(exc))

        result = run_eda(problem, config, RandomSource(seed_source.cell_seed(model, size)))
        self.unsolved = not result.success

        if options['json']:
            self.stdout.write(json.dumps(result.to_dict(include_trace=options['trace']), ensure_ascii=False))
            return

        self.banner('RUN')
        self.stdout.write(f'  Задача:      {problem}')
        self.stdout.write(f'  Модель:      {model}, |P|={config.population_size}')
        self.stdout.write(f'  Поколений:   {result.generations} ({result.stop_reason})')
        self.stdout.write(f'  Вычислений:  {result.evaluations}')
        self.stdout.write(f'  Лучший:      {result.best_fitness:.6g} (цель {result.target_fitness:.6g})')
        self.stdout.write(f'  Генотип:     {result.best.genome}')
        self.stdout.write('  Время по фазам (мс):')
        for phase, ms in result.phase_ms().items():
            self.stdout.write(f'    {phase:<10} {ms:10.1f}')
        if options['trace']:
            for stats in result.trace:
                self.stdout.write(
                    f'  gen {stats.generation:>4}: best={stats.best_fitness:.6g} '
                    f'mean={stats.mean_fitness:.6g} evals={stats.evaluations} {stats.model_info}'
                )
        if result.success:
            self.stdout.write(self.style.SUCCESS('✅ Оптимум найден'))
        else:
            self.stdout.write(self.style.WARNING('❌ Оптимум не найден'))
