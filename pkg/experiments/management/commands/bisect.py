"""
Management command: минимальный размер популяции для одной модели на одной задаче.

Использование:
    python manage.py bisect --problem trap --k 5 --size 30 --model boa --seed 7
    python manage.py bisect --problem onemax --size 50 --model rbm --runs 10 --cap 1024
    python manage.py bisect --problem nk --k 3 --size 20 --model boa --instances 10 --json
"""
import json

from django.core.management.base import CommandError

from eda.bisection import UnsolvedError, bisect_population_size
from eda.bitstring import RandomSource
from eda.engine import MODEL_KINDS
from experiments import conf

from ._base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Бисекция минимального размера популяции для модели на задаче'

    def add_arguments(self, parser):
        self.add_problem_arguments(parser)
        parser.add_argument('--model', choices=MODEL_KINDS, required=True, help='Модель: rbm или boa')
        self.add_criterion_arguments(parser)
        self.add_eda_arguments(parser)
        parser.add_argument('--json', action='store_true', help='Вывести результат в JSON')

    def handle(self, *args, **options):
        self.configure_logging(options['verbose'])
        if options['size'] is None:
            raise CommandError('укажите --size')
        model = options['model']
        size = options['size']
        spec = self.build_spec(options, name='bisect', sizes=[size], models=[model])
        start = spec.start or conf.bisection_start()
        cap = spec.cap or conf.bisection_cap()

        if not options['json']:
            self.banner('BISECT')
            self.stdout.write(f'  Задача:   {spec.problem} size={size} k={spec.k}')
            self.stdout.write(f'  Модель:   {model}')
            self.stdout.write(f'  Зерно:    {spec.seed}')
            self.stdout.write(f'  Интервал: {start}..{cap}')
            self.stdout.write('')

        rng = RandomSource(spec.cell_seed(model, size))
        try:
            result = bisect_population_size(
                spec.problem_for(size), model, spec.criterion_for(size), rng.child(0),
                start=start, cap=cap, **self.eda_options(options),
            )
        except UnsolvedError as exc:
            self.unsolved = True
            if options['json']:
                self.stdout.write(json.dumps({'status': 'unsolved', 'error': str(exc),
                                              'probes': len(exc.probes)}))
            else:
                self.stdout.write(self.style.WARNING(f'❌ Не решено: {exc}'))
            return

        if options['json']:
            self.stdout.write(json.dumps({'status': 'solved', 'seed': spec.seed, **result.to_dict()}))
            return

        for probe in result.probes:
            mark = '✅' if probe.passed else '❌'
            self.stdout.write(
                f'  #{probe.index:<3} {probe.stage:<9} |P|={probe.population_size:<6} {mark} '
                f'прогонов {probe.runs}, вычислений {probe.evaluations}'
            )
        for passed_at, failed_at in result.non_monotone:
            self.stdout.write(self.style.WARNING(f'  ⚠ немонотонность: успех при {passed_at}, неудача при {failed_at}'))
        self.stdout.write('')
        self.stdout.write(self.style.SUCCESS(
            f'✅ Минимальная популяция: {result.population_size} (интервал {result.lower}..{result.upper}), '
            f'всего вычислений {result.evaluations}'
        ))
