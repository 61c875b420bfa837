"""
Общая основа команд экспериментов: коды выхода, логирование, аргументы задачи.

Коды выхода:
    0  всё решено
    1  ошибка использования (CommandError или argparse)
    2  команда отработала, но есть нерешённые ячейки или прогоны
"""
import logging
import sys

from django.core.management.base import BaseCommand, CommandError

from eda.problems import NK_TOPOLOGIES, PROBLEM_FAMILIES
from experiments import conf

EXIT_UNSOLVED = 2


def int_list(text):
    try:
        return [int(item) for item in text.split(',') if item.strip()]
    except ValueError:
        raise CommandError(f'ожидается список целых через запятую: {text!r}')


def name_list(text):
    return [item.strip() for item in text.split(',') if item.strip()]


class ExperimentCommand(BaseCommand):
    unsolved = False

    def run_from_argv(self, argv):
        try:
            super().run_from_argv(argv)
        except SystemExit as exc:
            # argparse выходит с кодом 2, у нас ошибка использования имеет код 1
            if exc.code == 2:
                sys.exit(1)
            raise
        if self.unsolved:
            sys.exit(EXIT_UNSOLVED)

    def execute(self, *args, **options):
        self.unsolved = False
        return super().execute(*args, **options)

    # -- аргументы --------------------------------------------------------

    def add_problem_arguments(self, parser, sizes=False):
        parser.add_argument('--problem', choices=PROBLEM_FAMILIES, default=None, help='Семейство задач')
        parser.add_argument('--k', type=int, default=None, help='Порядок ловушки / степень NK')
        if sizes:
            parser.add_argument('--sizes', type=str, default=None, help='Размеры задачи через запятую')
        else:
            parser.add_argument('--size', type=int, default=None, help='Размер задачи (длина генотипа)')
        parser.add_argument('--topology', choices=NK_TOPOLOGIES, default='random', help='Соседство NK (default: random)')
        parser.add_argument('--seed', type=int, default=0, help='Корневое зерно (default: 0)')

    def add_criterion_arguments(self, parser):
        parser.add_argument('--runs', type=int, default=30, help='Прогонов на пробу (onemax/trap, default: 30)')
        parser.add_argument('--instances', type=int, default=25, help='Экземпляров NK (default: 25)')
        parser.add_argument('--runs-per-instance', type=int, default=5, help='Прогонов на экземпляр NK (default: 5)')
        parser.add_argument('--start', type=int, default=None,
                            help=f'Стартовый размер популяции (default: {conf.bisection_start()})')
        parser.add_argument('--cap', type=int, default=None,
                            help=f'Предел размера популяции (default: {conf.bisection_cap()})')

    def add_eda_arguments(self, parser):
        parser.add_argument('--max-generations', type=int, default=None, help='Предел числа поколений')
        parser.add_argument('--stagnation-limit', type=int, default=None, help='Поколений без улучшения до остановки')
        parser.add_argument('--verbose', action='store_true', help='Подробный вывод (DEBUG-логи алгоритмов)')

    def eda_options(self, options):
        return conf.eda_options(
            max_generations=options.get('max_generations'),
            stagnation_limit=options.get('stagnation_limit'),
        )

    # -- вывод ------------------------------------------------------------

    def configure_logging(self, verbose):
        # В обычном режиме глушим поток логов по поколениям и пробам
        level = logging.DEBUG if verbose else logging.WARNING
        logging.getLogger('eda').setLevel(level)
        logging.getLogger('experiments').setLevel(logging.DEBUG if verbose else logging.INFO)

    def banner(self, title):
        self.stdout.write(self.style.SUCCESS('=' * 60))
        self.stdout.write(self.style.SUCCESS(f'  {title}'))
        self.stdout.write(self.style.SUCCESS('=' * 60))

    # -- спецификация -----------------------------------------------------

    def build_spec(self, options, name, sizes, models, out=None):
        from experiments.specs import ExperimentSpec

        if not options.get('problem'):
            raise CommandError('укажите --problem')
        try:
            return ExperimentSpec(
                name=name,
                problem=options['problem'],
                sizes=sizes,
                models=models,
                k=options.get('k'),
                seed=options.get('seed') or 0,
                runs=options.get('runs', 30),
                instances=options.get('instances', 25),
                runs_per_instance=options.get('runs_per_instance', 5),
                out=out,
                start=options.get('start'),
                cap=options.get('cap'),
                topology=options.get('topology') or 'random',
            )
        except ValueError as exc:
            raise CommandError(str(exc))
