"""
Management command: генерация и сохранение экземпляров NK-ландшафтов.

Использование:
    python manage.py gen_nk --N 20 --k 3 --count 25 --seed 7 --out results/nk20
    python manage.py gen_nk --N 16 --k 2 --topology adjacent --out /tmp/nk --optimum
"""
from pathlib import Path

from django.core.management.base import CommandError

from eda.problems import NK_TOPOLOGIES, generate_nk_instance_set, nk_brute_force_optimum, save_nk_instance

from ._base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Генерация экземпляров NK-ландшафтов в текстовые файлы'

    def add_arguments(self, parser):
        parser.add_argument('--N', type=int, required=True, help='Число переменных')
        parser.add_argument('--k', type=int, required=True, help='Число соседей каждой переменной')
        parser.add_argument('--count', type=int, default=1, help='Сколько экземпляров (default: 1)')
        parser.add_argument('--seed', type=int, default=0, help='Корневое зерно набора (default: 0)')
        parser.add_argument('--topology', choices=NK_TOPOLOGIES, default='random', help='Соседство (default: random)')
        parser.add_argument('--out', type=str, required=True, help='Каталог для файлов')
        parser.add_argument('--optimum', action='store_true', help='Посчитать оптимум полным перебором')

    def handle(self, *args, **options):
        try:
            instances = generate_nk_instance_set(
                options['N'], options['k'], options['count'], options['seed'], options['topology'],
            )
        except ValueError as exc:
            raise CommandError(str(exc))

        out_dir = Path(options['out'])
        out_dir.mkdir(parents=True, exist_ok=True)
        for index, instance in enumerate(instances):
            path = save_nk_instance(instance, out_dir / f'nk_N{instance.N}_k{instance.k}_{index:02d}.txt')
            line = f'  {path}'
            if options['optimum']:
                try:
                    genome, value = nk_brute_force_optimum(instance)
                except ValueError as exc:
                    raise CommandError(str(exc))
                line += f'  optimum={value:.10f} {genome}'
            self.stdout.write(line)
        self.stdout.write(self.style.SUCCESS(f'✅ Записано экземпляров: {len(instances)} в {out_dir}'))
