"""
Описание эксперимента (ExperimentSpec) и загрузка конфигурационных файлов.

Формат файла: секции `[name]` со строками `key = value`:

    [trap5]
    problem = trap
    k = 5
    sizes = 20,30,40,50
    models = rbm,boa
    seed = 7
    out = results/trap5
"""
import configparser
import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from eda.bisection import SuccessCriterion
from eda.bitstring import derive_seed
from eda.engine import MODEL_KINDS
from eda.problems import NK_TOPOLOGIES, PROBLEM_FAMILIES, Problem, build_problem, generate_nk_instance_set

SPEC_KEYS = (
    'problem', 'k', 'sizes', 'models', 'seed', 'runs', 'instances',
    'runs_per_instance', 'out', 'start', 'cap', 'topology',
)
_MAX_SEED = (1 << 63) - 1
_CELL_SEED_OFFSET = 1 << 20


def parse_int_list(text: Union[str, Sequence[int]]) -> Tuple[int, ...]:
    if isinstance(text, str):
        items = [item.strip() for item in text.split(',') if item.strip()]
        try:
            return tuple(int(item) for item in items)
        except ValueError:
            raise ValueError(f'ожидается список целых через запятую, получено {text!r}')
    return tuple(int(item) for item in text)


def parse_name_list(text: Union[str, Sequence[str]]) -> Tuple[str, ...]:
    if isinstance(text, str):
        return tuple(item.strip() for item in text.split(',') if item.strip())
    return tuple(text)


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    problem: str
    sizes: Tuple[int, ...]
    models: Tuple[str, ...] = MODEL_KINDS
    k: Optional[int] = None
    seed: int = 0
    runs: int = 30
    instances: int = 25
    runs_per_instance: int = 5
    out: Optional[str] = None
    start: Optional[int] = None
    cap: Optional[int] = None
    topology: str = 'random'

    def __post_init__(self):
        object.__setattr__(self, 'sizes', parse_int_list(self.sizes))
        object.__setattr__(self, 'models', parse_name_list(self.models))
        if self.problem not in PROBLEM_FAMILIES:
            raise ValueError(f'неизвестное семейство задач {self.problem!r}, допустимо: {PROBLEM_FAMILIES}')
        if not self.sizes:
            raise ValueError('список размеров пуст')
        if any(b <= a for a, b in zip(self.sizes, self.sizes[1:])):
            raise ValueError(f'размеры должны строго возрастать: {self.sizes}')
        if not self.models:
            raise ValueError('список моделей пуст')
        unknown = [m for m in self.models if m not in MODEL_KINDS]
        if unknown:
            raise ValueError(f'неизвестные модели {unknown}, допустимо: {MODEL_KINDS}')
        if len(set(self.models)) != len(self.models):
            raise ValueError(f'модели повторяются: {self.models}')
        if self.problem in ('trap', 'nk') and self.k is None:
            raise ValueError(f'для {self.problem} нужен параметр k')
        if self.problem == 'trap':
            bad = [size for size in self.sizes if size % self.k]
            if bad:
                raise ValueError(f'размеры {bad} не делятся на k={self.k}')
        if self.problem == 'nk':
            bad = [size for size in self.sizes if not 0 <= self.k < size]
            if bad:
                raise ValueError(f'для размеров {bad} нарушено 0 <= k < N (k={self.k})')
        if self.topology not in NK_TOPOLOGIES:
            raise ValueError(f'неизвестная топология {self.topology!r}')
        if min(self.runs, self.instances, self.runs_per_instance) < 1:
            raise ValueError('runs, instances и runs_per_instance должны быть >= 1')
        if not 0 <= self.seed <= _MAX_SEED:
            raise ValueError(f'seed должен лежать в [0, 2^63), получено {self.seed}')
        if self.sizes[0] < 1:
            raise ValueError(f'размер задачи должен быть >= 1, получено {self.sizes[0]}')

    @classmethod
    def from_dict(cls, data: Dict) -> 'ExperimentSpec':
        data = dict(data)
        unknown = set(data) - set(f.name for f in cls.__dataclass_fields__.values())
        if unknown:
            raise ValueError(f'неизвестные ключи спецификации: {sorted(unknown)}')
        return cls(**data)

    def to_dict(self) -> Dict:
        data = asdict(self)
        data['sizes'] = list(self.sizes)
        data['models'] = list(self.models)
        return data

    @property
    def spec_hash(self) -> str:
        """Stable provenance hash; the output directory does not affect it."""
        payload = self.to_dict()
        payload.pop('out', None)
        payload.pop('name', None)
        canonical = json.dumps(payload, sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()[:16]

    def cells(self) -> List[Tuple[int, str, int]]:
        """(cell index, model, size) in model-major order."""
        return [
            (index, model, size)
            for index, (model, size) in enumerate((m, s) for m in self.models for s in self.sizes)
        ]

    def cell_seed(self, model: str, size: int) -> int:
        """Seed of one (model, size) cell; independent of which other cells the sweep has."""
        return derive_seed(derive_seed(self.seed, _CELL_SEED_OFFSET + MODEL_KINDS.index(model)), size)

    def problem_seed(self, size: int) -> int:
        """Seed of the problem instances at `size`; shared by every model."""
        return derive_seed(self.seed, size)

    def problem_for(self, size: int) -> Optional[Problem]:
        if self.problem == 'nk':
            return None
        return build_problem(self.problem, size, self.k)

    def criterion_for(self, size: int) -> SuccessCriterion:
        if self.problem == 'nk':
            instances = generate_nk_instance_set(size, self.k, self.instances, self.problem_seed(size), self.topology)
            return SuccessCriterion.per_instance(instances, self.runs_per_instance)
        return SuccessCriterion.all_runs(self.runs)


def _section_to_spec(name: str, section: configparser.SectionProxy) -> ExperimentSpec:
    unknown = set(section.keys()) - set(SPEC_KEYS)
    if unknown:
        raise ValueError(f'[{name}]: неизвестные ключи {sorted(unknown)}')
    if 'problem' not in section or 'sizes' not in section:
        raise ValueError(f'[{name}]: обязательны ключи problem и sizes')

    def _int(key):
        return section.getint(key) if key in section else None

    data = {
        'name': name,
        'problem': section['problem'].strip(),
        'sizes': parse_int_list(section['sizes']),
        'models': parse_name_list(section.get('models', ','.join(MODEL_KINDS))),
        'k': _int('k'),
        'seed': _int('seed') or 0,
        'out': section.get('out'),
        'start': _int('start'),
        'cap': _int('cap'),
        'topology': section.get('topology', 'random').strip(),
    }
    for key in ('runs', 'instances', 'runs_per_instance'):
        if key in section:
            data[key] = section.getint(key)
    return ExperimentSpec(**data)


def parse_specs(text: str, source: str = '<string>') -> List[ExperimentSpec]:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ValueError(f'{source}: {exc}')
    if not parser.sections():
        raise ValueError(f'{source}: нет ни одной секции [experiment]')
    return [_section_to_spec(name, parser[name]) for name in parser.sections()]


def load_specs(path: Union[str, Path]) -> List[ExperimentSpec]:
    path = Path(path)
    return parse_specs(path.read_text(encoding='utf-8'), source=str(path))
