"""
Fitness oracles: onemax, concatenated deceptive traps and NK landscapes.

All problems evaluate a whole (size, n) 0/1 matrix at once through `evaluate_many`;
`fitness(genome)` is the single-genome convenience wrapper.
"""
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np

from eda.bitstring import Genome, RandomSource, as_bit_matrix, derive_seed

logger = logging.getLogger(__name__)

NK_TOPOLOGIES = ('random', 'adjacent')
BRUTE_FORCE_MAX_N = 24
_ENUMERATION_CHUNK = 1 << 16


class Problem(ABC):
    """Fitness oracle over fixed-length binary genomes (maximisation)."""

    name = 'problem'

    @property
    @abstractmethod
    def length(self) -> int:
        ...

    @property
    @abstractmethod
    def optimum(self) -> float:
        """Known optimal fitness, used as the EDA target."""

    @abstractmethod
    def evaluate_many(self, genomes: np.ndarray) -> np.ndarray:
        ...

    def fitness(self, genome: Union[Genome, Sequence[int]]) -> float:
        bits = genome.bits if isinstance(genome, Genome) else genome
        return float(self.evaluate_many(as_bit_matrix(bits, self.length))[0])

    def _check(self, genomes) -> np.ndarray:
        return as_bit_matrix(genomes, self.length)


# ---------------------------------------------------------------------------
# onemax
# ---------------------------------------------------------------------------

def onemax_fitness(genome: Genome) -> float:
    return float(np.sum(genome.bits))


class OneMax(Problem):
    name = 'onemax'

    def __init__(self, length: int):
        if length < 1:
            raise ValueError(f'длина onemax должна быть >= 1, получено {length}')
        self._length = int(length)

    def __repr__(self):
        return f'OneMax(l={self._length})'

    @property
    def length(self) -> int:
        return self._length

    @property
    def optimum(self) -> float:
        return float(self._length)

    def evaluate_many(self, genomes) -> np.ndarray:
        return self._check(genomes).sum(axis=1, dtype=np.int64).astype(np.float64)


# ---------------------------------------------------------------------------
# concatenated traps
# ---------------------------------------------------------------------------

def trap_block_fitness(block: Sequence[int], k: int) -> float:
    """k if every bit is one, else k - (ones + 1)."""
    raw = block.bits if isinstance(block, Genome) else np.asarray(block).ravel()
    bits = as_bit_matrix(raw)
    if bits.shape[1] != k:
        raise ValueError(f'длина блока {bits.shape[1]} != k={k}')
    ones = int(bits.sum())
    return float(k if ones == k else k - (ones + 1))


def _trap_values(genomes: np.ndarray, k: int) -> np.ndarray:
    size, length = genomes.shape
    ones = genomes.reshape(size, length // k, k).sum(axis=2, dtype=np.int64)
    return np.where(ones == k, k, k - ones - 1).sum(axis=1).astype(np.float64)


def concat_trap_fitness(genome: Genome, k: int) -> float:
    if k < 1:
        raise ValueError(f'порядок ловушки должен быть >= 1, получено k={k}')
    if genome.length % k:
        raise ValueError(f'длина генотипа {genome.length} не делится на k={k}')
    return float(_trap_values(as_bit_matrix(genome.bits), k)[0])


class ConcatTrap(Problem):
    name = 'trap'

    def __init__(self, k: int, blocks: int):
        if k < 1 or blocks < 1:
            raise ValueError(f'нужны k >= 1 и o >= 1, получено k={k}, o={blocks}')
        self.k = int(k)
        self.blocks = int(blocks)

    @classmethod
    def of_length(cls, length: int, k: int) -> 'ConcatTrap':
        if k < 1 or length % k:
            raise ValueError(f'длина {length} не делится на k={k}')
        return cls(k, length // k)

    def __repr__(self):
        return f'ConcatTrap(k={self.k}, o={self.blocks})'

    @property
    def length(self) -> int:
        return self.k * self.blocks

    @property
    def optimum(self) -> float:
        return float(self.k * self.blocks)

    def evaluate_many(self, genomes) -> np.ndarray:
        return _trap_values(self._check(genomes), self.k)


# ---------------------------------------------------------------------------
# NK landscapes
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class NkLandscape(Problem):
    """
    N components, each a table over (x_i, x_n1, ..., x_nk).

    Table index is the big-endian integer of (x_i, x_n1, ..., x_nk); fitness is the
    mean of the N lookups and lies in [0, 1).
    """

    N: int
    k: int
    neighbors: Tuple[Tuple[int, ...], ...]
    tables: np.ndarray
    seed: int = 0

    name = 'nk'

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f'N должно быть >= 1, получено {self.N}')
        if not 0 <= self.k <= self.N - 1:
            raise ValueError(f'нужно 0 <= k <= N-1, получено N={self.N}, k={self.k}')
        neighbors = tuple(tuple(int(j) for j in row) for row in self.neighbors)
        if len(neighbors) != self.N:
            raise ValueError(f'ожидается {self.N} списков соседей, получено {len(neighbors)}')
        for i, row in enumerate(neighbors):
            if len(row) != self.k or len(set(row)) != self.k:
                raise ValueError(f'компонента {i}: нужно {self.k} различных соседей, получено {row}')
            if i in row or any(not 0 <= j < self.N for j in row):
                raise ValueError(f'компонента {i}: недопустимые соседи {row}')
        tables = np.array(self.tables, dtype=np.float64)
        if tables.shape != (self.N, 2 ** (self.k + 1)):
            raise ValueError(f'таблицы должны иметь форму {(self.N, 2 ** (self.k + 1))}, получено {tables.shape}')
        if ((tables < 0) | (tables >= 1)).any():
            raise ValueError('значения таблиц должны лежать в [0, 1)')
        tables.setflags(write=False)
        object.__setattr__(self, 'neighbors', neighbors)
        object.__setattr__(self, 'tables', tables)

    def __repr__(self):
        return f'NkLandscape(N={self.N}, k={self.k}, seed={self.seed})'

    @property
    def length(self) -> int:
        return self.N

    @cached_property
    def _members(self) -> np.ndarray:
        return np.column_stack([
            np.arange(self.N),
            np.array(self.neighbors, dtype=np.intp).reshape(self.N, self.k),
        ])

    @cached_property
    def _place_values(self) -> np.ndarray:
        return 1 << np.arange(self.k, -1, -1)

    def evaluate_many(self, genomes) -> np.ndarray:
        genomes = self._check(genomes).astype(np.intp)
        index = genomes[:, self._members] @ self._place_values
        return self.tables[np.arange(self.N), index].mean(axis=1)

    @cached_property
    def brute_force(self) -> Tuple[Genome, float]:
        return nk_brute_force_optimum(self)

    @property
    def optimum(self) -> float:
        return self.brute_force[1]


def nk_fitness(instance: NkLandscape, genome: Genome) -> float:
    if genome.length != instance.N:
        raise ValueError(f'длина генотипа {genome.length} != N={instance.N}')
    return instance.fitness(genome)


def _neighbors(N: int, k: int, rng: RandomSource, topology: str) -> List[Tuple[int, ...]]:
    if topology == 'adjacent':
        return [tuple((i + d) % N for d in range(1, k + 1)) for i in range(N)]
    rows = []
    for i in range(N):
        others = np.delete(np.arange(N), i)
        rows.append(tuple(int(j) for j in rng.choice(others, size=k, replace=False)))
    return rows


def generate_nk_instance(N: int, k: int, rng: RandomSource, topology: str = 'random') -> NkLandscape:
    """
    Random NK instance, a pure function of (N, k, rng.seed, topology).

    Only the seed of `rng` is used; its stream position does not matter.
    """
    if N < 1:
        raise ValueError(f'N должно быть >= 1, получено {N}')
    if not 0 <= k <= N - 1:
        raise ValueError(f'нужно 0 <= k <= N-1, получено N={N}, k={k}')
    if topology not in NK_TOPOLOGIES:
        raise ValueError(f'неизвестная топология соседей: {topology}')
    local = RandomSource(rng.seed)
    neighbors = _neighbors(N, k, local, topology)
    tables = local.uniform((N, 2 ** (k + 1)))
    return NkLandscape(N=N, k=k, neighbors=tuple(neighbors), tables=tables, seed=rng.seed)


def generate_nk_instance_set(N: int, k: int, count: int, root_seed: int,
                             topology: str = 'random') -> List[NkLandscape]:
    """Fixed per-study instance list: instance j uses the seed derived from (root_seed, j)."""
    if count < 1:
        raise ValueError(f'count должно быть >= 1, получено {count}')
    return [
        generate_nk_instance(N, k, RandomSource(derive_seed(root_seed, j)), topology)
        for j in range(count)
    ]


def nk_brute_force_optimum(instance: NkLandscape, max_n: int = BRUTE_FORCE_MAX_N) -> Tuple[Genome, float]:
    """Exhaustive argmax; ties go to the lexicographically smallest genome."""
    N = instance.N
    if N > max_n:
        raise ValueError(f'перебор ограничен N <= {max_n}, получено N={N}')
    shifts = np.arange(N - 1, -1, -1)
    best_value = -np.inf
    best_code = 0
    total = 1 << N
    for start in range(0, total, _ENUMERATION_CHUNK):
        codes = np.arange(start, min(start + _ENUMERATION_CHUNK, total), dtype=np.int64)
        genomes = ((codes[:, None] >> shifts) & 1).astype(np.uint8)
        values = instance.evaluate_many(genomes)
        index = int(np.argmax(values))
        # чанки идут по возрастанию кода: строгое ">" сохраняет наименьший генотип
        if values[index] > best_value:
            best_value = float(values[index])
            best_code = int(codes[index])
    genome = Genome((best_code >> shifts) & 1)
    logger.debug('NK N=%d k=%d seed=%d: оптимум %.6f', N, instance.k, instance.seed, best_value)
    return genome, best_value


# ---------------------------------------------------------------------------
# NK instance files
# ---------------------------------------------------------------------------

def dump_nk_instance(instance: NkLandscape) -> str:
    lines = [f'NK {instance.N} {instance.k} {instance.seed}']
    for i in range(instance.N):
        neighbors = ' '.join(str(j) for j in instance.neighbors[i])
        table = ' '.join(format(float(v), '.17g') for v in instance.tables[i])
        lines.append(f'{i}: {neighbors} : {table}')
    return '\n'.join(lines) + '\n'


def parse_nk_instance(text: str) -> NkLandscape:
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    if not lines:
        raise ValueError('пустой файл NK-инстанса')
    header = lines[0].split()
    if len(header) != 4 or header[0] != 'NK':
        raise ValueError(f'некорректный заголовок: {lines[0]!r}')
    N, k, seed = int(header[1]), int(header[2]), int(header[3])
    if len(lines) - 1 != N:
        raise ValueError(f'ожидается {N} строк компонент, получено {len(lines) - 1}')
    neighbors = []
    tables = []
    for expected, line in enumerate(lines[1:]):
        parts = line.split(':')
        if len(parts) != 3 or int(parts[0]) != expected:
            raise ValueError(f'некорректная строка компоненты: {line!r}')
        neighbors.append(tuple(int(j) for j in parts[1].split()))
        tables.append([float(v) for v in parts[2].split()])
    return NkLandscape(N=N, k=k, neighbors=tuple(neighbors), tables=np.array(tables), seed=seed)


def save_nk_instance(instance: NkLandscape, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_nk_instance(instance))
    return path


def load_nk_instance(path: Union[str, Path]) -> NkLandscape:
    return parse_nk_instance(Path(path).read_text())


# ---------------------------------------------------------------------------
# factory
# ---------------------------------------------------------------------------

PROBLEM_FAMILIES = ('onemax', 'trap', 'nk')


def build_problem(family: str, size: int, k: int = None, seed: int = 0,
                  topology: str = 'random') -> Problem:
    """Problem of the given family and size; for nk, `seed` selects the instance."""
    if family == 'onemax':
        return OneMax(size)
    if family == 'trap':
        if k is None:
            raise ValueError('для trap нужен параметр k')
        return ConcatTrap.of_length(size, k)
    if family == 'nk':
        if k is None:
            raise ValueError('для nk нужен параметр k')
        return generate_nk_instance(size, k, RandomSource(seed), topology)
    raise ValueError(f'неизвестное семейство задач: {family}')
