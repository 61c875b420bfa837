"""
Genome/population representation and the seeded randomness shared by every EDA module.

Genomes are stored byte-per-bit (uint8). A population keeps its genomes as one
(size, n) matrix so fitness evaluation, selection and model training stay vectorised.
"""
from dataclasses import dataclass
from typing import Iterable, List, Optional

import numpy as np

GENOME_DTYPE = np.uint8
_SEED_MASK = (1 << 64) - 1


def derive_seed(root_seed: int, index: int) -> int:
    """Child seed for run/probe/cell `index` of an experiment with `root_seed`."""
    if index < 0:
        raise ValueError(f'index должен быть >= 0, получено {index}')
    sequence = np.random.SeedSequence([int(root_seed) & _SEED_MASK, int(index)])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


class RandomSource:
    """
    Seeded random stream (PCG64).

    Same seed + same call sequence gives the same output stream. Never share one
    instance between concurrent runs: derive a child per run with `child()`.
    """

    __slots__ = ('seed', 'generator')

    def __init__(self, seed: int):
        self.seed = int(seed) & _SEED_MASK
        self.generator = np.random.Generator(np.random.PCG64(self.seed))

    def __repr__(self):
        return f'RandomSource(seed={self.seed})'

    def child(self, index: int) -> 'RandomSource':
        return RandomSource(derive_seed(self.seed, index))

    def uniform(self, size=None):
        return self.generator.random(size)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size=size)

    def normal(self, scale: float, size=None):
        return self.generator.normal(0.0, scale, size=size)

    def permutation(self, n: int) -> np.ndarray:
        return self.generator.permutation(n)

    def choice(self, values, size: int, replace: bool = False) -> np.ndarray:
        return self.generator.choice(values, size=size, replace=replace)

    def bits(self, shape) -> np.ndarray:
        return self.generator.integers(0, 2, size=shape, dtype=GENOME_DTYPE)


def as_bit_matrix(rows, length: Optional[int] = None) -> np.ndarray:
    """Coerce genomes / nested sequences / a matrix into a validated (rows, n) uint8 matrix."""
    if isinstance(rows, Population):
        return rows.genomes
    if isinstance(rows, np.ndarray):
        matrix = rows
    else:
        rows = list(rows)
        if rows and isinstance(rows[0], Genome):
            matrix = np.stack([g.bits for g in rows]) if rows else np.empty((0, 0))
        else:
            matrix = np.asarray(rows)
    if matrix.ndim == 1:
        matrix = matrix.reshape(1, -1)
    if matrix.ndim != 2:
        raise ValueError(f'ожидается матрица генотипов, получено ndim={matrix.ndim}')
    if matrix.size and not np.isin(matrix, (0, 1)).all():
        raise ValueError('генотип должен содержать только 0 и 1')
    if length is not None and matrix.shape[1] != length:
        raise ValueError(f'длина генотипа {matrix.shape[1]} != {length}')
    return matrix.astype(GENOME_DTYPE, copy=False)


class Genome:
    """Immutable fixed-length 0/1 decision vector."""

    __slots__ = ('_bits',)

    def __init__(self, bits: Iterable[int]):
        arr = np.array(list(bits) if not isinstance(bits, np.ndarray) else bits)
        arr = arr.ravel()
        if arr.size == 0:
            raise ValueError('длина генотипа должна быть >= 1')
        if not np.isin(arr, (0, 1)).all():
            raise ValueError('генотип должен содержать только 0 и 1')
        arr = arr.astype(GENOME_DTYPE)
        arr.setflags(write=False)
        self._bits = arr

    @classmethod
    def from_string(cls, text: str) -> 'Genome':
        return cls(int(ch) for ch in text.strip())

    @property
    def bits(self) -> np.ndarray:
        return self._bits

    @property
    def length(self) -> int:
        return int(self._bits.size)

    def __len__(self):
        return self.length

    def __iter__(self):
        return iter(int(b) for b in self._bits)

    def __getitem__(self, index):
        return int(self._bits[index])

    def __eq__(self, other):
        if not isinstance(other, Genome):
            return NotImplemented
        return self._bits.shape == other._bits.shape and bool(np.array_equal(self._bits, other._bits))

    def __hash__(self):
        return hash(self._bits.tobytes())

    def __lt__(self, other: 'Genome'):
        return str(self) < str(other)

    def __str__(self):
        return ''.join('1' if b else '0' for b in self._bits)

    def __repr__(self):
        return f"Genome('{self}')"


@dataclass(frozen=True)
class EvaluatedGenome:
    genome: Genome
    fitness: float


@dataclass(frozen=True, eq=False)
class Population:
    """
    Ordered multiset of genomes of one length, optionally with cached fitness.

    `genomes` is a read-only (size, n) uint8 matrix; `fitness` is None until the
    owning problem evaluates the population.
    """

    genomes: np.ndarray
    fitness: Optional[np.ndarray] = None

    def __post_init__(self):
        genomes = as_bit_matrix(self.genomes).copy()
        if genomes.shape[0] < 1:
            raise ValueError('популяция должна содержать хотя бы одного члена')
        if genomes.shape[1] < 1:
            raise ValueError('длина генотипа должна быть >= 1')
        genomes.setflags(write=False)
        object.__setattr__(self, 'genomes', genomes)

        if self.fitness is not None:
            fitness = np.asarray(self.fitness, dtype=np.float64).copy()
            if fitness.shape != (genomes.shape[0],):
                raise ValueError(
                    f'fitness shape {fitness.shape} не совпадает с размером популяции {genomes.shape[0]}'
                )
            fitness.setflags(write=False)
            object.__setattr__(self, 'fitness', fitness)

    @classmethod
    def from_genomes(cls, genomes: List[Genome], fitness=None) -> 'Population':
        return cls(as_bit_matrix(genomes), fitness)

    @property
    def size(self) -> int:
        return int(self.genomes.shape[0])

    @property
    def length(self) -> int:
        return int(self.genomes.shape[1])

    @property
    def evaluated(self) -> bool:
        return self.fitness is not None

    def __len__(self):
        return self.size

    def genome(self, index: int) -> Genome:
        return Genome(self.genomes[index])

    @property
    def members(self) -> List[EvaluatedGenome]:
        self._require_fitness()
        return [
            EvaluatedGenome(Genome(row), float(value))
            for row, value in zip(self.genomes, self.fitness)
        ]

    def evaluate(self, problem) -> 'Population':
        """Return a copy with fitness filled by `problem` (one invocation per member)."""
        return Population(self.genomes, problem.evaluate_many(self.genomes))

    def take(self, indices) -> 'Population':
        indices = np.asarray(indices, dtype=np.intp)
        fitness = None if self.fitness is None else self.fitness[indices]
        return Population(self.genomes[indices], fitness)

    def union(self, other: 'Population') -> 'Population':
        if other.length != self.length:
            raise ValueError(f'разная длина генотипов: {self.length} и {other.length}')
        if self.evaluated != other.evaluated:
            raise ValueError('нельзя объединить оценённую и неоценённую популяции')
        fitness = None
        if self.evaluated:
            fitness = np.concatenate([self.fitness, other.fitness])
        return Population(np.vstack([self.genomes, other.genomes]), fitness)

    def best_index(self) -> int:
        self._require_fitness()
        return int(np.argmax(self.fitness))

    def best(self) -> EvaluatedGenome:
        index = self.best_index()
        return EvaluatedGenome(self.genome(index), float(self.fitness[index]))

    def mean_fitness(self) -> float:
        self._require_fitness()
        return float(np.mean(self.fitness))

    def _require_fitness(self):
        if self.fitness is None:
            raise ValueError('популяция ещё не оценена')


def random_population(n: int, size: int, rng: RandomSource) -> Population:
    """Unevaluated population of `size` genomes of length `n`, each bit Bernoulli(0.5)."""
    if n < 1:
        raise ValueError(f'длина генотипа должна быть >= 1, получено n={n}')
    if size < 1:
        raise ValueError(f'размер популяции должен быть >= 1, получено size={size}')
    return Population(rng.bits((size, n)))


def hamming_distance(a: Genome, b: Genome) -> int:
    if a.length != b.length:
        raise ValueError(f'разная длина генотипов: {a.length} и {b.length}')
    return int(np.count_nonzero(a.bits != b.bits))
