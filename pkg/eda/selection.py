"""Tournament selection without replacement, tournament size two."""
from dataclasses import dataclass

import numpy as np

from eda.bitstring import Population, RandomSource

TOURNAMENT_SIZE = 2


@dataclass(frozen=True)
class SelectionConfig:
    parent_fraction: float = 0.5
    tournament_size: int = TOURNAMENT_SIZE

    def __post_init__(self):
        if self.tournament_size != TOURNAMENT_SIZE:
            raise ValueError(f'поддерживаются только турниры размера {TOURNAMENT_SIZE}')
        if not 0 < self.parent_fraction <= 1:
            raise ValueError(f'parent_fraction должен лежать в (0, 1], получено {self.parent_fraction}')

    def parent_count(self, population_size: int) -> int:
        exact = self.parent_fraction * population_size
        count = int(round(exact))
        if abs(exact - count) > 1e-9:
            raise ValueError(
                f'parent_fraction={self.parent_fraction} не даёт целого числа родителей '
                f'для популяции {population_size}'
            )
        if count < 2:
            raise ValueError(f'нужно хотя бы 2 родителя, получено {count}')
        return count


def _tournament_pass(fitness: np.ndarray, rng: RandomSource) -> np.ndarray:
    """One pass: shuffle, pair neighbours, keep each pair's fitter member."""
    pairs = rng.permutation(fitness.size).reshape(-1, 2)
    first, second = pairs[:, 0], pairs[:, 1]
    # монетка тянется всегда, чтобы поток случайных чисел не зависел от ничьих
    coin = rng.uniform(len(pairs)) < 0.5
    f_first, f_second = fitness[first], fitness[second]
    return np.where(
        f_first > f_second, first,
        np.where(f_second > f_first, second, np.where(coin, first, second)),
    )


def tournament_select(population: Population, config: SelectionConfig, rng: RandomSource) -> Population:
    """
    Select `parent_fraction * |P|` parents.

    Each pass lets every member play exactly one tournament; fractions above 1/2 take
    further passes over fresh shuffles.
    """
    size = population.size
    if size < 4 or size % 2:
        raise ValueError(f'размер популяции должен быть чётным и >= 4, получено {size}')
    if not population.evaluated:
        raise ValueError('популяция ещё не оценена')
    count = config.parent_count(size)

    winners = []
    selected = 0
    while selected < count:
        batch = _tournament_pass(population.fitness, rng)
        winners.append(batch)
        selected += batch.size
    return population.take(np.concatenate(winners)[:count])
