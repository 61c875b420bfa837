import numpy as np
from django.test import SimpleTestCase

from eda.bitstring import Population, RandomSource
from eda.selection import SelectionConfig, tournament_select


class TournamentSelectionTest(SimpleTestCase):
    def _population(self, fitness):
        size = len(fitness)
        genomes = (np.arange(size)[:, None] >> np.arange(8)) & 1
        return Population(genomes, fitness)

    def test_selects_half_by_default(self):
        parents = tournament_select(self._population(np.arange(10.0)), SelectionConfig(), RandomSource(1))
        self.assertEqual(parents.size, 5)

    def test_best_always_wins_worst_never_selected(self):
        population = self._population(np.arange(20.0))
        for seed in range(10):
            parents = tournament_select(population, SelectionConfig(), RandomSource(seed))
            self.assertIn(19.0, parents.fitness.tolist())
            self.assertNotIn(0.0, parents.fitness.tolist())

    def test_each_member_plays_once_per_pass(self):
        population = self._population(np.arange(16.0))
        parents = tournament_select(population, SelectionConfig(), RandomSource(3))
        self.assertEqual(len(set(parents.fitness.tolist())), parents.size)

    def test_larger_fraction_takes_extra_pass(self):
        parents = tournament_select(self._population(np.arange(8.0)), SelectionConfig(0.75), RandomSource(2))
        self.assertEqual(parents.size, 6)

    def test_reproducible(self):
        population = self._population(np.ones(12))
        a = tournament_select(population, SelectionConfig(), RandomSource(4))
        b = tournament_select(population, SelectionConfig(), RandomSource(4))
        np.testing.assert_array_equal(a.genomes, b.genomes)

    def test_rejects_odd_or_tiny_population(self):
        with self.assertRaises(ValueError):
            tournament_select(self._population(np.arange(5.0)), SelectionConfig(), RandomSource(1))
        with self.assertRaises(ValueError):
            tournament_select(self._population(np.arange(2.0)), SelectionConfig(), RandomSource(1))

    def test_config_validation(self):
        with self.assertRaises(ValueError):
            SelectionConfig(tournament_size=3)
        with self.assertRaises(ValueError):
            SelectionConfig(parent_fraction=0)
        with self.assertRaises(ValueError):
            SelectionConfig(parent_fraction=0.3).parent_count(5)

    def test_equal_fitness_selects_each_member_with_probability_one_half(self):
        size, repetitions = 100, 10000
        genomes = (np.arange(size)[:, None] >> np.arange(7)) & 1
        population = Population(genomes, np.ones(size))
        weights = 1 << np.arange(7)
        counts = np.zeros(size)
        rng = RandomSource(17)
        for _ in range(repetitions):
            parents = tournament_select(population, SelectionConfig(), rng)
            self.assertEqual(parents.size, 50)
            counts[parents.genomes.astype(np.int64) @ weights] += 1
        frequencies = counts / repetitions
        self.assertTrue((np.abs(frequencies - 0.5) <= 0.05).all(), frequencies.min())
