import numpy as np
from django.test import SimpleTestCase

from eda.bitstring import (
    Genome,
    Population,
    RandomSource,
    as_bit_matrix,
    derive_seed,
    hamming_distance,
    random_population,
)


class GenomeTest(SimpleTestCase):
    def test_from_string_and_back(self):
        genome = Genome.from_string('10110')
        self.assertEqual(genome.length, 5)
        self.assertEqual(str(genome), '10110')
        self.assertEqual(list(genome), [1, 0, 1, 1, 0])

    def test_rejects_non_binary_and_empty(self):
        with self.assertRaises(ValueError):
            Genome([0, 2, 1])
        with self.assertRaises(ValueError):
            Genome([])

    def test_bits_are_read_only(self):
        genome = Genome([1, 0, 1])
        with self.assertRaises(ValueError):
            genome.bits[0] = 0

    def test_equal_genomes_hash_equal(self):
        self.assertEqual(Genome([1, 0]), Genome(np.array([1, 0])))
        self.assertEqual(len({Genome([1, 0]), Genome([1, 0]), Genome([0, 1])}), 2)

    def test_hamming_distance(self):
        self.assertEqual(hamming_distance(Genome.from_string('1100'), Genome.from_string('1010')), 2)
        with self.assertRaises(ValueError):
            hamming_distance(Genome([1]), Genome([1, 0]))


class PopulationTest(SimpleTestCase):
    def test_union_keeps_order_and_fitness(self):
        a = Population(np.array([[1, 0], [0, 0]]), [1.0, 0.0])
        b = Population(np.array([[1, 1]]), [2.0])
        merged = a.union(b)
        self.assertEqual(merged.size, 3)
        self.assertEqual(merged.fitness.tolist(), [1.0, 0.0, 2.0])
        self.assertEqual(str(merged.best().genome), '11')

    def test_union_rejects_mixed_lengths_and_evaluation(self):
        a = Population(np.array([[1, 0]]), [1.0])
        with self.assertRaises(ValueError):
            a.union(Population(np.array([[1, 0, 1]]), [2.0]))
        with self.assertRaises(ValueError):
            a.union(Population(np.array([[1, 1]])))

    def test_fitness_shape_checked(self):
        with self.assertRaises(ValueError):
            Population(np.array([[1, 0], [0, 1]]), [1.0])

    def test_unevaluated_population_has_no_best(self):
        with self.assertRaises(ValueError):
            Population(np.array([[1, 0]])).best()

    def test_as_bit_matrix_accepts_genome_list(self):
        matrix = as_bit_matrix([Genome([1, 0, 1]), Genome([0, 0, 1])])
        self.assertEqual(matrix.shape, (2, 3))
        self.assertEqual(matrix.dtype, np.uint8)


class RandomSourceTest(SimpleTestCase):
    def test_same_seed_same_stream(self):
        a = RandomSource(42).bits((5, 8))
        b = RandomSource(42).bits((5, 8))
        np.testing.assert_array_equal(a, b)

    def test_long_streams_are_identical(self):
        for seed in (0, 1, 2024):
            np.testing.assert_array_equal(RandomSource(seed).uniform(10 ** 6), RandomSource(seed).uniform(10 ** 6))
            np.testing.assert_array_equal(RandomSource(seed).bits(10 ** 6), RandomSource(seed).bits(10 ** 6))
        self.assertFalse(np.array_equal(RandomSource(0).bits(10 ** 6), RandomSource(1).bits(10 ** 6)))

    def test_children_are_distinct_and_stable(self):
        root = RandomSource(7)
        self.assertEqual(root.child(3).seed, RandomSource(7).child(3).seed)
        self.assertNotEqual(root.child(0).seed, root.child(1).seed)
        self.assertEqual(root.child(2).seed, derive_seed(7, 2))

    def test_derive_seed_rejects_negative_index(self):
        with self.assertRaises(ValueError):
            derive_seed(1, -1)

    def test_random_population_shape(self):
        population = random_population(12, 10, RandomSource(1))
        self.assertEqual((population.size, population.length), (10, 12))
        self.assertFalse(population.evaluated)
        with self.assertRaises(ValueError):
            random_population(0, 10, RandomSource(1))

    def test_random_population_is_reproducible(self):
        a = random_population(4, 3, RandomSource(7))
        b = random_population(4, 3, RandomSource(7))
        self.assertEqual((a.size, a.length), (3, 4))
        np.testing.assert_array_equal(a.genomes, b.genomes)

    def test_random_population_bits_are_fair(self):
        for seed in range(5):
            ones = random_population(1, 10000, RandomSource(seed)).genomes.mean()
            self.assertGreaterEqual(ones, 0.47)
            self.assertLessEqual(ones, 0.53)
        with self.assertRaises(ValueError):
            random_population(5, 0, RandomSource(1))
