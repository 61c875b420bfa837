"""Slow end-to-end checks of both models; run with `manage.py test --tag slow`."""
import itertools

import numpy as np
from django.test import SimpleTestCase, tag

from eda.bisection import STAGE_VERIFY, SuccessCriterion, bisect_population_size
from eda.bitstring import Population, RandomSource
from eda.boa import BayesianNetwork, ScoredDataset, bic_node_score, greedy_build_network, network_score, sample_network
from eda.problems import ConcatTrap, OneMax, generate_nk_instance_set
from eda.rbm import (
    Rbm,
    SampleConfig,
    exact_distribution,
    exact_visible_probabilities,
    sample_candidates,
)


@tag('slow')
class SolvingAcceptanceTest(SimpleTestCase):
    """Each cell is bisected and must end on a verification trial that passed every run."""

    def _assert_solved(self, problem, model_kind, criterion, seed):
        result = bisect_population_size(problem, model_kind, criterion, RandomSource(seed))
        final = result.probes[-1]
        self.assertEqual(final.stage, STAGE_VERIFY)
        self.assertTrue(final.passed)
        self.assertEqual(final.runs, criterion.total_runs)
        self.assertEqual(final.population_size, result.population_size)
        return result

    def test_rbm_onemax_50(self):
        self._assert_solved(OneMax(50), 'rbm', SuccessCriterion.all_runs(30), 701)

    def test_rbm_four_traps_32(self):
        self._assert_solved(ConcatTrap.of_length(32, 4), 'rbm', SuccessCriterion.all_runs(30), 702)

    def test_rbm_five_traps_25(self):
        self._assert_solved(ConcatTrap.of_length(25, 5), 'rbm', SuccessCriterion.all_runs(30), 703)

    def test_boa_onemax_50(self):
        self._assert_solved(OneMax(50), 'boa', SuccessCriterion.all_runs(30), 711)

    def test_boa_four_traps_32(self):
        self._assert_solved(ConcatTrap.of_length(32, 4), 'boa', SuccessCriterion.all_runs(30), 712)

    def test_boa_five_traps_25(self):
        self._assert_solved(ConcatTrap.of_length(25, 5), 'boa', SuccessCriterion.all_runs(30), 713)

    def test_nk_instances_both_models(self):
        instances = generate_nk_instance_set(20, 3, 10, root_seed=720)
        criterion = SuccessCriterion.per_instance(instances, 5)
        self.assertEqual(criterion.total_runs, 50)
        for offset, model_kind in enumerate(('rbm', 'boa')):
            with self.subTest(model_kind=model_kind):
                self._assert_solved(None, model_kind, criterion, 721 + offset)


@tag('slow')
class SamplerAcceptanceTest(SimpleTestCase):
    def test_gibbs_chain_matches_exact_distribution(self):
        rng = RandomSource(12)
        rbm = Rbm(rng.normal(0.8, (4, 2)), rng.normal(0.5, 4), rng.normal(0.5, 2))
        parents = Population(RandomSource(1).bits((64, 4)))
        samples = sample_candidates(rbm, parents, SampleConfig(count=10 ** 6, gibbs_steps=25), RandomSource(3))
        codes = samples.genomes.astype(np.int64) @ (1 << np.arange(3, -1, -1))
        empirical = np.bincount(codes, minlength=16) / samples.size
        self.assertLess(0.5 * np.abs(empirical - exact_visible_probabilities(rbm)).sum(), 0.02)

    def test_exactness_on_random_models(self):
        for seed in range(25):
            rng = RandomSource(seed)
            n, m = 2 + seed % 5, 1 + seed % 4
            self.assertLessEqual(n + m, 10)
            rbm = Rbm(rng.normal(0.5, (n, m)), rng.normal(0.5, n), rng.normal(0.5, m))
            self.assertAlmostEqual(sum(exact_distribution(rbm).values()), 1.0, places=12)


def _exhaustive_best_score(data, max_indegree=5):
    """Best BIC over every DAG on `data.n` nodes."""
    n = data.n
    options = []
    for i in range(n):
        others = [j for j in range(n) if j != i]
        node_options = [
            (bic_node_score(data, i, parents), parents)
            for r in range(min(len(others), max_indegree) + 1)
            for parents in itertools.combinations(others, r)
        ]
        options.append(node_options)
    best = -np.inf
    for combo in itertools.product(*options):
        score = sum(s for s, _ in combo)
        if score <= best:
            continue
        try:
            BayesianNetwork(n, tuple(parents for _, parents in combo))
        except ValueError:
            continue
        best = score
    return best


@tag('slow')
class GreedyStructureAcceptanceTest(SimpleTestCase):
    def test_greedy_matches_exhaustive_search_on_four_bits(self):
        matches = 0
        for seed in range(50):
            rng = RandomSource(seed)

            def child_table():
                return np.array([0.05 + 0.25 * rng.uniform(), 0.7 + 0.25 * rng.uniform()])

            # дерево 0 -> 1 -> {2, 3}
            generator = BayesianNetwork(4, ((), (0,), (1,), (1,)), cpts=(
                0.2 + 0.6 * rng.uniform(1), child_table(), child_table(), child_table(),
            ))
            data = ScoredDataset(sample_network(generator, 200, rng.child(1)).genomes)
            greedy = network_score(greedy_build_network(data), data)
            if greedy >= _exhaustive_best_score(data) - 1e-9:
                matches += 1
        self.assertGreaterEqual(matches, 45)
