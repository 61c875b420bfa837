import math

import numpy as np
from django.test import SimpleTestCase

from eda.bitstring import Genome, Population, RandomSource
from eda.rbm import (
    STOP_CONVERGED,
    STOP_MAX_EPOCHS,
    STOP_OVERFITTING,
    Gradients,
    Rbm,
    RbmTrainer,
    SampleConfig,
    TrainConfig,
    TrainingSchedule,
    TrainState,
    apply_gradients,
    bernoulli_sample,
    cd1_minibatch_update,
    contrastive_divergence_gradients,
    dump_rbm,
    error_decrease_ratio,
    exact_distribution,
    exact_log_likelihood,
    exact_log_likelihood_gradient,
    hidden_activation_probs,
    init_rbm,
    overfitting_ratio,
    parse_rbm,
    reconstruction_error,
    sample_candidates,
    train,
    visible_activation_probs,
)


def _small_rbm(seed=0, n=3, m=2, scale=0.5):
    rng = RandomSource(seed)
    return Rbm(rng.normal(scale, (n, m)), rng.normal(scale, n), rng.normal(scale, m))


class ActivationTest(SimpleTestCase):
    def setUp(self):
        self.rbm = Rbm(np.array([[2.0, -1.0], [0.5, 0.0]]), [0.25, -0.5], [-1.0, 0.0])

    def test_hidden_probs_match_logistic(self):
        probs = hidden_activation_probs(self.rbm, [1, 0])
        self.assertAlmostEqual(probs[0], 1 / (1 + math.exp(-1.0)))
        self.assertAlmostEqual(probs[1], 1 / (1 + math.exp(1.0)))

    def test_visible_probs_match_logistic(self):
        probs = visible_activation_probs(self.rbm, [1, 1])
        self.assertAlmostEqual(probs[0], 1 / (1 + math.exp(-1.25)))
        self.assertAlmostEqual(probs[1], 1 / (1 + math.exp(-0.0)))

    def test_batch_and_genome_inputs(self):
        batch = hidden_activation_probs(self.rbm, np.array([[1, 0], [0, 1]]))
        self.assertEqual(batch.shape, (2, 2))
        np.testing.assert_allclose(batch[0], hidden_activation_probs(self.rbm, Genome([1, 0])))

    def test_visible_bias_alone_sets_marginal(self):
        rbm = Rbm(np.zeros((1, 1)), [math.log(3)], [0.0])
        self.assertAlmostEqual(visible_activation_probs(rbm, [0])[0], 0.75)
        self.assertAlmostEqual(exact_distribution(rbm)[Genome([1])], 0.75)

    def test_wrong_length_rejected(self):
        with self.assertRaises(ValueError):
            hidden_activation_probs(self.rbm, [1, 0, 1])

    def test_probabilities_stay_inside_open_interval(self):
        rbm = Rbm(np.zeros((1, 1)), [1000.0], [-1000.0])
        self.assertLess(visible_activation_probs(rbm, [0])[0], 1.0)
        self.assertGreater(hidden_activation_probs(rbm, [0])[0], 0.0)

    def test_bernoulli_rejects_bad_probabilities(self):
        with self.assertRaises(ValueError):
            bernoulli_sample([0.5, 1.5], RandomSource(1))


class RbmModelTest(SimpleTestCase):
    def test_shape_mismatch_rejected(self):
        with self.assertRaises(ValueError):
            Rbm(np.zeros((3, 2)), np.zeros(2), np.zeros(2))

    def test_non_finite_rejected(self):
        with self.assertRaises(ValueError):
            Rbm(np.array([[np.nan]]), [0.0], [0.0])

    def test_init_uses_marginal_log_odds(self):
        data = np.array([[1, 0, 1, 1]] * 3 + [[0, 0, 1, 1]])
        rbm = init_rbm(4, data, RandomSource(2))
        self.assertEqual((rbm.n_visible, rbm.n_hidden), (4, 2))
        self.assertAlmostEqual(rbm.visible_bias[0], math.log(0.75 / 0.25))
        # постоянные биты зажаты в [1/(2N), 1-1/(2N)]
        self.assertAlmostEqual(rbm.visible_bias[1], math.log((1 / 8) / (7 / 8)))
        self.assertAlmostEqual(rbm.visible_bias[2], math.log((7 / 8) / (1 / 8)))
        self.assertTrue((rbm.hidden_bias == 0).all())
        self.assertLess(np.abs(rbm.weights).max(), 0.1)

    def test_hidden_count_rounds_up(self):
        rbm = init_rbm(5, np.ones((4, 5)), RandomSource(1))
        self.assertEqual(rbm.n_hidden, 3)

    def test_snapshot_round_trip_is_exact(self):
        rbm = _small_rbm(4)
        restored = parse_rbm(dump_rbm(rbm))
        np.testing.assert_array_equal(restored.weights, rbm.weights)
        np.testing.assert_array_equal(restored.visible_bias, rbm.visible_bias)
        np.testing.assert_array_equal(restored.hidden_bias, rbm.hidden_bias)

    def test_truncated_snapshot_rejected(self):
        text = dump_rbm(_small_rbm(4)).splitlines()
        with self.assertRaises(ValueError):
            parse_rbm('\n'.join(text[:-1]))


class ExactOracleTest(SimpleTestCase):
    def test_distribution_sums_to_one(self):
        distribution = exact_distribution(_small_rbm(1, n=4, m=3))
        self.assertEqual(len(distribution), 16)
        self.assertAlmostEqual(sum(distribution.values()), 1.0)

    def test_zero_model_is_uniform(self):
        distribution = exact_distribution(Rbm.zeros(3, 2))
        for p in distribution.values():
            self.assertAlmostEqual(p, 1 / 8)

    def test_gradient_matches_finite_differences(self):
        eps = 1e-5
        for i in range(25):
            rng = RandomSource(100 + i)
            n, m = 2 + i % 5, 1 + i % 4
            rbm = Rbm(rng.normal(0.5, (n, m)), rng.normal(0.5, n), rng.normal(0.5, m))
            data = rng.bits((8, n))
            gradient = exact_log_likelihood_gradient(rbm, data)
            for name in ('weights', 'visible_bias', 'hidden_bias'):
                analytic = getattr(gradient, name)
                params = getattr(rbm, name)
                for index in np.ndindex(params.shape):
                    original = params[index]
                    params[index] = original + eps
                    up = exact_log_likelihood(rbm, data)
                    params[index] = original - eps
                    down = exact_log_likelihood(rbm, data)
                    params[index] = original
                    self.assertLess(abs(analytic[index] - (up - down) / (2 * eps)), 1e-6, (i, name, index))

    def test_single_unit_gradient_on_all_ones(self):
        gradient = exact_log_likelihood_gradient(Rbm.zeros(1, 1), np.array([[1]]))
        self.assertAlmostEqual(gradient.weights[0, 0], 0.25)
        self.assertAlmostEqual(gradient.visible_bias[0], 0.5)
        self.assertAlmostEqual(gradient.hidden_bias[0], 0.0)

    def test_too_large_for_enumeration(self):
        with self.assertRaises(ValueError):
            exact_distribution(Rbm.zeros(20, 10))


class CdUpdateTest(SimpleTestCase):
    def test_momentum_accumulates_velocity(self):
        config = TrainConfig()
        rbm = Rbm.zeros(2, 1)
        state = TrainState.for_model(rbm, config)
        g = Gradients(np.array([[0.2], [-0.4]]), np.array([0.1, 0.0]), np.array([0.3]))
        apply_gradients(rbm, state, g, config)
        after_first = rbm.weights.copy()
        apply_gradients(rbm, state, g, config)
        np.testing.assert_allclose(rbm.weights - after_first, config.alpha_weights * 1.5 * g.weights)
        np.testing.assert_allclose(rbm.hidden_bias, config.alpha_biases * 2.5 * g.hidden_bias)
        self.assertEqual(state.updates, 2)

    def test_weight_decay_only_on_weights(self):
        config = TrainConfig(weight_cost=0.5)
        rbm = Rbm(np.full((2, 2), 4.0), [3.0, 3.0], [3.0, 3.0])
        plain = TrainConfig(weight_cost=0.0)
        data = np.array([[1, 0], [0, 1], [1, 1]])
        with_decay = contrastive_divergence_gradients(rbm, data, config, RandomSource(5))
        without = contrastive_divergence_gradients(rbm, data, plain, RandomSource(5))
        np.testing.assert_allclose(without.weights - with_decay.weights, 0.5 * rbm.weights)
        np.testing.assert_array_equal(with_decay.visible_bias, without.visible_bias)

    def test_minibatch_update_moves_parameters_in_place(self):
        config = TrainConfig()
        data = np.array([[1, 1, 0], [1, 0, 0], [1, 1, 1], [0, 1, 0]])
        results = []
        for _ in range(2):
            rbm = _small_rbm(3)
            before = rbm.weights.copy()
            state = TrainState.for_model(rbm, config)
            updated, new_state = cd1_minibatch_update(rbm, state, data, config, RandomSource(9))
            self.assertIs(updated, rbm)
            self.assertIs(new_state, state)
            self.assertEqual(state.updates, 1)
            self.assertFalse(np.allclose(rbm.weights, before))
            results.append(rbm.weights.copy())
        np.testing.assert_array_equal(results[0], results[1])

    def test_sampled_positive_phase_is_unbiased(self):
        rbm = _small_rbm(4)
        v = np.array([1.0, 0.0, 1.0])
        probs = hidden_activation_probs(rbm, v)
        draws = 100000
        hidden = bernoulli_sample(np.tile(probs, (draws, 1)), RandomSource(11))
        empirical = np.outer(v, hidden.mean(axis=0))
        expected = np.outer(v, probs)
        stderr = np.outer(v, np.sqrt(probs * (1 - probs) / draws))
        self.assertTrue((np.abs(empirical - expected) <= 3.5 * stderr).all())

    def test_weight_decay_alone_shrinks_weights_monotonically(self):
        config = TrainConfig(weight_cost=0.5)
        plain = TrainConfig(weight_cost=0.0)
        rbm = _small_rbm(6, n=4, m=3, scale=1.0)
        state = TrainState.for_model(rbm, config)
        data = np.array([[1, 0, 1, 1], [0, 1, 1, 0]])
        zeros_v, zeros_h = np.zeros(4), np.zeros(3)
        previous = np.abs(rbm.weights)
        for step in range(40):
            with_decay = contrastive_divergence_gradients(rbm, data, config, RandomSource(step))
            without = contrastive_divergence_gradients(rbm, data, plain, RandomSource(step))
            apply_gradients(rbm, state, Gradients(with_decay.weights - without.weights, zeros_v, zeros_h), config)
            current = np.abs(rbm.weights)
            self.assertTrue((current < previous).all(), step)
            previous = current

    def test_reconstruction_error_of_zero_model_is_one_half(self):
        data = RandomSource(3).bits((2000, 10))
        self.assertAlmostEqual(reconstruction_error(Rbm.zeros(10, 5), data, RandomSource(4)), 0.5, delta=0.02)
        self.assertEqual(reconstruction_error(Rbm.zeros(10, 5), data, mean_field=True), 0.5)

    def test_mean_field_error_is_deterministic(self):
        rbm = _small_rbm(7, n=5, m=3)
        data = RandomSource(8).bits((30, 5))
        self.assertEqual(
            reconstruction_error(rbm, data, RandomSource(1), mean_field=True),
            reconstruction_error(rbm, data, RandomSource(2), mean_field=True),
        )
        with self.assertRaises(ValueError):
            reconstruction_error(rbm, data)

    def test_reconstruction_error_range(self):
        error = reconstruction_error(_small_rbm(2), np.array([[1, 0, 1], [0, 0, 0]]), RandomSource(1))
        self.assertGreaterEqual(error, 0.0)
        self.assertLessEqual(error, 1.0)


class ScheduleTest(SimpleTestCase):
    def _schedule(self):
        config = TrainConfig()
        return TrainingSchedule(config, TrainState.for_model(Rbm.zeros(2, 1), config))

    def _feed(self, schedule, errors):
        stop = False
        for epoch, error in errors:
            stop = schedule.record(epoch, error, error)
        return stop

    def test_moderate_slowdown_raises_momentum_only(self):
        schedule = self._schedule()
        stop = self._feed(schedule, [(0, 0.5), (2, 0.3), (4, 0.2), (6, 0.13), (8, 0.1)])
        self.assertFalse(stop)
        self.assertAlmostEqual(schedule.state.gamma, 0.075)
        self.assertEqual(schedule.state.momentum, 0.8)
        self.assertEqual(schedule.state.alpha_weights, 0.05)

    def test_strong_slowdown_reduces_alpha(self):
        schedule = self._schedule()
        stop = self._feed(schedule, [(0, 0.5), (2, 0.3), (4, 0.2), (6, 0.108), (8, 0.1)])
        self.assertFalse(stop)
        self.assertEqual(schedule.state.momentum, 0.8)
        self.assertEqual(schedule.state.alpha_weights, 0.025)

    def test_plateau_stops_as_converged(self):
        schedule = self._schedule()
        stop = self._feed(schedule, [(0, 0.5), (2, 0.3), (4, 0.2), (6, 0.102), (8, 0.1)])
        self.assertTrue(stop)
        self.assertEqual(schedule.state.stop_reason, STOP_CONVERGED)

    def test_no_decisions_before_minimum_epoch(self):
        schedule = self._schedule()
        stop = self._feed(schedule, [(0, 0.5), (2, 0.5), (4, 0.5), (6, 0.5)])
        self.assertFalse(stop)
        self.assertIsNone(schedule.state.gamma)
        self.assertEqual(schedule.state.momentum, 0.5)

    def test_validation_gap_stops_as_overfitting(self):
        schedule = self._schedule()
        self._feed(schedule, [(0, 0.5), (2, 0.3), (4, 0.2), (6, 0.15)])
        self.assertTrue(schedule.record(8, 0.1, 0.13))
        self.assertEqual(schedule.state.stop_reason, STOP_OVERFITTING)

    def test_rising_error_is_not_convergence(self):
        schedule = self._schedule()
        stop = self._feed(schedule, [(0, 0.5), (2, 0.3), (4, 0.2), (6, 0.1), (8, 0.12)])
        self.assertFalse(stop)
        self.assertLess(schedule.state.gamma, 0)
        self.assertIsNone(schedule.state.stop_reason)

    def test_constant_validation_offset_is_not_overfitting(self):
        schedule = self._schedule()
        stop = False
        for epoch, error in [(0, 0.5), (2, 0.3), (4, 0.2), (6, 0.15), (8, 0.1)]:
            stop = schedule.record(epoch, error, 1.1 * error)
        self.assertFalse(stop)
        self.assertAlmostEqual(schedule.state.baseline_gap, 0.1 / 1.1)

    def test_literal_gap_stops_on_constant_offset(self):
        config = TrainConfig(overfit_baseline=False)
        schedule = TrainingSchedule(config, TrainState.for_model(Rbm.zeros(2, 1), config))
        stop = False
        for epoch, error in [(0, 0.5), (2, 0.3), (4, 0.2), (6, 0.15), (8, 0.1)]:
            stop = schedule.record(epoch, error, 1.1 * error)
        self.assertTrue(stop)
        self.assertEqual(schedule.state.stop_reason, STOP_OVERFITTING)

    def test_validation_better_than_training_keeps_going(self):
        schedule = self._schedule()
        stop = False
        for epoch, error in [(0, 0.5), (2, 0.3), (4, 0.2), (6, 0.15), (8, 0.1)]:
            stop = schedule.record(epoch, error, 0.8 * error)
        self.assertFalse(stop)

    def test_gap_uses_whole_training_split(self):
        schedule = self._schedule()
        self._feed(schedule, [(0, 0.5), (2, 0.3), (4, 0.2), (6, 0.15)])
        # ошибка на контрольном подмножестве равна валидационной, но весь S заметно лучше
        self.assertTrue(schedule.record(8, 0.1, 0.1, fit_error=0.09))
        self.assertEqual(schedule.state.stop_reason, STOP_OVERFITTING)
        self.assertEqual(schedule.state.fit_errors[-1], (8, 0.09))

    def test_overfitting_ratio(self):
        self.assertAlmostEqual(overfitting_ratio(0.1, 0.13), 0.2307692, places=6)
        self.assertEqual(overfitting_ratio(0.0, 0.0), 0.0)
        self.assertEqual(overfitting_ratio(0.1, 0.0), math.inf)

    def test_gamma_uses_three_quarter_point(self):
        history = [(0, 0.4), (6, 0.11), (8, 0.10)]
        self.assertAlmostEqual(error_decrease_ratio(history, 8), 0.01 / 0.30)

    def test_flat_history_gives_zero_gamma(self):
        self.assertEqual(error_decrease_ratio([(0, 0.3), (2, 0.3), (4, 0.3)], 4), 0.0)
        with self.assertRaises(ValueError):
            error_decrease_ratio([], 4)


class TrainerTest(SimpleTestCase):
    def _data(self, seed=0, rows=60):
        rng = RandomSource(seed)
        half = rng.bits((rows, 3))
        # вторая половина копирует первую: сильная попарная зависимость
        return np.hstack([half, half])

    def test_training_is_reproducible(self):
        config = TrainConfig(max_epochs=20)
        data = self._data()
        rbm = init_rbm(6, data, RandomSource(1))
        a = train(rbm, data, config, RandomSource(9))
        b = train(rbm, data, config, RandomSource(9))
        np.testing.assert_array_equal(a.weights, b.weights)

    def test_fit_records_state_and_leaves_input_untouched(self):
        config = TrainConfig(max_epochs=10)
        data = self._data(1)
        rbm = init_rbm(6, data, RandomSource(1))
        before = rbm.weights.copy()
        trainer = RbmTrainer(config, RandomSource(3))
        trained = trainer.fit(rbm, data)
        np.testing.assert_array_equal(rbm.weights, before)
        self.assertFalse(np.array_equal(trained.weights, before))
        state = trainer.state
        self.assertIn(state.stop_reason, (STOP_CONVERGED, STOP_OVERFITTING, STOP_MAX_EPOCHS))
        self.assertLessEqual(state.epoch, 10)
        self.assertEqual(state.train_errors[0][0], 0)
        self.assertEqual(len(state.probe_indices), 54)

    def test_max_epochs_reached(self):
        config = TrainConfig(max_epochs=3, check_interval=2)
        data = self._data(2)
        trainer = RbmTrainer(config, RandomSource(4))
        trainer.fit(init_rbm(6, data, RandomSource(1)), data)
        self.assertEqual(trainer.state.stop_reason, STOP_MAX_EPOCHS)
        self.assertEqual(trainer.state.epoch, 3)

    def test_identical_vectors_converge(self):
        pattern = np.array([1, 0, 1, 1, 0, 0, 1, 0, 1, 1, 1, 0, 0, 1, 0, 1], dtype=np.uint8)
        data = np.tile(pattern, (200, 1))
        config = TrainConfig()
        trainer = RbmTrainer(config, RandomSource(12))
        trained = trainer.fit(Rbm.zeros(16, 8), data)
        state = trainer.state
        self.assertEqual(state.stop_reason, STOP_CONVERGED)
        self.assertLess(state.epoch, config.max_epochs)
        self.assertLess(reconstruction_error(trained, data, mean_field=True), 0.05)

    def test_two_clusters_lower_reconstruction_error(self):
        rng = RandomSource(21)
        centre = rng.bits(16)
        labels = rng.bits((200, 1))
        noise = (rng.uniform((200, 16)) < 0.05).astype(np.uint8)
        data = np.where(labels == 1, centre, 1 - centre).astype(np.uint8) ^ noise
        config = TrainConfig()
        rbm = init_rbm(16, data, RandomSource(2))
        before = reconstruction_error(rbm, data, mean_field=True)
        state = TrainState.for_model(rbm, config)
        update_rng = RandomSource(3)
        for _ in range(150):
            order = update_rng.permutation(200)
            for start in range(0, 200, config.batch_size):
                cd1_minibatch_update(rbm, state, data[order[start:start + config.batch_size]], config, update_rng)
        after = reconstruction_error(rbm, data, mean_field=True)
        self.assertGreater(before, 0.4)
        self.assertLess(after, before - 0.1)

    def test_fit_errors_cover_every_check(self):
        config = TrainConfig(max_epochs=6, check_interval=2)
        data = self._data(4)
        trainer = RbmTrainer(config, RandomSource(5))
        trainer.fit(init_rbm(6, data, RandomSource(1)), data)
        state = trainer.state
        self.assertEqual([epoch for epoch, _ in state.fit_errors], [0, 2, 4, 6])
        self.assertEqual(len(state.fit_errors), len(state.validation_errors))
        self.assertIsNotNone(state.baseline_gap)

    def test_too_few_vectors(self):
        data = self._data(rows=10)
        with self.assertRaises(ValueError):
            train(init_rbm(6, data, RandomSource(1)), data, TrainConfig(), RandomSource(1))


class SamplingTest(SimpleTestCase):
    def test_strong_visible_bias_gives_all_ones(self):
        rbm = Rbm(np.zeros((8, 4)), np.full(8, 20.0), np.zeros(4))
        parents = Population(np.zeros((5, 8), dtype=np.uint8))
        candidates = sample_candidates(rbm, parents, SampleConfig(count=50, gibbs_steps=3), RandomSource(1))
        self.assertEqual(candidates.size, 50)
        self.assertTrue((candidates.genomes == 1).all())

    def test_reproducible_and_validated(self):
        rbm = _small_rbm(5, n=4, m=2)
        parents = Population(RandomSource(2).bits((6, 4)))
        a = sample_candidates(rbm, parents, SampleConfig(count=10), RandomSource(8))
        b = sample_candidates(rbm, parents, SampleConfig(count=10), RandomSource(8))
        np.testing.assert_array_equal(a.genomes, b.genomes)
        with self.assertRaises(ValueError):
            sample_candidates(rbm, parents, SampleConfig(count=0), RandomSource(8))
        with self.assertRaises(ValueError):
            sample_candidates(_small_rbm(5, n=3), parents, SampleConfig(count=4), RandomSource(8))

    def test_zero_model_samples_fair_bits(self):
        parents = Population(RandomSource(3).bits((10, 10)))
        candidates = sample_candidates(Rbm.zeros(10, 5), parents, SampleConfig(count=10000), RandomSource(4))
        self.assertEqual(candidates.genomes.size, 100000)
        self.assertAlmostEqual(float(candidates.genomes.mean()), 0.5, delta=0.01)
