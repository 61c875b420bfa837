"""
Restricted Boltzmann machine over binary visible/hidden units.

Covers construction, CD-k training with the self-adaptive schedule (momentum, learning
rate and stopping driven by the reconstruction error), Gibbs sampling of candidates and
exact enumeration oracles for small models.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.special import expit, logsumexp

from eda.bitstring import GENOME_DTYPE, Genome, Population, RandomSource, as_bit_matrix

logger = logging.getLogger(__name__)

_PROB_EPS = 1e-12
EXACT_MAX_UNITS = 24

STOP_CONVERGED = 'converged'
STOP_OVERFITTING = 'overfitting'
STOP_MAX_EPOCHS = 'max_epochs'


def sigmoid(x):
    """Logistic function, kept strictly inside (0, 1)."""
    return np.clip(expit(x), _PROB_EPS, 1.0 - _PROB_EPS)


@dataclass(eq=False)
class Rbm:
    """weights[i, j] connects visible unit i to hidden unit j."""

    weights: np.ndarray
    visible_bias: np.ndarray
    hidden_bias: np.ndarray

    def __post_init__(self):
        self.weights = np.array(self.weights, dtype=np.float64, ndmin=2)
        self.visible_bias = np.array(self.visible_bias, dtype=np.float64).ravel()
        self.hidden_bias = np.array(self.hidden_bias, dtype=np.float64).ravel()
        n, m = self.weights.shape
        if self.visible_bias.shape != (n,) or self.hidden_bias.shape != (m,):
            raise ValueError(
                f'формы параметров не согласованы: W {self.weights.shape}, '
                f'b_v {self.visible_bias.shape}, b_h {self.hidden_bias.shape}'
            )
        if not (np.isfinite(self.weights).all() and np.isfinite(self.visible_bias).all()
                and np.isfinite(self.hidden_bias).all()):
            raise ValueError('параметры RBM должны быть конечными')

    @classmethod
    def zeros(cls, n: int, m: int) -> 'Rbm':
        return cls(np.zeros((n, m)), np.zeros(n), np.zeros(m))

    @property
    def n_visible(self) -> int:
        return int(self.weights.shape[0])

    @property
    def n_hidden(self) -> int:
        return int(self.weights.shape[1])

    def copy(self) -> 'Rbm':
        return Rbm(self.weights.copy(), self.visible_bias.copy(), self.hidden_bias.copy())


@dataclass(eq=False)
class Gradients:
    weights: np.ndarray
    visible_bias: np.ndarray
    hidden_bias: np.ndarray

    def max_abs(self) -> float:
        return float(max(np.abs(self.weights).max(initial=0.0),
                         np.abs(self.visible_bias).max(initial=0.0),
                         np.abs(self.hidden_bias).max(initial=0.0)))


@dataclass(frozen=True)
class TrainConfig:
    alpha_weights: float = 0.05
    alpha_biases: float = 0.5
    alpha_weights_reduced: float = 0.025
    momentum_initial: float = 0.5
    momentum_raised: float = 0.8
    weight_cost: float = 0.0001
    batch_size: int = 100
    gibbs_steps_cd: int = 1
    validation_fraction: float = 0.10
    check_interval: int = 2
    gamma_momentum_threshold: float = 0.1
    gamma_alpha_threshold: float = 0.05
    gamma_stop_threshold: float = 0.01
    overfit_threshold: float = 0.02
    max_epochs: int = 5000
    # до этой эпохи индекс 0.75t в истории ошибок бессмысленен
    min_schedule_epoch: int = 8
    probe_size: int = 100
    min_training_vectors: int = 20
    # ошибки расписания по вероятностям P(v|P(h|v)), без шума сэмплирования
    mean_field_errors: bool = True
    # переобучение: рост разрыва (e_S' - e_S) / e_S' над разрывом эпохи 0;
    # False даёт буквальное |e_S - e_S'| / e_S' >= порога
    overfit_baseline: bool = True

    def __post_init__(self):
        thresholds = (
            self.gamma_momentum_threshold, self.gamma_alpha_threshold,
            self.gamma_stop_threshold, self.overfit_threshold,
        )
        if any(t <= 0 for t in thresholds):
            raise ValueError('все пороги должны быть > 0')
        if not 0 < self.validation_fraction < 0.5:
            raise ValueError(f'validation_fraction должен лежать в (0, 0.5), получено {self.validation_fraction}')
        if self.batch_size < 1 or self.gibbs_steps_cd < 1 or self.check_interval < 1:
            raise ValueError('batch_size, gibbs_steps_cd и check_interval должны быть >= 1')
        if self.max_epochs < 1:
            raise ValueError(f'max_epochs должен быть >= 1, получено {self.max_epochs}')


@dataclass(frozen=True)
class SampleConfig:
    count: int
    gibbs_steps: int = 25

    def __post_init__(self):
        if self.gibbs_steps < 1:
            raise ValueError(f'gibbs_steps должен быть >= 1, получено {self.gibbs_steps}')
        if self.count < 0:
            raise ValueError(f'count должен быть >= 0, получено {self.count}')


@dataclass(eq=False)
class TrainState:
    velocity_weights: np.ndarray
    velocity_visible: np.ndarray
    velocity_hidden: np.ndarray
    momentum: float
    alpha_weights: float
    epoch: int = 0
    train_errors: List[Tuple[int, float]] = field(default_factory=list)
    validation_errors: List[Tuple[int, float]] = field(default_factory=list)
    fit_errors: List[Tuple[int, float]] = field(default_factory=list)
    baseline_gap: Optional[float] = None
    probe_indices: Optional[np.ndarray] = None
    gamma: Optional[float] = None
    stop_reason: Optional[str] = None
    updates: int = 0

    @classmethod
    def for_model(cls, rbm: Rbm, config: TrainConfig) -> 'TrainState':
        return cls(
            velocity_weights=np.zeros_like(rbm.weights),
            velocity_visible=np.zeros_like(rbm.visible_bias),
            velocity_hidden=np.zeros_like(rbm.hidden_bias),
            momentum=config.momentum_initial,
            alpha_weights=config.alpha_weights,
        )


# ---------------------------------------------------------------------------
# conditionals and sampling
# ---------------------------------------------------------------------------

def _as_float_rows(values, length: int, what: str) -> Tuple[np.ndarray, bool]:
    if isinstance(values, Genome):
        values = values.bits
    arr = np.asarray(values, dtype=np.float64)
    single = arr.ndim == 1
    arr = arr.reshape(1, -1) if single else arr
    if arr.ndim != 2 or arr.shape[1] != length:
        raise ValueError(f'{what}: ожидается длина {length}, получено {arr.shape[-1]}')
    return arr, single


def hidden_activation_probs(rbm: Rbm, visible) -> np.ndarray:
    """P(h_j = 1 | V) for one vector or a batch of rows."""
    rows, single = _as_float_rows(visible, rbm.n_visible, 'V')
    probs = sigmoid(rows @ rbm.weights + rbm.hidden_bias)
    return probs[0] if single else probs


def visible_activation_probs(rbm: Rbm, hidden) -> np.ndarray:
    """P(v_i = 1 | H) for one vector or a batch of rows."""
    rows, single = _as_float_rows(hidden, rbm.n_hidden, 'H')
    probs = sigmoid(rows @ rbm.weights.T + rbm.visible_bias)
    return probs[0] if single else probs


def bernoulli_sample(probs, rng: RandomSource) -> np.ndarray:
    probs = np.asarray(probs, dtype=np.float64)
    if np.isnan(probs).any() or (probs < 0).any() or (probs > 1).any():
        raise ValueError('вероятности должны лежать в [0, 1]')
    return (rng.uniform(probs.shape) < probs).astype(GENOME_DTYPE)


# ---------------------------------------------------------------------------
# initialisation
# ---------------------------------------------------------------------------

def init_rbm(n: int, trainset, rng: RandomSource, n_hidden: Optional[int] = None) -> Rbm:
    """
    m = ceil(n/2) hidden units, visible biases at the log-odds of the training marginals.

    Marginals are clamped to [1/(2N), 1 - 1/(2N)] so constant bits stay finite.
    """
    data = as_bit_matrix(trainset, n)
    if data.shape[0] == 0:
        raise ValueError('обучающая выборка пуста')
    m = n_hidden if n_hidden is not None else math.ceil(n / 2)
    size = data.shape[0]
    low = 1.0 / (2 * size)
    p = np.clip(data.mean(axis=0), low, 1.0 - low)
    return Rbm(
        weights=rng.normal(0.01, (n, m)),
        visible_bias=np.log(p / (1.0 - p)),
        hidden_bias=np.zeros(m),
    )


# ---------------------------------------------------------------------------
# contrastive divergence
# ---------------------------------------------------------------------------

def contrastive_divergence_gradients(rbm: Rbm, batch, config: TrainConfig, rng: RandomSource) -> Gradients:
    """Mean CD-k gradient over the batch; weight decay applies to weights only."""
    data = as_bit_matrix(batch, rbm.n_visible).astype(np.float64)
    if data.shape[0] == 0:
        raise ValueError('пустой мини-батч')
    hidden = bernoulli_sample(hidden_activation_probs(rbm, data), rng).astype(np.float64)
    chain_hidden = hidden
    for step in range(config.gibbs_steps_cd):
        reconstruction = bernoulli_sample(visible_activation_probs(rbm, chain_hidden), rng).astype(np.float64)
        hidden_probs = hidden_activation_probs(rbm, reconstruction)
        if step + 1 < config.gibbs_steps_cd:
            chain_hidden = bernoulli_sample(hidden_probs, rng).astype(np.float64)

    size = data.shape[0]
    positive = data.T @ hidden / size
    negative = reconstruction.T @ hidden_probs / size
    return Gradients(
        weights=positive - negative - config.weight_cost * rbm.weights,
        visible_bias=(data - reconstruction).mean(axis=0),
        hidden_bias=(hidden - hidden_probs).mean(axis=0),
    )


def apply_gradients(rbm: Rbm, state: TrainState, gradients: Gradients, config: TrainConfig) -> Rbm:
    """velocity <- momentum * velocity + gradient; parameter <- parameter + alpha * velocity."""
    if gradients.weights.shape != rbm.weights.shape:
        raise ValueError(f'форма градиента {gradients.weights.shape} != {rbm.weights.shape}')
    beta = state.momentum
    state.velocity_weights = beta * state.velocity_weights + gradients.weights
    state.velocity_visible = beta * state.velocity_visible + gradients.visible_bias
    state.velocity_hidden = beta * state.velocity_hidden + gradients.hidden_bias
    rbm.weights += state.alpha_weights * state.velocity_weights
    rbm.visible_bias += config.alpha_biases * state.velocity_visible
    rbm.hidden_bias += config.alpha_biases * state.velocity_hidden
    state.updates += 1
    return rbm


def cd1_minibatch_update(rbm: Rbm, state: TrainState, batch, config: TrainConfig,
                         rng: RandomSource) -> Tuple[Rbm, TrainState]:
    """One parameter update from one mini-batch (updated in place and returned)."""
    gradients = contrastive_divergence_gradients(rbm, batch, config, rng)
    apply_gradients(rbm, state, gradients, config)
    return rbm, state


def reconstruction_error(rbm: Rbm, subset, rng: Optional[RandomSource] = None, mean_field: bool = False) -> float:
    """
    Mean per-bit |v - v_hat| after one V -> H -> V step.

    Sampled by default. With `mean_field` both layers carry probabilities instead of
    draws, so the value is deterministic and `rng` is not used.
    """
    data = as_bit_matrix(subset, rbm.n_visible)
    if data.shape[0] == 0:
        raise ValueError('пустое подмножество для ошибки реконструкции')
    if mean_field:
        reconstruction = visible_activation_probs(rbm, hidden_activation_probs(rbm, data))
        return float(np.mean(np.abs(data - reconstruction)))
    if rng is None:
        raise ValueError('для сэмплированной ошибки нужен rng')
    hidden = bernoulli_sample(hidden_activation_probs(rbm, data), rng)
    reconstruction = bernoulli_sample(visible_activation_probs(rbm, hidden), rng)
    return float(np.mean(np.abs(data.astype(np.int8) - reconstruction.astype(np.int8))))


# ---------------------------------------------------------------------------
# parameter control
# ---------------------------------------------------------------------------

def _error_at(history: List[Tuple[int, float]], epoch: float) -> float:
    """Last recorded error at or before `epoch`."""
    value = history[0][1]
    for recorded_epoch, error in history:
        if recorded_epoch > epoch:
            break
        value = error
    return value


def error_decrease_ratio(history: List[Tuple[int, float]], epoch: int) -> float:
    """gamma = (e_{0.75t} - e_t) / (e_0 - e_t); 0 when the error never moved."""
    if not history:
        raise ValueError('история ошибок пуста')
    e_start = history[0][1]
    e_now = _error_at(history, epoch)
    e_recent = _error_at(history, 0.75 * epoch)
    if e_start == e_now:
        return 0.0
    return (e_recent - e_now) / (e_start - e_now)


def overfitting_ratio(train_error: float, validation_error: float) -> float:
    """|e_S - e_S'| / e_S'."""
    if validation_error == 0:
        return 0.0 if train_error == 0 else math.inf
    return abs(train_error - validation_error) / validation_error


class TrainingSchedule:
    """
    Self-adaptive control of momentum, weight learning rate and stopping.

    Transitions are one-way: momentum only rises, alpha only drops.
    """

    def __init__(self, config: TrainConfig, state: TrainState):
        self.config = config
        self.state = state

    def validation_gap(self, fit_error: float, validation_error: float) -> float:
        if not self.config.overfit_baseline:
            return overfitting_ratio(fit_error, validation_error)
        if validation_error == 0:
            return 0.0
        return (validation_error - fit_error) / validation_error

    def record(self, epoch: int, train_error: float, validation_error: float,
               fit_error: Optional[float] = None) -> bool:
        """
        Store the errors of a check epoch; True means stop training.

        `train_error` is measured on the probe subset and drives gamma. `fit_error` is
        the error on the whole training split and is compared with the validation error.
        It defaults to `train_error`.
        """
        config, state = self.config, self.state
        fit_error = train_error if fit_error is None else fit_error
        state.train_errors.append((epoch, float(train_error)))
        state.validation_errors.append((epoch, float(validation_error)))
        state.fit_errors.append((epoch, float(fit_error)))
        gap = self.validation_gap(fit_error, validation_error)
        if state.baseline_gap is None:
            state.baseline_gap = gap
        if epoch < config.min_schedule_epoch:
            return False

        gamma = error_decrease_ratio(state.train_errors, epoch)
        state.gamma = gamma
        if gamma < config.gamma_momentum_threshold and state.momentum < config.momentum_raised:
            state.momentum = config.momentum_raised
            logger.debug('эпоха %d: gamma=%.4f, momentum -> %.2f', epoch, gamma, state.momentum)
        if gamma < config.gamma_alpha_threshold and state.alpha_weights > config.alpha_weights_reduced:
            state.alpha_weights = config.alpha_weights_reduced
            logger.debug('эпоха %d: gamma=%.4f, alpha -> %.3f', epoch, gamma, state.alpha_weights)
        # gamma < 0: ошибка выросла за последнюю четверть, это не сходимость
        if 0 <= gamma < config.gamma_stop_threshold:
            state.stop_reason = STOP_CONVERGED
            return True
        excess = gap - state.baseline_gap if config.overfit_baseline else gap
        if excess >= config.overfit_threshold:
            state.stop_reason = STOP_OVERFITTING
            return True
        return False


class RbmTrainer:
    """Runs `train` and keeps the TrainState of the last fit in `self.state`."""

    def __init__(self, config: TrainConfig, rng: RandomSource):
        self.config = config
        self.rng = rng
        self.state: Optional[TrainState] = None

    def fit(self, rbm: Rbm, data) -> Rbm:
        config, rng = self.config, self.rng
        data = as_bit_matrix(data, rbm.n_visible)
        size = data.shape[0]
        if size < config.min_training_vectors:
            raise ValueError(
                f'нужно хотя бы {config.min_training_vectors} обучающих векторов, получено {size}'
            )
        rbm = rbm.copy()

        order = rng.permutation(size)
        n_validation = max(1, int(round(size * config.validation_fraction)))
        validation = data[order[:n_validation]]
        training = data[order[n_validation:]]

        state = TrainState.for_model(rbm, config)
        state.probe_indices = rng.choice(len(training), size=min(config.probe_size, len(training)))
        probe = training[state.probe_indices]
        self.state = state
        schedule = TrainingSchedule(config, state)

        def errors():
            mean_field = config.mean_field_errors
            return (
                reconstruction_error(rbm, probe, rng, mean_field),
                reconstruction_error(rbm, validation, rng, mean_field),
                reconstruction_error(rbm, training, rng, mean_field),
            )

        schedule.record(0, *errors())
        stopped = False
        while state.epoch < config.max_epochs:
            state.epoch += 1
            shuffled = rng.permutation(len(training))
            for start in range(0, len(shuffled), config.batch_size):
                cd1_minibatch_update(rbm, state, training[shuffled[start:start + config.batch_size]], config, rng)
            if state.epoch % config.check_interval == 0:
                if schedule.record(state.epoch, *errors()):
                    stopped = True
                    break
        if not stopped:
            state.stop_reason = STOP_MAX_EPOCHS

        logger.debug(
            'RBM %dx%d: %d эпох, остановка %s, gamma=%s, ошибка %.4f',
            rbm.n_visible, rbm.n_hidden, state.epoch, state.stop_reason,
            None if state.gamma is None else round(state.gamma, 4),
            state.train_errors[-1][1],
        )
        return rbm


def train(rbm: Rbm, data, config: TrainConfig, rng: RandomSource) -> Rbm:
    return RbmTrainer(config, rng).fit(rbm, data)


def sample_candidates(rbm: Rbm, parents: Population, config: SampleConfig, rng: RandomSource) -> Population:
    """
    One Gibbs chain per candidate, started at a parent (parents are cycled).

    The last visible layer is a Bernoulli draw, not a threshold.
    """
    if parents.size == 0:
        raise ValueError('нет родителей для инициализации цепей')
    if parents.length != rbm.n_visible:
        raise ValueError(f'длина родителей {parents.length} != n={rbm.n_visible}')
    if config.count == 0:
        raise ValueError('count должен быть >= 1')
    visible = parents.genomes[np.arange(config.count) % parents.size]
    for _ in range(config.gibbs_steps):
        hidden = bernoulli_sample(hidden_activation_probs(rbm, visible), rng)
        visible = bernoulli_sample(visible_activation_probs(rbm, hidden), rng)
    return Population(visible)


# ---------------------------------------------------------------------------
# exact oracles (small models)
# ---------------------------------------------------------------------------

def _all_states(n: int) -> np.ndarray:
    """Every n-bit vector, row r is the big-endian encoding of r."""
    codes = np.arange(1 << n, dtype=np.int64)
    return ((codes[:, None] >> np.arange(n - 1, -1, -1)) & 1).astype(np.float64)


def _check_exact_size(rbm: Rbm):
    if rbm.n_visible + rbm.n_hidden > EXACT_MAX_UNITS:
        raise ValueError(
            f'точный перебор ограничен n + m <= {EXACT_MAX_UNITS}, '
            f'получено {rbm.n_visible} + {rbm.n_hidden}'
        )


def _log_unnormalized(rbm: Rbm, visible: np.ndarray) -> np.ndarray:
    """log sum_H exp(-E(V, H)); the hidden sum factorises per unit."""
    return visible @ rbm.visible_bias + np.logaddexp(0.0, visible @ rbm.weights + rbm.hidden_bias).sum(axis=1)


def exact_visible_probabilities(rbm: Rbm) -> np.ndarray:
    """P(V) for all 2^n visible states, indexed by big-endian code."""
    _check_exact_size(rbm)
    log_p = _log_unnormalized(rbm, _all_states(rbm.n_visible))
    return np.exp(log_p - logsumexp(log_p))


def exact_distribution(rbm: Rbm) -> Dict[Genome, float]:
    probs = exact_visible_probabilities(rbm)
    states = _all_states(rbm.n_visible)
    return {Genome(state.astype(GENOME_DTYPE)): float(p) for state, p in zip(states, probs)}


def exact_log_likelihood(rbm: Rbm, data) -> float:
    """Mean log P(V) over the data."""
    _check_exact_size(rbm)
    rows = as_bit_matrix(data, rbm.n_visible).astype(np.float64)
    log_z = logsumexp(_log_unnormalized(rbm, _all_states(rbm.n_visible)))
    return float(np.mean(_log_unnormalized(rbm, rows) - log_z))


def exact_log_likelihood_gradient(rbm: Rbm, data) -> Gradients:
    """Exact <v h>_data - <v h>_model (and the bias analogues) by enumeration."""
    _check_exact_size(rbm)
    rows = as_bit_matrix(data, rbm.n_visible).astype(np.float64)
    if rows.shape[0] == 0:
        raise ValueError('пустой набор данных')
    data_hidden = expit(rows @ rbm.weights + rbm.hidden_bias)

    states = _all_states(rbm.n_visible)
    probs = exact_visible_probabilities(rbm)
    model_hidden = expit(states @ rbm.weights + rbm.hidden_bias)

    return Gradients(
        weights=rows.T @ data_hidden / rows.shape[0] - (states * probs[:, None]).T @ model_hidden,
        visible_bias=rows.mean(axis=0) - probs @ states,
        hidden_bias=data_hidden.mean(axis=0) - probs @ model_hidden,
    )


# ---------------------------------------------------------------------------
# snapshots
# ---------------------------------------------------------------------------

def _format_row(values) -> str:
    return ' '.join(format(float(v), '.17g') for v in values)


def dump_rbm(rbm: Rbm) -> str:
    lines = [f'RBM {rbm.n_visible} {rbm.n_hidden}', _format_row(rbm.visible_bias), _format_row(rbm.hidden_bias)]
    lines.extend(_format_row(row) for row in rbm.weights)
    return '\n'.join(lines) + '\n'


def parse_rbm(text: str) -> Rbm:
    lines = text.splitlines()
    header = lines[0].split() if lines else []
    if len(header) != 3 or header[0] != 'RBM':
        raise ValueError('некорректный заголовок снимка RBM')
    n, m = int(header[1]), int(header[2])
    if len(lines) < 3 + n:
        raise ValueError(f'снимок RBM обрезан: ожидается {3 + n} строк, получено {len(lines)}')

    def _parse(line, expected):
        values = [float(v) for v in line.split()]
        if len(values) != expected:
            raise ValueError(f'ожидается {expected} чисел, получено {len(values)}')
        return values

    visible = _parse(lines[1], n)
    hidden = _parse(lines[2], m)
    weights = [_parse(line, m) for line in lines[3:3 + n]]
    return Rbm(np.array(weights).reshape(n, m), visible, hidden)
