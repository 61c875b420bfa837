"""
Generational EDA loop shared by the RBM and BOA models.

Each generation: select parents, build a model on them, sample candidates, evaluate
the candidates, and continue with parents + candidates. Every step is timed under its
own phase.
"""
import logging
import math
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Optional, Protocol, Tuple

from eda.bitstring import EvaluatedGenome, Population, RandomSource, random_population
from eda.boa import DEFAULT_MAX_INDEGREE, ScoredDataset, estimate_cpts, greedy_build_network, sample_network
from eda.problems import Problem
from eda.rbm import RbmTrainer, SampleConfig, TrainConfig, init_rbm, sample_candidates
from eda.selection import SelectionConfig, tournament_select

logger = logging.getLogger(__name__)

MODEL_RBM = 'rbm'
MODEL_BOA = 'boa'
MODEL_KINDS = (MODEL_RBM, MODEL_BOA)

PHASE_SELECTION = 'selection'
PHASE_MODEL = 'model'
PHASE_SAMPLING = 'sampling'
PHASE_FITNESS = 'fitness'
PHASES = (PHASE_SELECTION, PHASE_MODEL, PHASE_SAMPLING, PHASE_FITNESS)

STOP_OPTIMUM = 'optimum'
STOP_MAX_GENERATIONS = 'max_generations'
STOP_STAGNATION = 'stagnation'

SUCCESS_TOLERANCE = 1e-9


def _even_up(value: int) -> int:
    return value + (value % 2)


def minimum_population_size(model_kind: str, parent_fraction: float = 0.5) -> int:
    """Smallest population a model can be built from (RBM training needs >= 20 parents)."""
    if model_kind == MODEL_BOA:
        return 4
    if model_kind == MODEL_RBM:
        return max(4, _even_up(math.ceil(TrainConfig.min_training_vectors / parent_fraction)))
    raise ValueError(f'неизвестная модель: {model_kind}')


@dataclass(frozen=True)
class EdaConfig:
    model_kind: str
    population_size: int
    parent_fraction: float = 0.5
    max_generations: int = 500
    target_fitness: Optional[float] = None
    stagnation_limit: int = 100
    train: TrainConfig = field(default_factory=TrainConfig)
    gibbs_steps: int = 25
    max_indegree: int = DEFAULT_MAX_INDEGREE

    def __post_init__(self):
        if self.model_kind not in MODEL_KINDS:
            raise ValueError(f'model_kind должен быть одним из {MODEL_KINDS}, получено {self.model_kind!r}')
        if self.population_size < 4 or self.population_size % 2:
            raise ValueError(f'размер популяции должен быть чётным и >= 4, получено {self.population_size}')
        if self.max_generations < 1:
            raise ValueError(f'max_generations должен быть >= 1, получено {self.max_generations}')
        if self.stagnation_limit < 1:
            raise ValueError(f'stagnation_limit должен быть >= 1, получено {self.stagnation_limit}')
        if self.max_indegree < 0:
            raise ValueError(f'max_indegree должен быть >= 0, получено {self.max_indegree}')
        parents = self.selection.parent_count(self.population_size)
        if parents >= self.population_size:
            raise ValueError('parent_fraction должен оставлять место для кандидатов')

    @property
    def selection(self) -> SelectionConfig:
        return SelectionConfig(parent_fraction=self.parent_fraction)

    @property
    def candidate_count(self) -> int:
        return self.population_size - self.selection.parent_count(self.population_size)


class PhaseTimer:
    """Accumulates monotone-clock time per phase; spans never overlap."""

    def __init__(self, clock: Callable[[], float] = time.perf_counter):
        self._clock = clock
        self.totals: Dict[str, float] = {phase: 0.0 for phase in PHASES}
        self._active: Optional[str] = None

    @contextmanager
    def phase(self, name: str):
        if name not in self.totals:
            raise ValueError(f'неизвестная фаза: {name}')
        if self._active is not None:
            raise RuntimeError(f'фаза {self._active} ещё не завершена')
        self._active = name
        started = self._clock()
        try:
            yield
        finally:
            self.totals[name] += max(0.0, self._clock() - started)
            self._active = None

    def snapshot(self) -> Dict[str, float]:
        return dict(self.totals)

    @property
    def total(self) -> float:
        return sum(self.totals.values())

    def fractions(self) -> Dict[str, float]:
        total = self.total
        if total <= 0:
            return {phase: 0.0 for phase in PHASES}
        return {phase: value / total for phase, value in self.totals.items()}


class ModelBuilder(Protocol):
    kind: str

    def build(self, parents: Population, rng: RandomSource) -> Tuple[Any, Dict[str, Any]]:
        """Fit a model to the parents; returns the model and a small info dict."""

    def sample(self, model: Any, parents: Population, count: int, rng: RandomSource) -> Population:
        ...


class RbmModelBuilder:
    kind = MODEL_RBM

    def __init__(self, train_config: TrainConfig = None, gibbs_steps: int = 25):
        self.train_config = train_config or TrainConfig()
        self.gibbs_steps = gibbs_steps

    def build(self, parents: Population, rng: RandomSource):
        trainer = RbmTrainer(self.train_config, rng)
        rbm = trainer.fit(init_rbm(parents.length, parents.genomes, rng), parents.genomes)
        state = trainer.state
        return rbm, {
            'epochs': state.epoch,
            'stop_reason': state.stop_reason,
            'gamma': state.gamma,
            'train_error': state.train_errors[-1][1],
        }

    def sample(self, model, parents: Population, count: int, rng: RandomSource) -> Population:
        return sample_candidates(model, parents, SampleConfig(count=count, gibbs_steps=self.gibbs_steps), rng)


class BoaModelBuilder:
    kind = MODEL_BOA

    def __init__(self, max_indegree: int = DEFAULT_MAX_INDEGREE):
        self.max_indegree = max_indegree

    def build(self, parents: Population, rng: RandomSource):
        data = ScoredDataset(parents.genomes)
        network = estimate_cpts(greedy_build_network(data, self.max_indegree), data)
        return network, {'edges': network.edge_count}

    def sample(self, model, parents: Population, count: int, rng: RandomSource) -> Population:
        return sample_network(model, count, rng)


def make_builder(config: EdaConfig) -> ModelBuilder:
    if config.model_kind == MODEL_RBM:
        return RbmModelBuilder(config.train, config.gibbs_steps)
    return BoaModelBuilder(config.max_indegree)


@dataclass
class GenerationStats:
    generation: int
    best_fitness: float
    mean_fitness: float
    evaluations: int
    durations: Dict[str, float]
    model_info: Dict[str, Any] = field(default_factory=dict)


@dataclass
class RunResult:
    success: bool
    evaluations: int
    generations: int
    stop_reason: str
    target_fitness: float
    best: EvaluatedGenome
    phase_totals: Dict[str, float]
    loop_seconds: float
    trace: List[GenerationStats] = field(default_factory=list)
    seed: Optional[int] = None

    @property
    def best_fitness(self) -> float:
        return self.best.fitness

    def phase_ms(self) -> Dict[str, float]:
        return {phase: seconds * 1000.0 for phase, seconds in self.phase_totals.items()}

    def to_dict(self, include_trace: bool = True) -> Dict[str, Any]:
        data = {
            'success': self.success,
            'evaluations': self.evaluations,
            'generations': self.generations,
            'stop_reason': self.stop_reason,
            'target_fitness': self.target_fitness,
            'best_fitness': self.best.fitness,
            'best_genome': str(self.best.genome),
            'phase_ms': self.phase_ms(),
            'loop_ms': self.loop_seconds * 1000.0,
            'seed': self.seed,
        }
        if include_trace:
            data['trace'] = [asdict(stats) for stats in self.trace]
        return data


def _reached(fitness: float, target: float) -> bool:
    return fitness >= target - SUCCESS_TOLERANCE


def run_eda(problem: Problem, config: EdaConfig, rng: RandomSource,
            builder: Optional[ModelBuilder] = None) -> RunResult:
    """
    One EDA run until the target is hit, max_generations pass, or the best fitness
    stalls for stagnation_limit generations.

    Evaluations count every fitness call: the initial population plus all candidates.
    """
    target = problem.optimum if config.target_fitness is None else float(config.target_fitness)
    builder = builder or make_builder(config)
    selection = config.selection
    candidate_count = config.candidate_count
    timer = PhaseTimer()

    loop_started = time.perf_counter()
    population = random_population(problem.length, config.population_size, rng)
    with timer.phase(PHASE_FITNESS):
        population = population.evaluate(problem)
    evaluations = population.size
    best = population.best()
    trace: List[GenerationStats] = []

    generation = 0
    stale = 0
    stop_reason = STOP_OPTIMUM
    if not _reached(best.fitness, target):
        while True:
            if generation >= config.max_generations:
                stop_reason = STOP_MAX_GENERATIONS
                break
            generation += 1
            before = timer.snapshot()
            with timer.phase(PHASE_SELECTION):
                parents = tournament_select(population, selection, rng)
            with timer.phase(PHASE_MODEL):
                model, info = builder.build(parents, rng)
            with timer.phase(PHASE_SAMPLING):
                candidates = builder.sample(model, parents, candidate_count, rng)
            with timer.phase(PHASE_FITNESS):
                candidates = candidates.evaluate(problem)
            evaluations += candidates.size
            population = parents.union(candidates)

            current = population.best()
            if current.fitness > best.fitness:
                best = current
                stale = 0
            else:
                stale += 1
            trace.append(GenerationStats(
                generation=generation,
                best_fitness=best.fitness,
                mean_fitness=population.mean_fitness(),
                evaluations=evaluations,
                durations={p: timer.totals[p] - before[p] for p in PHASES},
                model_info=info,
            ))
            logger.debug('поколение %d: best=%.6g mean=%.6g evals=%d %s',
                         generation, best.fitness, trace[-1].mean_fitness, evaluations, info)

            if _reached(best.fitness, target):
                stop_reason = STOP_OPTIMUM
                break
            if stale >= config.stagnation_limit:
                stop_reason = STOP_STAGNATION
                break
    loop_seconds = time.perf_counter() - loop_started

    success = _reached(best.fitness, target)
    logger.info(
        '%s %s |P|=%d: %s за %d поколений, %d вычислений, best=%.6g (цель %.6g)',
        config.model_kind, problem, config.population_size,
        'успех' if success else f'неудача ({stop_reason})',
        generation, evaluations, best.fitness, target,
    )
    return RunResult(
        success=success,
        evaluations=evaluations,
        generations=generation,
        stop_reason=stop_reason,
        target_fitness=target,
        best=best,
        phase_totals=timer.snapshot(),
        loop_seconds=loop_seconds,
        trace=trace,
        seed=rng.seed,
    )
