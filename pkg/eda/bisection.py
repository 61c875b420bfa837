"""
Population sizing by bisection: the smallest population that meets a success criterion.

Phase one doubles the size from `start` until a probe passes. Phase two halves the
bracket until it is within max(4, 10% of the lower bound). The upper bound is then
re-verified with fresh seeds; a failed verification resumes the search above it.
"""
import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

from eda.bitstring import RandomSource
from eda.engine import EdaConfig, minimum_population_size, run_eda
from eda.problems import Problem

logger = logging.getLogger(__name__)

MODE_ALL_RUNS = 'all_runs'
MODE_PER_INSTANCE = 'per_instance'
CRITERION_MODES = (MODE_ALL_RUNS, MODE_PER_INSTANCE)

DEFAULT_START = 16
DEFAULT_CAP = 2 ** 14

STAGE_DOUBLING = 'doubling'
STAGE_SEARCH = 'search'
STAGE_VERIFY = 'verify'


class UnsolvedError(RuntimeError):
    """The criterion never passed at or below the cap."""

    def __init__(self, message: str, probes: List['ProbeRecord'] = None):
        super().__init__(message)
        self.probes = list(probes or [])


def even_up(size: int) -> int:
    return size + (size % 2)


@dataclass(frozen=True)
class SuccessCriterion:
    mode: str = MODE_ALL_RUNS
    runs_per_trial: int = 30
    instances: Optional[Tuple[Problem, ...]] = None
    runs_per_instance: int = 5

    def __post_init__(self):
        if self.mode not in CRITERION_MODES:
            raise ValueError(f'mode должен быть одним из {CRITERION_MODES}, получено {self.mode!r}')
        if self.runs_per_trial < 1 or self.runs_per_instance < 1:
            raise ValueError('число прогонов должно быть >= 1')
        if self.instances is not None:
            object.__setattr__(self, 'instances', tuple(self.instances))
        if self.mode == MODE_PER_INSTANCE and not self.instances:
            raise ValueError('режим per_instance требует список экземпляров')

    @classmethod
    def all_runs(cls, runs: int = 30) -> 'SuccessCriterion':
        return cls(MODE_ALL_RUNS, runs_per_trial=runs)

    @classmethod
    def per_instance(cls, instances: Sequence[Problem], runs_per_instance: int = 5) -> 'SuccessCriterion':
        return cls(MODE_PER_INSTANCE, instances=tuple(instances), runs_per_instance=runs_per_instance)

    def trial_problems(self, problem: Optional[Problem]) -> List[Problem]:
        """Problems of one full trial, one entry per run, in run order."""
        if self.mode == MODE_PER_INSTANCE:
            return [inst for inst in self.instances for _ in range(self.runs_per_instance)]
        if problem is None:
            raise ValueError('режим all_runs требует задачу')
        return [problem] * self.runs_per_trial

    @property
    def total_runs(self) -> int:
        if self.mode == MODE_PER_INSTANCE:
            return len(self.instances) * self.runs_per_instance
        return self.runs_per_trial


@dataclass(frozen=True)
class ProbeOutcome:
    passed: bool
    runs: int = 0
    evaluations: int = 0


@dataclass(frozen=True)
class ProbeRecord:
    index: int
    stage: str
    population_size: int
    passed: bool
    runs: int
    evaluations: int


@dataclass
class BisectionResult:
    population_size: int
    lower: Optional[int]
    upper: int
    evaluations: int
    probes: List[ProbeRecord] = field(default_factory=list)
    non_monotone: List[Tuple[int, int]] = field(default_factory=list)

    @property
    def bracket(self) -> Tuple[Optional[int], int]:
        return self.lower, self.upper

    def to_dict(self) -> Dict:
        return {
            'population_size': self.population_size,
            'bracket': [self.lower, self.upper],
            'evaluations': self.evaluations,
            'probes': [asdict(p) for p in self.probes],
            'non_monotone': [list(pair) for pair in self.non_monotone],
        }


def _resolution(lower: int) -> float:
    return max(4.0, 0.1 * lower)


ProbeFn = Callable[[int, int], Union[bool, ProbeOutcome]]


def bisect(probe: ProbeFn, start: int = DEFAULT_START, cap: int = DEFAULT_CAP) -> BisectionResult:
    """
    Generic bisection over `probe(size, probe_index)`.

    Every call gets a new probe_index so callers can derive independent seeds.
    Raises UnsolvedError when no size up to `cap` passes.
    """
    start = even_up(max(2, int(start)))
    cap = int(cap) - int(cap) % 2
    if start > cap:
        raise ValueError(f'стартовый размер {start} больше предела {cap}')

    probes: List[ProbeRecord] = []
    non_monotone: List[Tuple[int, int]] = []

    def run(size: int, stage: str) -> bool:
        outcome = probe(size, len(probes))
        if isinstance(outcome, bool):
            outcome = ProbeOutcome(outcome)
        record = ProbeRecord(len(probes), stage, size, bool(outcome.passed), outcome.runs, outcome.evaluations)
        for earlier in probes:
            pair = None
            if record.passed and not earlier.passed and earlier.population_size > size:
                pair = (size, earlier.population_size)
            elif not record.passed and earlier.passed and earlier.population_size < size:
                pair = (earlier.population_size, size)
            if pair is not None:
                non_monotone.append(pair)
                logger.warning('немонотонность: успех при |P|=%d, неудача при |P|=%d', *pair)
        probes.append(record)
        logger.info('проба #%d (%s): |P|=%d -> %s', record.index, stage, size,
                    'успех' if record.passed else 'неудача')
        return record.passed

    lower: Optional[int] = None
    size = start
    while True:
        upper = None
        while upper is None:
            if run(size, STAGE_DOUBLING):
                upper = size
            elif size >= cap:
                raise UnsolvedError(f'критерий не выполнен ни при каком размере до {cap}', probes)
            else:
                lower = size
                size = min(even_up(size * 2), cap)

        while lower is not None and upper - lower > _resolution(lower):
            middle = even_up((lower + upper) // 2)
            if middle <= lower or middle >= upper:
                break
            if run(middle, STAGE_SEARCH):
                upper = middle
            else:
                lower = middle

        if run(upper, STAGE_VERIFY):
            break
        lower = upper
        if upper >= cap:
            raise UnsolvedError(f'размер {upper} не прошёл повторную проверку, предел {cap}', probes)
        size = min(even_up(upper * 2), cap)

    return BisectionResult(
        population_size=upper,
        lower=lower,
        upper=upper,
        evaluations=sum(p.evaluations for p in probes),
        probes=probes,
        non_monotone=non_monotone,
    )


def run_trial(problem: Optional[Problem], model_kind: str, population_size: int, criterion: SuccessCriterion,
              rng: RandomSource, **eda_options) -> ProbeOutcome:
    """
    Run the criterion's runs at one population size; stops at the first failure.

    Run j uses `rng.child(j)`.
    """
    runs = 0
    evaluations = 0
    for index, run_problem in enumerate(criterion.trial_problems(problem)):
        config = EdaConfig(model_kind=model_kind, population_size=population_size, **eda_options)
        result = run_eda(run_problem, config, rng.child(index))
        runs += 1
        evaluations += result.evaluations
        if not result.success:
            return ProbeOutcome(False, runs, evaluations)
    return ProbeOutcome(True, runs, evaluations)


def bisect_population_size(problem: Optional[Problem], model_kind: str, criterion: SuccessCriterion,
                           rng: RandomSource, start: int = DEFAULT_START, cap: int = DEFAULT_CAP,
                           **eda_options) -> BisectionResult:
    """
    Smallest even population for which `model_kind` meets `criterion` on `problem`
    (or on `criterion.instances` in per_instance mode).

    Probe i draws its seeds from `rng.child(i)`.
    """
    parent_fraction = eda_options.get('parent_fraction', 0.5)
    start = max(start, minimum_population_size(model_kind, parent_fraction))

    def probe(size: int, index: int) -> ProbeOutcome:
        return run_trial(problem, model_kind, size, criterion, rng.child(index), **eda_options)

    result = bisect(probe, start=start, cap=cap)
    logger.info('%s: минимальный размер популяции %d (интервал %s), %d вычислений',
                model_kind, result.population_size, result.bracket, result.evaluations)
    return result
