"""
Запуск sweep: для каждой ячейки (модель, размер) сначала бисекция размера популяции, затем
полный набор прогонов критерия на найденном размере.

Ячейки независимы: у каждой своё зерно, ошибка одной ячейки не прерывает остальные.
"""
import logging
import threading
import traceback
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

from django import db
from django.db import transaction
from django.utils import timezone

from eda.bisection import BisectionResult, ProbeRecord, UnsolvedError, bisect_population_size
from eda.bitstring import RandomSource
from eda.engine import EdaConfig, PHASE_FITNESS, PHASE_MODEL, PHASE_SAMPLING, PHASE_SELECTION, RunResult, run_eda
from experiments import conf
from experiments.models import Experiment, ExperimentCell, RunRecord
from experiments.reporting import (
    CellSummary, ScalingReport, report_from_experiment, summarize_runs, unsolved_summary, write_artifacts,
)
from experiments.specs import ExperimentSpec

logger = logging.getLogger(__name__)

STATUS_SOLVED = 'solved'
STATUS_UNSOLVED = 'unsolved'
STATUS_FAILED = 'failed'


@dataclass
class CellOutcome:
    model: str
    size: int
    status: str
    summary: CellSummary
    bisection: Optional[BisectionResult] = None
    probes: List[ProbeRecord] = field(default_factory=list)
    runs: List[RunResult] = field(default_factory=list)
    error: str = ''


def execute_cell(spec: ExperimentSpec, model: str, size: int, options: Dict[str, Any] = None,
                 start: int = None, cap: int = None) -> CellOutcome:
    """Bisect, then run the criterion's full run count at the minimal size (no ORM access)."""
    options = conf.eda_options() if options is None else options
    start = start or spec.start or conf.bisection_start()
    cap = cap or spec.cap or conf.bisection_cap()
    rng = RandomSource(spec.cell_seed(model, size))
    problem = spec.problem_for(size)
    criterion = spec.criterion_for(size)

    try:
        bisection = bisect_population_size(problem, model, criterion, rng.child(0), start=start, cap=cap, **options)
    except UnsolvedError as exc:
        logger.warning('%s @ %d: не решено до предела %d', model, size, cap)
        return CellOutcome(model, size, STATUS_UNSOLVED, unsolved_summary(model, spec.problem, size, spec.k),
                           probes=exc.probes, error=str(exc))

    final_rng = rng.child(1)
    config = EdaConfig(model_kind=model, population_size=bisection.population_size, **options)
    results = [
        run_eda(run_problem, config, final_rng.child(index))
        for index, run_problem in enumerate(criterion.trial_problems(problem))
    ]
    summary = summarize_runs(model, spec.problem, size, spec.k, bisection.population_size, results)
    logger.info('%s @ %d: |P|=%d, успехов %.0f%%, среднее вычислений %.1f',
                model, size, bisection.population_size, summary.success_rate * 100, summary.mean_evals)
    return CellOutcome(model, size, STATUS_SOLVED, summary, bisection=bisection,
                       probes=bisection.probes, runs=results)


# ---------------------------------------------------------------------------
# ORM
# ---------------------------------------------------------------------------

def create_experiment(spec: ExperimentSpec, workers: int = 1) -> Experiment:
    with transaction.atomic():
        experiment = Experiment.objects.create(
            name=spec.name,
            problem=spec.problem,
            k=spec.k,
            sizes=list(spec.sizes),
            model_kinds=list(spec.models),
            root_seed=spec.seed,
            spec_hash=spec.spec_hash,
            spec=spec.to_dict(),
            workers=workers,
        )
        ExperimentCell.objects.bulk_create([
            ExperimentCell(experiment=experiment, index=index, model_kind=model, size=size)
            for index, model, size in spec.cells()
        ])
    return experiment


def persist_outcome(cell: ExperimentCell, outcome: CellOutcome) -> ExperimentCell:
    summary = outcome.summary
    cell.status = outcome.status
    cell.error = outcome.error
    cell.probe_log = [_probe_dict(p) for p in outcome.probes]
    cell.finished_at = timezone.now()
    if outcome.bisection is not None:
        cell.population_size = outcome.bisection.population_size
        cell.bracket_lower = outcome.bisection.lower
        cell.bracket_upper = outcome.bisection.upper
        cell.bisection_evaluations = outcome.bisection.evaluations
    cell.runs = summary.runs
    cell.success_rate = summary.success_rate
    cell.mean_evaluations = summary.mean_evals
    cell.sd_evaluations = summary.sd_evals
    cell.t_select_ms = summary.t_select_ms
    cell.t_model_ms = summary.t_model_ms
    cell.t_sample_ms = summary.t_sample_ms
    cell.t_fitness_ms = summary.t_fitness_ms
    cell.t_total_ms = summary.t_total_ms

    with transaction.atomic():
        cell.save()
        cell.run_records.all().delete()
        RunRecord.objects.bulk_create([_run_record(cell, index, result) for index, result in enumerate(outcome.runs)])
    return cell


def _probe_dict(probe: ProbeRecord) -> Dict[str, Any]:
    return {
        'index': probe.index,
        'stage': probe.stage,
        'population_size': probe.population_size,
        'passed': probe.passed,
        'runs': probe.runs,
        'evaluations': probe.evaluations,
    }


def _run_record(cell: ExperimentCell, index: int, result: RunResult) -> RunRecord:
    ms = result.phase_ms()
    return RunRecord(
        cell=cell,
        run_index=index,
        seed=result.seed or 0,
        success=result.success,
        evaluations=result.evaluations,
        generations=result.generations,
        best_fitness=result.best_fitness,
        stop_reason=result.stop_reason,
        t_select_ms=ms[PHASE_SELECTION],
        t_model_ms=ms[PHASE_MODEL],
        t_sample_ms=ms[PHASE_SAMPLING],
        t_fitness_ms=ms[PHASE_FITNESS],
        loop_ms=result.loop_seconds * 1000.0,
        trace=[
            {'generation': s.generation, 'best': s.best_fitness, 'mean': s.mean_fitness,
             'evaluations': s.evaluations, 'model_info': s.model_info}
            for s in result.trace
        ],
    )


def run_cell_record(cell: ExperimentCell, options: Dict[str, Any] = None) -> CellOutcome:
    """Execute one persisted cell; an unexpected exception marks it failed instead of propagating."""
    spec = ExperimentSpec.from_dict(cell.experiment.spec)
    ExperimentCell.objects.filter(pk=cell.pk).update(status='running')
    try:
        outcome = execute_cell(spec, cell.model_kind, cell.size, options)
    except Exception as exc:
        logger.exception('ячейка %s @ %d упала', cell.model_kind, cell.size)
        outcome = CellOutcome(
            cell.model_kind, cell.size, STATUS_FAILED,
            unsolved_summary(cell.model_kind, spec.problem, cell.size, spec.k),
            error=f'{exc.__class__.__name__}: {exc}\n{traceback.format_exc()}',
        )
    persist_outcome(cell, outcome)
    return outcome


def output_dir_for(experiment: Experiment, spec: ExperimentSpec, out_dir=None) -> Path:
    if out_dir:
        return Path(out_dir)
    if spec.out:
        return Path(spec.out)
    return conf.results_dir() / f'experiment_{experiment.pk}'


def finalize_experiment(experiment: Experiment, out_dir=None) -> Tuple[ScalingReport, List[Path]]:
    """Refresh the status, rebuild the report from the cells, write CSV/JSON/plot files."""
    experiment.refresh_status()
    spec = ExperimentSpec.from_dict(experiment.spec)
    report = report_from_experiment(experiment)
    target = output_dir_for(experiment, spec, out_dir)
    paths = write_artifacts(report, target) if report.cells else []
    Experiment.objects.filter(pk=experiment.pk).update(output_dir=str(target))
    experiment.output_dir = str(target)
    return report, paths


def run_experiment(spec: ExperimentSpec, workers: int = 1, options: Dict[str, Any] = None, out_dir=None,
                   on_cell_done: Callable[[CellOutcome], None] = None) -> Tuple[Experiment, ScalingReport]:
    """
    Whole sweep in this process; cells fan out over `workers` threads.

    Results are keyed by cell, so arrival order does not matter.
    """
    if workers < 1:
        raise ValueError(f'workers должен быть >= 1, получено {workers}')
    experiment = create_experiment(spec, workers)
    Experiment.objects.filter(pk=experiment.pk).update(status='running', started_at=timezone.now())
    cells = list(experiment.cells.select_related('experiment').order_by('index'))
    lock = threading.Lock()

    def notify(outcome):
        if on_cell_done is not None:
            with lock:
                on_cell_done(outcome)

    if workers == 1:
        for cell in cells:
            notify(run_cell_record(cell, options))
    else:
        db.connections.close_all()

        def run_one(cell):
            try:
                return run_cell_record(cell, options)
            finally:
                db.connection.close()

        with ThreadPoolExecutor(max_workers=workers) as executor:
            futures = {executor.submit(run_one, cell): cell for cell in cells}
            for future in as_completed(futures):
                notify(future.result())

    experiment.refresh_from_db()
    report, _ = finalize_experiment(experiment, out_dir)
    logger.info('эксперимент %s завершён: %s, нерешённых ячеек %d',
                experiment.pk, experiment.status, len(report.unsolved))
    return experiment, report


def dispatch_experiment(spec: ExperimentSpec, workers: int = 1) -> Experiment:
    """Create the experiment and queue one Celery task per cell."""
    from experiments.tasks import run_sweep_cell

    experiment = create_experiment(spec, workers)
    Experiment.objects.filter(pk=experiment.pk).update(status='running', started_at=timezone.now())
    for cell in experiment.cells.order_by('index'):
        result = run_sweep_cell.delay(cell.pk)
        ExperimentCell.objects.filter(pk=cell.pk).update(celery_task_id=result.id or '')
    experiment.refresh_from_db()
    return experiment
