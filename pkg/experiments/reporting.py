"""
Отчёты по масштабированию: сводки ячеек, степенные аппроксимации, CSV/JSON и таблицы
для графиков (формат gnuplot, колонки через пробел).
"""
import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import linregress

from eda.engine import PHASE_FITNESS, PHASE_MODEL, PHASE_SAMPLING, PHASE_SELECTION, RunResult

logger = logging.getLogger(__name__)

CSV_FIELDS = (
    'model', 'problem', 'size', 'k', 'pop_size', 'runs', 'success_rate', 'mean_evals', 'sd_evals',
    't_select_ms', 't_model_ms', 't_sample_ms', 't_fitness_ms', 't_total_ms',
)
PHASE_COLUMNS = (
    (PHASE_SELECTION, 't_select_ms'),
    (PHASE_MODEL, 't_model_ms'),
    (PHASE_SAMPLING, 't_sample_ms'),
    (PHASE_FITNESS, 't_fitness_ms'),
)

FIGURE_EVALUATIONS = 'evaluations'
FIGURE_TOTAL_TIME = 'total_time'
FIGURE_PHASE_ABSOLUTE = 'phase_absolute'
FIGURE_PHASE_RELATIVE = 'phase_relative'
FIGURES = (FIGURE_EVALUATIONS, FIGURE_TOTAL_TIME, FIGURE_PHASE_ABSOLUTE, FIGURE_PHASE_RELATIVE)

MIN_FIT_POINTS = 3

_INT_FIELDS = {'size', 'k', 'pop_size', 'runs'}
_STR_FIELDS = {'model', 'problem'}


@dataclass(frozen=True)
class PowerLawFit:
    """value ≈ coefficient * size ** exponent."""

    exponent: float
    coefficient: float
    r_squared: float
    stderr: float
    points: int

    def predict(self, size: float) -> float:
        return self.coefficient * size ** self.exponent


def fit_power_law(points: Iterable[Tuple[float, float]]) -> PowerLawFit:
    """Least-squares line through (log size, log value)."""
    points = [(float(size), float(value)) for size, value in points]
    if len(points) < MIN_FIT_POINTS:
        raise ValueError(f'для аппроксимации нужно хотя бы {MIN_FIT_POINTS} точки, получено {len(points)}')
    if any(size <= 0 or value <= 0 or not math.isfinite(value) for size, value in points):
        raise ValueError('размеры и значения должны быть положительными')
    sizes = np.log([size for size, _ in points])
    values = np.log([value for _, value in points])
    if np.ptp(sizes) == 0:
        raise ValueError('все размеры совпадают')
    fit = linregress(sizes, values)
    return PowerLawFit(
        exponent=float(fit.slope),
        coefficient=float(math.exp(fit.intercept)),
        r_squared=float(fit.rvalue ** 2),
        stderr=float(fit.stderr),
        points=len(points),
    )


@dataclass
class CellSummary:
    model: str
    problem: str
    size: int
    k: Optional[int]
    pop_size: Optional[int]
    runs: int
    success_rate: Optional[float]
    mean_evals: Optional[float]
    sd_evals: Optional[float]
    t_select_ms: Optional[float]
    t_model_ms: Optional[float]
    t_sample_ms: Optional[float]
    t_fitness_ms: Optional[float]
    t_total_ms: Optional[float]

    @property
    def solved(self) -> bool:
        return self.pop_size is not None and self.success_rate is not None

    def phase_ms(self) -> Dict[str, float]:
        return {phase: getattr(self, column) or 0.0 for phase, column in PHASE_COLUMNS}

    def phase_fractions(self) -> Dict[str, float]:
        """Share of each phase in the summed phase time; rows sum to 1."""
        values = self.phase_ms()
        total = sum(values.values())
        if total <= 0:
            return {phase: 0.0 for phase in values}
        return {phase: value / total for phase, value in values.items()}

    def csv_row(self) -> Dict[str, str]:
        row = {}
        for name in CSV_FIELDS:
            value = getattr(self, name)
            if value is None:
                row[name] = ''
            elif isinstance(value, float):
                row[name] = format(value, '.17g')
            else:
                row[name] = str(value)
        return row

    @classmethod
    def from_csv_row(cls, row: Dict[str, str]) -> 'CellSummary':
        missing = [name for name in CSV_FIELDS if name not in row]
        if missing:
            raise ValueError(f'в строке CSV нет колонок {missing}')
        values = {}
        for name in CSV_FIELDS:
            raw = (row[name] or '').strip()
            if name in _STR_FIELDS:
                values[name] = raw
            elif raw == '':
                values[name] = 0 if name == 'runs' else None
            elif name in _INT_FIELDS:
                values[name] = int(raw)
            else:
                values[name] = float(raw)
        return cls(**values)


def summarize_runs(model: str, problem: str, size: int, k: Optional[int], pop_size: int,
                   results: Sequence[RunResult]) -> CellSummary:
    """Means over the runs at the final population size; times in milliseconds."""
    if not results:
        raise ValueError('нет прогонов для сводки')
    evaluations = np.array([r.evaluations for r in results], dtype=np.float64)
    phase_means = {
        column: float(np.mean([r.phase_totals[phase] * 1000.0 for r in results]))
        for phase, column in PHASE_COLUMNS
    }
    return CellSummary(
        model=model,
        problem=problem,
        size=size,
        k=k,
        pop_size=pop_size,
        runs=len(results),
        success_rate=float(np.mean([r.success for r in results])),
        mean_evals=float(evaluations.mean()),
        sd_evals=float(evaluations.std(ddof=1)) if len(results) > 1 else 0.0,
        t_total_ms=sum(phase_means.values()),
        **phase_means,
    )


def unsolved_summary(model: str, problem: str, size: int, k: Optional[int]) -> CellSummary:
    return CellSummary(model, problem, size, k, None, 0, None, None, None, None, None, None, None, None)


@dataclass
class ScalingReport:
    problem: str
    k: Optional[int]
    seed: int
    spec_hash: str
    cells: List[CellSummary] = field(default_factory=list)
    timing_comparable: bool = True
    name: str = ''

    @property
    def models(self) -> List[str]:
        seen = []
        for cell in self.cells:
            if cell.model not in seen:
                seen.append(cell.model)
        return seen

    def cells_for(self, model: str, solved_only: bool = True) -> List[CellSummary]:
        cells = [c for c in self.cells if c.model == model and (c.solved or not solved_only)]
        return sorted(cells, key=lambda c: c.size)

    def _fit(self, model: str, attribute: str) -> Optional[PowerLawFit]:
        points = [(c.size, getattr(c, attribute)) for c in self.cells_for(model)]
        points = [(size, value) for size, value in points if value is not None and value > 0]
        if len(points) < MIN_FIT_POINTS:
            return None
        return fit_power_law(points)

    def fits(self) -> Dict[str, Dict[str, Optional[PowerLawFit]]]:
        """Per model: evaluations, total-time and model-building-time power laws (>= 3 sizes)."""
        return {
            model: {
                'evaluations': self._fit(model, 'mean_evals'),
                'total_time': self._fit(model, 't_total_ms'),
                'model_time': self._fit(model, 't_model_ms'),
            }
            for model in self.models
        }

    @property
    def unsolved(self) -> List[CellSummary]:
        return [c for c in self.cells if not c.solved]

    def to_dict(self) -> Dict:
        return {
            'name': self.name,
            'seed': self.seed,
            'spec_hash': self.spec_hash,
            'problem': self.problem,
            'k': self.k,
            'timing_comparable': self.timing_comparable,
            'cells': [asdict(c) for c in self.cells],
            'fits': {
                model: {key: (asdict(fit) if fit else None) for key, fit in model_fits.items()}
                for model, model_fits in self.fits().items()
            },
        }


def _provenance(report: ScalingReport) -> str:
    return f'# seed={report.seed} spec={report.spec_hash} timing_comparable={str(report.timing_comparable).lower()}'


def write_csv(report: ScalingReport, path: Union[str, Path]) -> Path:
    """Header on line 1, one row per cell, provenance as a trailing `#` comment."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', newline='', encoding='utf-8') as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        writer.writeheader()
        for cell in report.cells:
            writer.writerow(cell.csv_row())
        fh.write(_provenance(report) + '\n')
    return path


def read_csv(path: Union[str, Path]) -> ScalingReport:
    """Inverse of write_csv; `#` lines anywhere in the file carry provenance."""
    path = Path(path)
    meta = {}
    data_lines = []
    with path.open(encoding='utf-8') as fh:
        for line in fh:
            if line.startswith('#'):
                for token in line[1:].split():
                    key, _, value = token.partition('=')
                    meta[key] = value
            elif line.strip():
                data_lines.append(line)
    reader = csv.DictReader(data_lines)
    if tuple(reader.fieldnames or ()) != CSV_FIELDS:
        raise ValueError(f'{path}: неожиданный заголовок {reader.fieldnames}')
    cells = [CellSummary.from_csv_row(row) for row in reader]
    if not cells:
        raise ValueError(f'{path}: нет строк данных')
    return ScalingReport(
        problem=cells[0].problem,
        k=cells[0].k,
        seed=int(meta.get('seed', 0)),
        spec_hash=meta.get('spec', ''),
        cells=cells,
        timing_comparable=meta.get('timing_comparable', 'true') == 'true',
    )


def write_json(report: ScalingReport, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report.to_dict(), indent=2, ensure_ascii=False), encoding='utf-8')
    return path


def _figure_lines(report: ScalingReport, figure: str) -> List[str]:
    phases = [phase for phase, _ in PHASE_COLUMNS]
    if figure == FIGURE_EVALUATIONS:
        header = '# model size mean_evals sd_evals'
    elif figure == FIGURE_TOTAL_TIME:
        header = '# model size t_total_ms'
    else:
        header = '# model size ' + ' '.join(phases)

    lines = [_provenance(report), header]
    for model in report.models:
        for cell in report.cells_for(model):
            if figure == FIGURE_EVALUATIONS:
                values = [cell.mean_evals, cell.sd_evals]
            elif figure == FIGURE_TOTAL_TIME:
                values = [cell.t_total_ms]
            elif figure == FIGURE_PHASE_ABSOLUTE:
                values = [cell.phase_ms()[p] for p in phases]
            else:
                fractions = cell.phase_fractions()
                values = [fractions[p] for p in phases]
            lines.append(' '.join([model, str(cell.size)] + [format(v, '.10g') for v in values]))
        # пустые строки разделяют блоки для gnuplot `index`
        lines.extend(['', ''])
    return lines


def emit_plot_data(report: ScalingReport, out_dir: Union[str, Path],
                   figures: Sequence[str] = FIGURES) -> List[Path]:
    """One `<figure>.dat` table per requested figure."""
    if not report.cells:
        raise ValueError('отчёт пуст')
    unknown = [f for f in figures if f not in FIGURES]
    if unknown:
        raise ValueError(f'неизвестные графики {unknown}, допустимо: {FIGURES}')
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for figure in figures:
        path = out_dir / f'{figure}.dat'
        path.write_text('\n'.join(_figure_lines(report, figure)) + '\n', encoding='utf-8')
        paths.append(path)
    logger.info('таблицы для графиков записаны в %s (%d файлов)', out_dir, len(paths))
    return paths


def write_artifacts(report: ScalingReport, out_dir: Union[str, Path]) -> List[Path]:
    """results.csv, report.json and the plot tables."""
    out_dir = Path(out_dir)
    paths = [write_csv(report, out_dir / 'results.csv'), write_json(report, out_dir / 'report.json')]
    if any(cell.solved for cell in report.cells):
        paths.extend(emit_plot_data(report, out_dir / 'plots'))
    return paths


def report_from_experiment(experiment) -> ScalingReport:
    """Rebuild a ScalingReport from the cells of a persisted Experiment (finished cells only)."""
    cells = []
    for cell in experiment.cells.order_by('model_kind', 'size'):
        if cell.status == 'solved':
            cells.append(CellSummary(
                model=cell.model_kind,
                problem=experiment.problem,
                size=cell.size,
                k=experiment.k,
                pop_size=cell.population_size,
                runs=cell.runs,
                success_rate=cell.success_rate,
                mean_evals=cell.mean_evaluations,
                sd_evals=cell.sd_evaluations,
                t_select_ms=cell.t_select_ms,
                t_model_ms=cell.t_model_ms,
                t_sample_ms=cell.t_sample_ms,
                t_fitness_ms=cell.t_fitness_ms,
                t_total_ms=cell.t_total_ms,
            ))
        elif cell.status in ('unsolved', 'failed'):
            cells.append(unsolved_summary(cell.model_kind, experiment.problem, cell.size, experiment.k))
    return ScalingReport(
        problem=experiment.problem,
        k=experiment.k,
        seed=experiment.root_seed,
        spec_hash=experiment.spec_hash,
        cells=cells,
        timing_comparable=experiment.timing_comparable,
        name=experiment.name,
    )


def format_fit(fit: Optional[PowerLawFit]) -> str:
    if fit is None:
        return '— (меньше 3 размеров)'
    return f'n^{fit.exponent:.3f} ± {fit.stderr:.3f} (C={fit.coefficient:.4g}, R²={fit.r_squared:.4f})'
