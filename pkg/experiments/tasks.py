"""
Celery tasks для асинхронного выполнения ячеек sweep (`sweep --async`)
"""
import logging

from celery import shared_task
from django.db import OperationalError

logger = logging.getLogger(__name__)


@shared_task(bind=True, max_retries=2)
def run_sweep_cell(self, cell_id):
    """
    Выполняет одну ячейку эксперимента и, если она последняя, пишет итоговые файлы.

    Ошибки алгоритма фиксируются в ячейке (status=failed); повторяются только сбои БД.
    """
    from experiments.models import ExperimentCell
    from experiments.runner import finalize_experiment, run_cell_record

    try:
        cell = ExperimentCell.objects.select_related('experiment').get(pk=cell_id)
    except ExperimentCell.DoesNotExist:
        logger.warning('[run_sweep_cell] ячейка %s не найдена', cell_id)
        return {'status': 'missing', 'cell_id': cell_id}

    try:
        outcome = run_cell_record(cell)
    except OperationalError as exc:
        logger.exception('[run_sweep_cell] сбой БД на ячейке %s', cell_id)
        raise self.retry(exc=exc, countdown=30)

    experiment = cell.experiment
    experiment.refresh_from_db()
    if experiment.refresh_status() not in ('pending', 'running'):
        finalize_experiment(experiment)
        logger.info('[run_sweep_cell] эксперимент %s завершён: %s', experiment.pk, experiment.status)

    return {
        'status': outcome.status,
        'cell_id': cell_id,
        'model': outcome.model,
        'size': outcome.size,
        'population_size': outcome.summary.pop_size,
    }
