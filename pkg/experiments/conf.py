"""
Мост между settings.py и конфигурациями алгоритмов.

Код в `eda/` настройки Django не читает: значения EDA_* попадают туда только отсюда.
"""
from pathlib import Path
from typing import Any, Dict

from django.conf import settings

from eda.rbm import TrainConfig


def eda_options(**overrides) -> Dict[str, Any]:
    """Keyword arguments for EdaConfig (everything except model_kind and population_size)."""
    options = {
        'max_generations': settings.EDA_MAX_GENERATIONS,
        'stagnation_limit': settings.EDA_STAGNATION_LIMIT,
        'max_indegree': settings.EDA_MAX_INDEGREE,
        'gibbs_steps': settings.EDA_GIBBS_STEPS,
        'train': TrainConfig(max_epochs=settings.EDA_RBM_MAX_EPOCHS),
    }
    options.update({key: value for key, value in overrides.items() if value is not None})
    return options


def bisection_start() -> int:
    return settings.EDA_BISECTION_START


def bisection_cap() -> int:
    return settings.EDA_BISECTION_CAP


def default_workers() -> int:
    return settings.EDA_WORKERS


def results_dir() -> Path:
    return Path(settings.EDA_RESULTS_DIR)
