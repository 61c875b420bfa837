import os
from celery import Celery

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'eda_bench.settings')

app = Celery('eda_bench')

# CELERY_* из settings: брокер redis, сериализация JSON
app.config_from_object('django.conf:settings', namespace='CELERY')

# experiments.tasks.run_sweep_cell
app.autodiscover_tasks()
