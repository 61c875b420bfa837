from django.apps import AppConfig


class EdaAppConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'eda'
    verbose_name = 'Алгоритмы EDA'
