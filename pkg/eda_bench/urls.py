from django.contrib import admin
from django.http import JsonResponse
from django.urls import path

from experiments.models import Experiment


def health_check(request):
    running = Experiment.objects.filter(status='running').count()
    return JsonResponse({'status': 'ok', 'running_experiments': running})


urlpatterns = [
    path('health/', health_check),
    path('admin/', admin.site.urls),
]
