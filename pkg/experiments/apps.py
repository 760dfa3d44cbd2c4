"""
Experiments app configuration.
"""
from django.apps import AppConfig


class ExperimentsConfig(AppConfig):
    """Campaign orchestration and the cim management command."""

    name = "experiments"
    verbose_name = "Experiments"
