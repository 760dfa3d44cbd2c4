"""
Graphs app configuration.
"""
from django.apps import AppConfig


class GraphsConfig(AppConfig):
    """Ising / MAX-CUT problem representation."""

    name = "graphs"
    verbose_name = "Ising Problems"
