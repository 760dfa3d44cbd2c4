"""
Dynamics app configuration.
"""
from django.apps import AppConfig


class DynamicsConfig(AppConfig):
    """Langevin integration of OPO networks."""

    name = "dynamics"
    verbose_name = "OPO Network Dynamics"
