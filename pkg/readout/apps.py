"""
Readout app configuration.
"""
from django.apps import AppConfig


class ReadoutConfig(AppConfig):
    """Interferometer readout model."""

    name = "readout"
    verbose_name = "Interferometer Readout"
