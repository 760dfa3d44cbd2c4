"""
Quantum app configuration.
"""
from django.apps import AppConfig


class QuantumConfig(AppConfig):
    """Positive-P sampling and squeezing cross-checks."""

    name = "quantum"
    verbose_name = "Quantum Noise Verification"
