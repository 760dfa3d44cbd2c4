"""
With these settings, tests run faster.
"""

from .base import *  # noqa
from .base import BASE_DIR, env

# GENERAL
# ------------------------------------------------------------------------------
# https://docs.djangoproject.com/en/dev/ref/settings/#secret-key
SECRET_KEY = env(
    "DJANGO_SECRET_KEY",
    default="7qK9w2xTt1eXk3ZbQnRrLw5yVd8uHs0oJfPaGmCiNzYlEcBvDhU4gSjM6AqWtIxO",
)

# COHERENT ISING MACHINE
# ------------------------------------------------------------------------------
# Tests never pick up a developer's worker count or output directory
CIM_WORKERS = 1
CIM_OUTPUT_DIR = BASE_DIR / "output" / "test"

# Your stuff...
# ------------------------------------------------------------------------------
