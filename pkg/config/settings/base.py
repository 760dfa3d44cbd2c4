"""
Base settings to build other settings files upon.
"""
from pathlib import Path

import environ

BASE_DIR = Path(__file__).resolve(strict=True).parent.parent.parent
# opo_ising/
APPS_DIR = BASE_DIR
env = environ.Env()

READ_DOT_ENV_FILE = env.bool("DJANGO_READ_DOT_ENV_FILE", default=False)
if READ_DOT_ENV_FILE:
    # OS environment variables take precedence over variables from .env
    env.read_env(str(BASE_DIR / ".env"))

# GENERAL
# ------------------------------------------------------------------------------
# https://docs.djangoproject.com/en/dev/ref/settings/#debug
DEBUG = env.bool("DJANGO_DEBUG", False)
TIME_ZONE = "UTC"
LANGUAGE_CODE = "en-us"
USE_I18N = False
USE_TZ = True

# DATABASES
# ------------------------------------------------------------------------------
# Simulations are pure functions of their inputs; nothing is persisted in a database.
DATABASES = {}
DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"

# APPS
# ------------------------------------------------------------------------------
DJANGO_APPS: list = []
THIRD_PARTY_APPS = []

LOCAL_APPS = [
    "core.apps.CoreConfig",  # service registry initialization
    "graphs",
    "dynamics",
    "quantum",
    "readout",
    "experiments",
]
# https://docs.djangoproject.com/en/dev/ref/settings/#installed-apps
INSTALLED_APPS = DJANGO_APPS + THIRD_PARTY_APPS + LOCAL_APPS

# MIGRATIONS
# ------------------------------------------------------------------------------
MIGRATION_MODULES = {}

# LOGGING
# ------------------------------------------------------------------------------
# https://docs.djangoproject.com/en/dev/ref/settings/#logging
# See https://docs.djangoproject.com/en/dev/topics/logging for
# more details on how to customize your logging configuration.
LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "%(levelname)s %(asctime)s %(module)s %(process)d %(thread)d %(message)s",
        },
    },
    "handlers": {
        "console": {
            "level": "DEBUG",
            "class": "logging.StreamHandler",
            "formatter": "verbose",
        }
    },
    "root": {"level": env("DJANGO_LOG_LEVEL", default="INFO"), "handlers": ["console"]},
}

# COHERENT ISING MACHINE
# ------------------------------------------------------------------------------
# Default size of the trial worker pool; --workers on the command line wins.
CIM_WORKERS = env.int("CIM_WORKERS", default=1)
CIM_OUTPUT_DIR = Path(env("CIM_OUTPUT_DIR", default=str(BASE_DIR / "output")))
CIM_CONFIG_DIR = BASE_DIR / "configs"

# G-set benchmark files and the metadata sidecar (V, E, U_SDP, E_neg per instance)
CIM_GSET_DIR = Path(env("CIM_GSET_DIR", default=str(BASE_DIR / "data" / "gset")))
CIM_GSET_METADATA = Path(env("CIM_GSET_METADATA", default=str(BASE_DIR / "data" / "gset_metadata.env")))
# Desk-scale cap; larger instances need CIM_ALLOW_LARGE_GSET
CIM_GSET_MAX_VERTICES = env.int("CIM_GSET_MAX_VERTICES", default=2000)
CIM_ALLOW_LARGE_GSET = env.bool("CIM_ALLOW_LARGE_GSET", default=False)

# Exhaustive oracle and cubic enumeration caps
CIM_ORACLE_MAX_SPINS = env.int("CIM_ORACLE_MAX_SPINS", default=24)
CIM_CUBIC_MAX_ORDER = env.int("CIM_CUBIC_MAX_ORDER", default=10)
