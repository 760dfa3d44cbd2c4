from .base import *  # noqa
from .base import env

# GENERAL
# ------------------------------------------------------------------------------
# https://docs.djangoproject.com/en/dev/ref/settings/#debug
DEBUG = True
# https://docs.djangoproject.com/en/dev/ref/settings/#secret-key
SECRET_KEY = env(
    "DJANGO_SECRET_KEY",
    default="mpavRhuUiZRgvOfNNmzOXhnXyn7C5CNQDYjX8YDEFGjTxQyfnSbcxsXNWdqOB0bC",
)

# LOGGING
# ------------------------------------------------------------------------------
# Campaign progress is useful while developing
LOGGING["loggers"] = {  # noqa: F405
    "experiments": {"level": env("CIM_EXPERIMENTS_LOG_LEVEL", default="INFO")},
}

# Your stuff...
# ------------------------------------------------------------------------------
