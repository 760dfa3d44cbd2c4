"""
Key-value run configuration files.

Run configs use the same ``KEY=value`` syntax as the project's ``.env`` files and are
parsed by django-environ, but into a private mapping so a run never leaks into
``os.environ``.
"""
import logging
from pathlib import Path
from typing import Any, Dict, Iterator, Mapping, Optional, Tuple

import environ
from django.core.exceptions import ImproperlyConfigured

from core.exceptions import ConfigError

logger = logging.getLogger(__name__)

ACCEPT_PREFIX = "ACCEPT_"


class RunConfig(environ.Env):
    """environ.Env bound to its own mapping instead of the process environment."""

    ENVIRON: Dict[str, str] = {}

    @classmethod
    def _bound(cls) -> type:
        return type(cls.__name__, (cls,), {"ENVIRON": {}})

    @classmethod
    def from_file(cls, path: Path, overrides: Optional[Mapping[str, Any]] = None) -> "RunConfig":
        """Parse a config file, then apply overrides (CLI flags win over file values)."""
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")

        bound = cls._bound()
        try:
            bound.read_env(str(path))
        except (OSError, UnicodeDecodeError) as e:
            raise ConfigError(f"cannot read config file {path}: {e}") from e
        if not bound.ENVIRON:
            raise ConfigError(f"config file {path} defines no keys")

        bound.ENVIRON.update(_stringify(overrides))
        logger.debug("loaded %d config keys from %s", len(bound.ENVIRON), path)
        return bound()

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "RunConfig":
        bound = cls._bound()
        bound.ENVIRON.update(_stringify(values))
        return bound()

    def __contains__(self, key: str) -> bool:
        return key in self.ENVIRON

    def keys(self) -> Iterator[str]:
        return iter(sorted(self.ENVIRON))

    def require(self, getter: str, key: str, **kwargs) -> Any:
        """Typed lookup that reports missing or malformed keys as ConfigError."""
        try:
            return getattr(self, getter)(key, **kwargs)
        except ImproperlyConfigured as e:
            raise ConfigError(str(e)) from e
        except (TypeError, ValueError) as e:
            raise ConfigError(f"invalid value for {key}: {self.ENVIRON.get(key)!r}") from e

    def acceptance_bands(self) -> Dict[str, Tuple[float, float]]:
        """Collect ACCEPT_<METRIC>=lo,hi declarations."""
        bands = {}
        for key in self.keys():
            if not key.startswith(ACCEPT_PREFIX):
                continue
            bounds = self.require("list", key, cast=float)
            if len(bounds) != 2 or bounds[0] > bounds[1]:
                raise ConfigError(f"{key} must be 'lo,hi' with lo <= hi")
            bands[key[len(ACCEPT_PREFIX):].lower()] = (bounds[0], bounds[1])
        return bands


def _stringify(values: Optional[Mapping[str, Any]]) -> Dict[str, str]:
    if not values:
        return {}
    return {key: str(value) for key, value in values.items() if value is not None}
