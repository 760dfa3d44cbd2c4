"""
Graph repositories for benchmark files and their scoring metadata.
"""
import logging
import re
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Union

from django.core.exceptions import ValidationError

from core.base import Repository
from core.exceptions import ConfigError, ParseError
from core.utils.env_config import RunConfig

from .models import InstanceMetadata, WeightedGraph

logger = logging.getLogger(__name__)

METADATA_KEY = re.compile(r"^(?P<name>[A-Za-z0-9]+)_(?P<field>V|E|U_SDP|E_NEG)$")


def parse_gset(text: Union[str, Iterable[str]], name: Optional[str] = None) -> WeightedGraph:
    """
    Parse the G-set text format: a "n m" header followed by m "u v w" lines (1-indexed).

    CRLF line endings, blank lines and repeated whitespace are tolerated. Malformed lines
    raise ParseError with the offending line number; duplicate edges and self-loops raise
    ValidationError.
    """
    lines = text.splitlines() if isinstance(text, str) else text

    header = None
    edges = []
    expected = 0
    for line_number, raw in enumerate(lines, start=1):
        tokens = raw.split()
        if not tokens:
            continue

        if header is None:
            if len(tokens) != 2:
                raise ParseError(f"header must be 'n m', got {raw.strip()!r}", line_number)
            try:
                header = (int(tokens[0]), int(tokens[1]))
            except ValueError:
                raise ParseError(f"header must hold two integers, got {raw.strip()!r}", line_number)
            if header[0] < 1 or header[1] < 0:
                raise ParseError(f"invalid header counts {header}", line_number)
            expected = header[1]
            continue

        if len(edges) == expected:
            raise ParseError(f"more than {expected} edge lines", line_number)
        if len(tokens) != 3:
            raise ParseError(f"edge line must be 'u v w', got {raw.strip()!r}", line_number)
        try:
            u, v, w = int(tokens[0]), int(tokens[1]), float(tokens[2])
        except ValueError:
            raise ParseError(f"edge line must be 'u v w', got {raw.strip()!r}", line_number)
        if not (1 <= u <= header[0] and 1 <= v <= header[0]):
            raise ParseError(f"vertex out of range 1..{header[0]} in {raw.strip()!r}", line_number)
        edges.append((u - 1, v - 1, w))

    if header is None:
        raise ParseError("empty input, expected 'n m' header")
    if len(edges) != expected:
        raise ParseError(f"expected {expected} edge lines, found {len(edges)}")

    return WeightedGraph(n=header[0], edges=tuple(edges), name=name)


def load_metadata(path: Path) -> Dict[str, InstanceMetadata]:
    """Read the key-value sidecar with <NAME>_V, <NAME>_E, <NAME>_U_SDP, <NAME>_E_NEG keys."""
    config = RunConfig.from_file(path)

    fields: Dict[str, Dict[str, str]] = {}
    for key in config.keys():
        match = METADATA_KEY.match(key)
        if not match:
            logger.warning("ignoring unknown metadata key %s in %s", key, path)
            continue
        fields.setdefault(match.group("name").upper(), {})[match.group("field")] = key

    metadata = {}
    for name, keys in sorted(fields.items()):
        missing = {"V", "E", "U_SDP"} - keys.keys()
        if missing:
            raise ConfigError(f"metadata for {name} is missing {sorted(missing)}")
        metadata[name] = InstanceMetadata(
            name=name,
            v=config.require("int", keys["V"]),
            e=config.require("int", keys["E"]),
            u_sdp=config.require("float", keys["U_SDP"]),
            e_neg=config.require("int", keys["E_NEG"]) if "E_NEG" in keys else 0,
        )
    return metadata


def instance_name(path: Path) -> str:
    """Instance key of a benchmark file: its stem, upper-cased (g1.txt -> G1)."""
    return Path(path).stem.upper()


class GsetRepository(Repository):
    """Repository for G-set benchmark files in a directory."""

    def get(self, key: Union[str, Path]) -> WeightedGraph:
        """Load one graph by file name or path."""
        path = self.resolve(str(key))
        if not path.is_file():
            raise ConfigError(f"graph file not found: {path}")
        try:
            with open(path, encoding="utf-8", newline="") as handle:
                graph = parse_gset(handle, name=instance_name(path))
        except (ParseError, ValidationError) as e:
            logger.error("Failed to parse graph file %s: %s", path, e)
            raise
        logger.info("Loaded graph %s (V=%d, E=%d)", graph.name, graph.n, graph.num_edges)
        return graph

    def list(self) -> List[Path]:
        if self.root is None or not self.root.is_dir():
            return []
        return sorted(path for path in self.root.iterdir() if path.is_file() and not path.name.startswith("."))


class MetadataRepository(Repository):
    """Repository over the benchmark metadata sidecar file."""

    def __init__(self, path: Path):
        super().__init__(Path(path).parent)
        self.path = Path(path)
        self._cache: Optional[Dict[str, InstanceMetadata]] = None

    def _load(self) -> Dict[str, InstanceMetadata]:
        if self._cache is None:
            self._cache = load_metadata(self.path)
        return self._cache

    def get(self, key: str) -> Optional[InstanceMetadata]:
        return self._load().get(key.upper())

    def list(self) -> List[InstanceMetadata]:
        return list(self._load().values())
