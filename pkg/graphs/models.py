"""
Problem models for Ising / MAX-CUT instances.

These are conceptual value objects, not Django ORM models. All of them are immutable
after construction so they can be shared freely between trial workers.
"""
import math
from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
from django.core.exceptions import ValidationError
from scipy import sparse

Edge = Tuple[int, int, float]


@dataclass(frozen=True)
class WeightedGraph:
    """
    Undirected weighted graph with 0-indexed vertices.

    Edges keep the order they were ingested in; the (u, v) orientation carries no meaning.
    """

    n: int
    edges: Tuple[Edge, ...] = ()
    name: Optional[str] = None

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("Graph must have at least one vertex")

        normalized = []
        seen = set()
        for u, v, w in self.edges:
            u, v, w = int(u), int(v), float(w)
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValidationError(f"Edge ({u + 1}, {v + 1}) references a vertex outside 1..{self.n}")
            if u == v:
                raise ValidationError(f"Self-loop on vertex {u + 1}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValidationError(f"Duplicate edge ({key[0] + 1}, {key[1] + 1})")
            seen.add(key)
            normalized.append((u, v, w))
        object.__setattr__(self, "edges", tuple(normalized))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def negative_edges(self) -> int:
        """E_neg: number of edges with negative weight."""
        return sum(1 for _, _, w in self.edges if w < 0)

    @cached_property
    def edge_arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(u, v, w) as numpy arrays for vectorized evaluation."""
        if not self.edges:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty.copy(), np.zeros(0, dtype=float)
        us, vs, ws = zip(*self.edges)
        return np.asarray(us, dtype=np.int64), np.asarray(vs, dtype=np.int64), np.asarray(ws, dtype=float)

    def degrees(self) -> List[int]:
        deg = [0] * self.n
        for u, v, _ in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n))
        graph.add_weighted_edges_from(self.edges)
        return graph

    @classmethod
    def from_networkx(cls, graph: nx.Graph, name: Optional[str] = None) -> "WeightedGraph":
        """Build from a networkx graph whose nodes are 0..n-1; missing weights default to 1."""
        edges = sorted((min(u, v), max(u, v), float(data.get("weight", 1.0))) for u, v, data in graph.edges(data=True))
        return cls(n=graph.number_of_nodes(), edges=tuple(edges), name=name)


@dataclass(frozen=True, eq=False)
class IsingProblem:
    """Spin count plus a symmetric, zero-diagonal coupling matrix J (CSR)."""

    j: sparse.csr_matrix
    name: Optional[str] = None

    def __post_init__(self):
        matrix = sparse.csr_matrix(self.j, dtype=float, copy=True)
        if matrix.shape[0] != matrix.shape[1] or matrix.shape[0] < 1:
            raise ValidationError(f"Coupling matrix must be square and non-empty, got shape {matrix.shape}")
        if not np.all(np.isfinite(matrix.data)):
            raise ValidationError("Coupling matrix has non-finite entries")
        if np.any(matrix.diagonal() != 0):
            raise ValidationError("Coupling matrix must have a zero diagonal")
        if (matrix != matrix.T).nnz:
            raise ValidationError("Coupling matrix must be symmetric")
        matrix.eliminate_zeros()
        matrix.sort_indices()
        object.__setattr__(self, "j", matrix)

    @property
    def n(self) -> int:
        return self.j.shape[0]

    @classmethod
    def zeros(cls, n: int, name: Optional[str] = None) -> "IsingProblem":
        return cls(j=sparse.csr_matrix((n, n), dtype=float), name=name)

    @classmethod
    def from_dense(cls, matrix: Sequence[Sequence[float]], name: Optional[str] = None) -> "IsingProblem":
        return cls(j=sparse.csr_matrix(np.asarray(matrix, dtype=float)), name=name)

    def dense(self) -> np.ndarray:
        return self.j.toarray()

    def neighbors(self, i: int) -> Tuple[np.ndarray, np.ndarray]:
        """Column indices and couplings of row i."""
        start, end = self.j.indptr[i], self.j.indptr[i + 1]
        return self.j.indices[start:end], self.j.data[start:end]


@dataclass(frozen=True, eq=False)
class SpinConfig:
    """Vector of Ising spins, each exactly +1 or -1."""

    sigma: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.sigma)
        if arr.ndim != 1 or arr.size < 1:
            raise ValidationError("Spin configuration must be a non-empty vector")
        if not np.all((arr == 1) | (arr == -1)):
            raise ValidationError("Spins must be exactly +1 or -1")
        arr = arr.astype(np.int8)
        arr.setflags(write=False)
        object.__setattr__(self, "sigma", arr)

    @property
    def n(self) -> int:
        return int(self.sigma.size)

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SpinConfig) and np.array_equal(self.sigma, other.sigma)

    def __hash__(self) -> int:
        return hash(self.sigma.tobytes())

    def __repr__(self) -> str:
        return f"SpinConfig({self.to_string()})"

    def flipped(self) -> "SpinConfig":
        """Global complement -s."""
        return SpinConfig(-self.sigma)

    def to_string(self) -> str:
        return "".join("+" if x > 0 else "-" for x in self.sigma)

    @classmethod
    def from_string(cls, text: str) -> "SpinConfig":
        mapping = {"+": 1, "-": -1}
        try:
            return cls(np.array([mapping[ch] for ch in text.strip()], dtype=np.int8))
        except KeyError as e:
            raise ValidationError(f"Invalid spin character {e.args[0]!r}") from e

    @classmethod
    def from_index(cls, index: int, n: int) -> "SpinConfig":
        """Spin j is -1 when bit j of index is set (slot 0 is the least significant bit)."""
        bits = (int(index) >> np.arange(n)) & 1
        return cls((1 - 2 * bits).astype(np.int8))

    @classmethod
    def from_amplitudes(cls, c: np.ndarray) -> "SpinConfig":
        """sign(c) with zero broken toward +1."""
        return cls(np.where(np.asarray(c) >= 0, 1, -1).astype(np.int8))

    def to_index(self) -> int:
        return int(sum(1 << j for j, x in enumerate(self.sigma) if x < 0))


PHASE_ZERO = 0.0
PHASE_PI = math.pi


@dataclass(frozen=True)
class DelayLine:
    """One delay line of m slots with a {0, pi} injection phase."""

    m: int
    phase: float = PHASE_PI
    amplitude: float = 1.0
    enabled: bool = True

    def __post_init__(self):
        if math.isclose(self.phase, PHASE_ZERO, abs_tol=1e-12):
            object.__setattr__(self, "phase", PHASE_ZERO)
        elif math.isclose(self.phase, PHASE_PI, abs_tol=1e-12):
            object.__setattr__(self, "phase", PHASE_PI)
        else:
            raise ValidationError(f"Delay phase must be 0 or pi, got {self.phase}")
        if self.amplitude < 0 or not math.isfinite(self.amplitude):
            raise ValidationError("Delay amplitude must be a nonnegative real")

    @property
    def sign(self) -> int:
        return 1 if self.phase == PHASE_ZERO else -1

    def to_token(self) -> str:
        if not self.enabled:
            return f"{self.m}:off"
        phase = "0" if self.phase == PHASE_ZERO else "pi"
        if self.amplitude == 1.0:
            return f"{self.m}:{phase}"
        return f"{self.m}:{phase}:{self.amplitude:g}"


@dataclass(frozen=True)
class DelaySpec:
    """Ring of n time slots with a set of delay lines."""

    n: int
    lines: Tuple[DelayLine, ...] = ()

    def __post_init__(self):
        if self.n < 2:
            raise ValidationError("Delay ring needs at least two slots")
        object.__setattr__(self, "lines", tuple(self.lines))
        delays = [line.m for line in self.lines]
        if len(set(delays)) != len(delays):
            raise ValidationError(f"Delays must be distinct, got {delays}")
        for m in delays:
            if not 1 <= m <= self.n - 1:
                raise ValidationError(f"Delay {m} outside 1..{self.n - 1}")

    @classmethod
    def from_phases(cls, phases: Sequence[Optional[float]], amplitude: float = 1.0) -> "DelaySpec":
        """Delays 1..n-1 with the given phases; None blocks a delay."""
        lines = tuple(
            DelayLine(m=m, phase=PHASE_PI if phase is None else phase, amplitude=amplitude, enabled=phase is not None)
            for m, phase in enumerate(phases, start=1)
        )
        return cls(n=len(phases) + 1, lines=lines)

    @classmethod
    def from_string(cls, n: int, text: str) -> "DelaySpec":
        """
        Parse "m:phase[:amplitude]" tokens separated by commas.

        phase is 0, pi or off (blocked delay), e.g. "1:pi,2:0,3:pi".
        """
        lines = []
        for token in filter(None, (part.strip() for part in text.split(","))):
            parts = token.split(":")
            if len(parts) not in (2, 3):
                raise ValidationError(f"Invalid delay token {token!r}")
            try:
                m = int(parts[0])
                amplitude = float(parts[2]) if len(parts) == 3 else 1.0
            except ValueError as e:
                raise ValidationError(f"Invalid delay token {token!r}") from e
            phase_token = parts[1].strip().lower()
            if phase_token == "off":
                lines.append(DelayLine(m=m, amplitude=amplitude, enabled=False))
            elif phase_token in ("0", "zero"):
                lines.append(DelayLine(m=m, phase=PHASE_ZERO, amplitude=amplitude))
            elif phase_token in ("pi", "π"):
                lines.append(DelayLine(m=m, phase=PHASE_PI, amplitude=amplitude))
            else:
                raise ValidationError(f"Invalid delay phase {parts[1]!r}")
        return cls(n=n, lines=tuple(lines))

    def to_string(self) -> str:
        return ",".join(line.to_token() for line in self.lines)

    def label(self) -> str:
        """Bracketed phase list such as [pi,0,pi]."""
        tokens = []
        for line in sorted(self.lines, key=lambda item: item.m):
            if not line.enabled:
                tokens.append("off")
            else:
                tokens.append("0" if line.phase == PHASE_ZERO else "pi")
        return "[" + ",".join(tokens) + "]"


@dataclass(frozen=True)
class InstanceMetadata:
    """Scoring metadata for one benchmark instance."""

    name: str
    v: int
    e: int
    u_sdp: float
    e_neg: int = 0
