"""
Graph service for problem loading, oracles and scoring.
"""
import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from django.conf import settings

from core.base import Service
from core.exceptions import CapabilityError, CimError

from .cubic import enumerate_cubic_graphs
from .ising import brute_force_ground, graph_to_ising, normalized_cut_score
from .models import InstanceMetadata, IsingProblem, SpinConfig, WeightedGraph
from .repositories import GsetRepository, MetadataRepository, instance_name

logger = logging.getLogger(__name__)


class GraphService(Service):
    """
    Service layer for Ising problems.

    Caches the cubic catalogue and oracle results, which are pure functions of their inputs.
    """

    def __init__(self, repository: GsetRepository, metadata: Optional[MetadataRepository] = None):
        super().__init__(repository)
        self.repository = repository
        self.metadata = metadata
        self._catalogue: Dict[int, List[WeightedGraph]] = {}
        self._ground: Dict[Tuple[str, bytes], Tuple[float, List[SpinConfig]]] = {}

    @property
    def oracle_max_spins(self) -> int:
        return settings.CIM_ORACLE_MAX_SPINS

    def load_graph(self, path: Path) -> WeightedGraph:
        """Load a G-set file, enforcing the desk-scale vertex cap."""
        graph = self.repository.get(path)
        cap = settings.CIM_GSET_MAX_VERTICES
        if graph.n > cap:
            if not settings.CIM_ALLOW_LARGE_GSET:
                raise CapabilityError(
                    f"{graph.name} has {graph.n} vertices, above the desk-scale cap of {cap}; "
                    "set CIM_ALLOW_LARGE_GSET=True to run it anyway"
                )
            logger.warning(
                "Running large instance %s (V=%d); expect high memory use and long runtimes", graph.name, graph.n
            )
        return graph

    def load_problem(self, path: Path) -> Tuple[WeightedGraph, IsingProblem]:
        graph = self.load_graph(path)
        return graph, graph_to_ising(graph)

    def metadata_for(self, path: Path) -> Optional[InstanceMetadata]:
        if self.metadata is None:
            return None
        try:
            return self.metadata.get(instance_name(path))
        except CimError as e:
            logger.warning("Metadata unavailable for %s: %s", path, e)
            return None

    def cubic_catalogue(self, n: int) -> List[WeightedGraph]:
        if n not in self._catalogue:
            self._catalogue[n] = enumerate_cubic_graphs(n, max_order=settings.CIM_CUBIC_MAX_ORDER)
        return self._catalogue[n]

    def oracle_available(self, problem: IsingProblem) -> bool:
        return problem.n <= self.oracle_max_spins

    def ground_states(self, problem: IsingProblem) -> Tuple[float, List[SpinConfig]]:
        """Exact ground energy and ground set, memoized per coupling matrix."""
        j = problem.j
        key = (f"{problem.n}:{j.nnz}", j.data.tobytes() + j.indices.tobytes() + j.indptr.tobytes())
        if key not in self._ground:
            try:
                self._ground[key] = brute_force_ground(problem, max_spins=self.oracle_max_spins)
            except CapabilityError as e:
                logger.error("Oracle unavailable for %s: %s", problem.name, e)
                raise
        return self._ground[key]

    def score(self, cut: float, meta: InstanceMetadata) -> float:
        return normalized_cut_score(cut, meta.e_neg, meta.u_sdp)
