"""
Worker pool for independent trials.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import List, Optional, Sequence

from core.dependencies.service_registry import service_registry
from dynamics.integrators import Coupling
from dynamics.models import SimConfig, TrialResult
from dynamics.services import SimulationService
from graphs.models import IsingProblem, WeightedGraph

logger = logging.getLogger(__name__)


def _run_one(
    simulation: SimulationService,
    problem: IsingProblem,
    cfg: SimConfig,
    graph: Optional[WeightedGraph],
    xi: Optional[Coupling],
    xi_quad: Optional[Coupling],
    trial_index: int,
) -> TrialResult:
    return simulation.run_trial(problem, cfg, trial_index, graph=graph, xi=xi, xi_quad=xi_quad)


class TrialRunner:
    """
    Runs trials inline or on a process pool.

    Results come back in trial-index order and every trial seeds its own stream, so the
    worker count never changes the outcome. The simulation service defaults to the registry's
    and travels to the workers with each task.
    """

    def __init__(self, workers: int = 1, simulation: Optional[SimulationService] = None):
        if workers < 1:
            raise ValueError(f"workers must be at least 1, got {workers}")
        self.workers = workers
        self.simulation = simulation or service_registry.get_simulation_service()

    def run(
        self,
        problem: IsingProblem,
        cfg: SimConfig,
        indices: Sequence[int],
        graph: Optional[WeightedGraph] = None,
        xi: Optional[Coupling] = None,
        xi_quad: Optional[Coupling] = None,
    ) -> List[TrialResult]:
        task = partial(_run_one, self.simulation, problem, cfg, graph, xi, xi_quad)
        indices = list(indices)
        if self.workers <= 1 or len(indices) <= 1:
            return [task(i) for i in indices]

        chunksize = max(1, len(indices) // (4 * self.workers))
        try:
            with ProcessPoolExecutor(max_workers=self.workers) as executor:
                return list(executor.map(task, indices, chunksize=chunksize))
        except (PermissionError, OSError) as e:
            logger.warning("Process pool unavailable (%s); running %d trials inline", e, len(indices))
            return [task(i) for i in indices]
