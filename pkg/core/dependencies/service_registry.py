"""
centralized service registry for application-level initialization.
"""
import logging
from typing import Any, Dict, Optional

from django.conf import settings

logger = logging.getLogger(__name__)


class ServiceRegistry:
    """centralized service registry; services are built once from settings and shared."""

    def __init__(self):
        self._services: Dict[str, Any] = {}
        self._initialized = False

    def initialize_all_services(self) -> None:
        """initialize all services at application startup."""
        if self._initialized:
            return

        logger.info("initializing all services...")
        self._initialize_graph_service()
        self._initialize_simulation_service()
        self._initialize_squeezing_service()
        self._initialize_readout_service()
        self._initialized = True
        logger.info("core services initialized successfully")

    def _initialize_graph_service(self) -> None:
        """initialize graph service over the benchmark directory and metadata sidecar."""
        from graphs.repositories import GsetRepository, MetadataRepository
        from graphs.services import GraphService

        metadata = None
        if settings.CIM_GSET_METADATA.is_file():
            metadata = MetadataRepository(settings.CIM_GSET_METADATA)
        else:
            logger.warning("benchmark metadata %s not found; G-set scoring unavailable", settings.CIM_GSET_METADATA)
        self._services["graph"] = GraphService(GsetRepository(settings.CIM_GSET_DIR), metadata)
        logger.info("graph service initialized")

    def _initialize_simulation_service(self) -> None:
        from dynamics.repositories import SimConfigRepository
        from dynamics.services import SimulationService

        self._services["simulation"] = SimulationService(SimConfigRepository(settings.CIM_CONFIG_DIR))
        logger.info("simulation service initialized")

    def _initialize_squeezing_service(self) -> None:
        from quantum.services import SqueezingService

        self._services["squeezing"] = SqueezingService()
        logger.info("squeezing service initialized")

    def _initialize_readout_service(self) -> None:
        from readout.services import ReadoutService

        self._services["readout"] = ReadoutService()
        logger.info("readout service initialized")

    def _get(self, name: str):
        if not self._initialized:
            self.initialize_all_services()
        return self._services[name]

    def get_graph_service(self):
        return self._get("graph")

    def get_simulation_service(self):
        return self._get("simulation")

    def get_squeezing_service(self):
        return self._get("squeezing")

    def get_readout_service(self):
        return self._get("readout")

    def get_campaign_service(self, workers: Optional[int] = None):
        """campaign service bound to a worker pool size; not cached since the size varies per run."""
        from experiments.services import CampaignService

        return CampaignService(self.get_graph_service(), workers=workers or settings.CIM_WORKERS)

    def is_initialized(self) -> bool:
        """check if services are initialized."""
        return self._initialized

    def reset(self) -> None:
        """reset service registry (for testing)."""
        self._services.clear()
        self._initialized = False


#global service registry instance
service_registry = ServiceRegistry()
