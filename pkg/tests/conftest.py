import pytest

from core.dependencies.service_registry import service_registry
from graphs.ising import graph_to_ising
from graphs.models import WeightedGraph
from graphs.repositories import GsetRepository, MetadataRepository
from graphs.services import GraphService
from tests.factories import SimConfigFactory

K4_EDGES = ((0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0), (1, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0))

# a 6-vertex ring with one chord, small enough to brute-force by hand
G_TOY = """6 7
1 2 1
2 3 1
3 4 1
4 5 1
5 6 1
6 1 1
1 4 -1
"""


@pytest.fixture(autouse=True)
def fresh_registry(settings, tmp_path):
    settings.CIM_OUTPUT_DIR = tmp_path / "output"
    service_registry.reset()
    yield
    service_registry.reset()


@pytest.fixture
def k4_graph():
    return WeightedGraph(n=4, edges=K4_EDGES, name="K4")


@pytest.fixture
def k4_problem(k4_graph):
    return graph_to_ising(k4_graph)


@pytest.fixture
def gset_dir(tmp_path):
    directory = tmp_path / "gset"
    directory.mkdir()
    (directory / "toy.txt").write_text(G_TOY)
    return directory


@pytest.fixture
def metadata_file(tmp_path):
    path = tmp_path / "metadata.env"
    path.write_text("TOY_V=6\nTOY_E=7\nTOY_U_SDP=7.5\nTOY_E_NEG=1\n")
    return path


@pytest.fixture
def graph_service(gset_dir, metadata_file):
    return GraphService(GsetRepository(gset_dir), MetadataRepository(metadata_file))


@pytest.fixture
def sim_config():
    return SimConfigFactory()
