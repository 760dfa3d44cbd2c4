import math

import numpy as np
import pytest
from django.core.exceptions import ValidationError

from core.exceptions import CapabilityError, ConfigError, DomainError, ParseError
from graphs.ising import (
    brute_force_ground,
    cut_value,
    graph_to_ising,
    ising_energy,
    local_improvement,
    normalized_cut_score,
)
from graphs.models import IsingProblem, SpinConfig, WeightedGraph
from graphs.repositories import instance_name, load_metadata, parse_gset
from tests.conftest import G_TOY


class TestWeightedGraph:
    def test_rejects_self_loop(self):
        with pytest.raises(ValidationError):
            WeightedGraph(n=3, edges=((1, 1, 1.0),))

    def test_rejects_duplicate_edge_in_either_orientation(self):
        with pytest.raises(ValidationError):
            WeightedGraph(n=3, edges=((0, 1, 1.0), (1, 0, 2.0)))

    def test_rejects_vertex_out_of_range(self):
        with pytest.raises(ValidationError):
            WeightedGraph(n=2, edges=((0, 2, 1.0),))

    def test_negative_edges(self):
        graph = parse_gset(G_TOY)
        assert graph.negative_edges == 1
        assert graph.num_edges == 7

    def test_networkx_round_trip_keeps_weights(self, k4_graph):
        again = WeightedGraph.from_networkx(k4_graph.to_networkx())
        assert sorted(again.edges) == sorted(k4_graph.edges)


class TestIsingProblem:
    def test_rejects_asymmetric_matrix(self):
        with pytest.raises(ValidationError):
            IsingProblem.from_dense([[0, 1], [0, 0]])

    def test_rejects_diagonal(self):
        with pytest.raises(ValidationError):
            IsingProblem.from_dense([[1, 0], [0, 0]])

    def test_graph_to_ising_negates_weights(self, k4_problem):
        dense = k4_problem.dense()
        assert np.allclose(dense, -(np.ones((4, 4)) - np.eye(4)))


class TestSpinConfig:
    def test_from_index_sets_minus_on_set_bits(self):
        assert SpinConfig.from_index(5, 4).to_string() == "-+-+"

    def test_index_round_trip(self):
        assert all(SpinConfig.from_index(k, 5).to_index() == k for k in range(32))

    def test_from_amplitudes_breaks_zero_upwards(self):
        assert SpinConfig.from_amplitudes(np.array([0.0, -0.1, 0.2])).to_string() == "+-+"

    def test_rejects_zero_spin(self):
        with pytest.raises(ValidationError):
            SpinConfig(np.array([1, 0, -1]))


class TestParseGset:
    def test_parses_header_and_edges(self):
        graph = parse_gset("3 2\n1 2 1\n2 3 -1\n", name="TINY")
        assert graph.n == 3
        assert graph.edges == ((0, 1, 1.0), (1, 2, -1.0))
        assert graph.name == "TINY"

    def test_tolerates_crlf_and_blank_lines(self):
        graph = parse_gset("3 2\r\n\r\n1   2 1\r\n2 3 1\r\n")
        assert graph.num_edges == 2

    def test_reports_line_number(self):
        with pytest.raises(ParseError) as exc_info:
            parse_gset("3 2\n1 2 1\n2 x 1\n")
        assert exc_info.value.line_number == 3

    def test_edge_count_mismatch(self):
        with pytest.raises(ParseError):
            parse_gset("3 2\n1 2 1\n")

    def test_empty_input(self):
        with pytest.raises(ParseError):
            parse_gset("")

    def test_duplicate_edge_is_a_validation_error(self):
        with pytest.raises(ValidationError):
            parse_gset("3 2\n1 2 1\n2 1 1\n")


class TestMetadata:
    def test_load_metadata(self, metadata_file):
        meta = load_metadata(metadata_file)["TOY"]
        assert (meta.v, meta.e, meta.u_sdp, meta.e_neg) == (6, 7, 7.5, 1)

    def test_missing_field(self, tmp_path):
        path = tmp_path / "broken.env"
        path.write_text("G1_V=800\nG1_E=19176\n")
        with pytest.raises(ConfigError):
            load_metadata(path)

    def test_instance_name(self):
        assert instance_name("data/gset/g1.txt") == "G1"

    def test_shipped_metadata_covers_g1(self, settings):
        meta = load_metadata(settings.CIM_GSET_METADATA)
        assert meta["G1"].v == 800


class TestEnergy:
    def test_k4_two_two_split(self, k4_graph, k4_problem):
        spins = SpinConfig.from_string("++--")
        assert ising_energy(k4_problem, spins) == -2.0
        assert cut_value(k4_graph, spins) == 4.0

    def test_energy_is_flip_invariant(self, k4_problem):
        for k in range(16):
            spins = SpinConfig.from_index(k, 4)
            assert ising_energy(k4_problem, spins) == ising_energy(k4_problem, spins.flipped())

    def test_dimension_mismatch(self, k4_problem):
        with pytest.raises(DomainError):
            ising_energy(k4_problem, SpinConfig.from_string("++-"))

    def test_energy_and_cut_are_affine(self):
        graph = parse_gset(G_TOY)
        problem = graph_to_ising(graph)
        total = sum(w for _, _, w in graph.edges)
        for k in range(64):
            spins = SpinConfig.from_index(k, 6)
            assert math.isclose(cut_value(graph, spins), (total - ising_energy(problem, spins)) / 2)


class TestOracle:
    def test_k4_ground_set(self, k4_problem):
        energy, ground = brute_force_ground(k4_problem)
        assert energy == -2.0
        assert len(ground) == 6
        assert all(sum(s.sigma) == 0 for s in ground)

    def test_ground_set_closed_under_flip(self):
        problem = graph_to_ising(parse_gset(G_TOY))
        _, ground = brute_force_ground(problem)
        assert set(ground) == {s.flipped() for s in ground}

    def test_max_cut_of_toy_graph(self):
        graph = parse_gset(G_TOY)
        _, ground = brute_force_ground(graph_to_ising(graph))
        assert {cut_value(graph, s) for s in ground} == {5.0}

    def test_capped(self):
        with pytest.raises(CapabilityError):
            brute_force_ground(IsingProblem.zeros(6), max_spins=5)

    def test_uncoupled_problem_is_fully_degenerate(self):
        energy, ground = brute_force_ground(IsingProblem.zeros(3))
        assert energy == 0.0
        assert len(ground) == 8


class TestLocalImprovement:
    def test_never_raises_energy(self):
        problem = graph_to_ising(parse_gset(G_TOY))
        for k in range(64):
            spins = SpinConfig.from_index(k, 6)
            assert ising_energy(problem, local_improvement(problem, spins)) <= ising_energy(problem, spins)

    def test_k4_always_reaches_ground(self, k4_problem):
        for k in range(16):
            assert ising_energy(k4_problem, local_improvement(k4_problem, SpinConfig.from_index(k, 4))) == -2.0

    def test_ground_state_is_fixed_point(self, k4_problem):
        spins = SpinConfig.from_string("+-+-")
        assert local_improvement(k4_problem, spins) == spins

    def test_ties_flip_lowest_index(self, k4_problem):
        assert local_improvement(k4_problem, SpinConfig.from_string("++++")).to_string() == "--++"


class TestScore:
    def test_normalized_cut_score(self):
        assert normalized_cut_score(5.0, 1, 7.5) == pytest.approx(6 / 8.5)

    def test_negative_e_neg(self):
        with pytest.raises(DomainError):
            normalized_cut_score(1.0, -1, 2.0)

    def test_nonpositive_denominator(self):
        with pytest.raises(DomainError):
            normalized_cut_score(1.0, 0, 0.0)


class TestGraphService:
    def test_load_problem(self, graph_service):
        graph, problem = graph_service.load_problem("toy.txt")
        assert graph.name == "TOY"
        assert problem.n == 6

    def test_missing_file(self, graph_service):
        with pytest.raises(ConfigError):
            graph_service.load_graph("nope.txt")

    def test_vertex_cap(self, graph_service, settings):
        settings.CIM_GSET_MAX_VERTICES = 5
        with pytest.raises(CapabilityError):
            graph_service.load_graph("toy.txt")

    def test_vertex_cap_can_be_lifted(self, graph_service, settings):
        settings.CIM_GSET_MAX_VERTICES = 5
        settings.CIM_ALLOW_LARGE_GSET = True
        assert graph_service.load_graph("toy.txt").n == 6

    def test_metadata_for(self, graph_service, gset_dir):
        assert graph_service.metadata_for(gset_dir / "toy.txt").u_sdp == 7.5
        assert graph_service.metadata_for(gset_dir / "other.txt") is None

    def test_ground_states_are_memoized(self, graph_service, k4_problem):
        first = graph_service.ground_states(k4_problem)
        assert graph_service.ground_states(IsingProblem(j=k4_problem.j.copy())) is first
