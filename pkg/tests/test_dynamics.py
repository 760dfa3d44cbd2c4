import math
import re

import numpy as np
import pandas as pd
import pytest
from django.core.exceptions import ValidationError

from core.dependencies.service_registry import service_registry
from core.exceptions import DivergenceError
from core.utils.env_config import RunConfig
from core.utils.seeding import trial_rng
from dynamics.integrators import as_operator, assemble_couplings, drift_arrays, euler_maruyama, step_fixed
from dynamics.models import (
    INTEGRATOR_ADAPTIVE,
    PUMP_LINEAR_RAMP,
    OpoNetworkState,
    PumpSchedule,
    SimConfig,
    Trajectory,
)
from dynamics.repositories import SimConfigRepository, export_trajectory_csv, sim_config_from
from dynamics.services import detect_build_up, normalized_to_seconds, run_trial
from graphs.models import IsingProblem
from tests.factories import NoiseFreeSimConfigFactory, SimConfigFactory


def _trajectory(times, c):
    c = np.asarray(c, dtype=float).reshape(len(times), -1)
    return Trajectory(times=np.asarray(times, dtype=float), c=c, s=np.zeros_like(c))


FERRO_K4_XI = as_operator(assemble_couplings(IsingProblem.from_dense(np.ones((4, 4)) - np.eye(4)), 0.1))


class TestSimConfig:
    @pytest.mark.parametrize(
        "changes",
        [
            {"dt": 0.0},
            {"dt": 0.2},
            {"t_max": 0.5},
            {"a_s": 0.0},
            {"integrator": "rk4"},
            {"coupling_mode": "cubic"},
            {"sample_stride": 0},
            {"seed": -1},
            {"build_up_fraction": 1.5},
            {"gamma_s": 0.0},
        ],
    )
    def test_rejects_invalid_values(self, changes):
        with pytest.raises(ValidationError):
            SimConfig(**changes)

    def test_infinite_a_s_is_noise_free(self):
        assert SimConfig(a_s=math.inf).noise_free

    def test_pump_validation(self):
        with pytest.raises(ValidationError):
            PumpSchedule.constant(-0.1)
        with pytest.raises(ValidationError):
            PumpSchedule.ramp(0.0, 2.2, 0.0)

    def test_pump_describe(self):
        assert PumpSchedule.constant(1.1).describe() == "constant(1.1)"
        assert PumpSchedule.ramp(0, 2.2, 1500).describe() == "ramp(0, 2.2, 1500)"


class TestOpoNetworkState:
    def test_vacuum(self):
        state = OpoNetworkState.vacuum(3)
        assert state.n == 3
        assert not state.c.any() and not state.s.any()

    def test_rejects_non_finite(self):
        with pytest.raises(ValidationError):
            OpoNetworkState(c=[math.nan], s=[0.0])

    def test_rejects_mismatched_shapes(self):
        with pytest.raises(ValidationError):
            OpoNetworkState(c=[0.0, 1.0], s=[0.0])

    def test_arrays_are_read_only(self):
        state = OpoNetworkState(c=[0.1], s=[0.2])
        with pytest.raises(ValueError):
            state.c[0] = 1.0


class TestDetectBuildUp:
    def test_first_settled_sample(self):
        times = np.arange(101.0)
        assert detect_build_up(_trajectory(times, np.where(times >= 20, 1.0, 0.0))) == 20.0

    def test_sign_flip_resets_the_clock(self):
        times = np.arange(101.0)
        c = np.where(times >= 20, 1.0, 0.0)
        c[40] = -1.0
        assert detect_build_up(_trajectory(times, c)) == 41.0

    def test_power_threshold(self):
        times = np.arange(101.0)
        c = np.clip(times / 50.0, 0.0, 1.0)
        # c^2 >= 0.9 from c >= 0.9487, i.e. t >= 47.43
        assert detect_build_up(_trajectory(times, c)) == 48.0

    def test_zero_final_power(self):
        times = np.arange(11.0)
        assert detect_build_up(_trajectory(times, np.zeros(11))) is None

    def test_too_close_to_horizon(self):
        times = np.arange(101.0)
        assert detect_build_up(_trajectory(times, np.where(times >= 95, 1.0, 0.0))) is None

    def test_accepts_state_sequence(self):
        states = [OpoNetworkState(c=[x], s=[0.0], t=t) for t, x in enumerate([0.0, 1.0] + [1.0] * 20)]
        assert detect_build_up(states) == 1.0


class TestRunTrial:
    def test_noise_free_vacuum_stays_at_origin(self, k4_problem):
        cfg = NoiseFreeSimConfigFactory()
        result = run_trial(k4_problem, cfg, 0)
        assert result.ok
        assert not result.final_state.c.any()
        assert result.build_up_time is None
        assert result.spins.to_string() == "++++"
        assert result.final_energy == 6.0

    def test_same_seed_same_trial(self, k4_problem):
        cfg = SimConfigFactory(t_max=40.0)
        first = run_trial(k4_problem, cfg, 3)
        again = run_trial(k4_problem, cfg, 3)
        other = run_trial(k4_problem, cfg, 4)
        assert first.final_state == again.final_state
        assert first.final_state != other.final_state

    def test_horizon_is_hit_exactly(self, k4_problem):
        cfg = SimConfigFactory(t_max=10.03, keep_trajectory=True)
        result = run_trial(k4_problem, cfg, 0)
        assert result.final_state.t == 10.03
        times = result.trajectory.times
        assert times[0] == 0.0 and times[-1] == 10.03
        assert np.all(np.diff(times) > 0)
        assert result.steps == 201

    def test_trajectory_only_when_requested(self, k4_problem):
        assert run_trial(k4_problem, SimConfigFactory(t_max=5.0), 0).trajectory is None

    @pytest.mark.parametrize("integrator", ["fixed_step", INTEGRATOR_ADAPTIVE])
    def test_single_oscillator_builds_up_above_threshold(self, integrator):
        cfg = SimConfigFactory(pump=PumpSchedule.constant(1.5), integrator=integrator, t_max=200.0)
        result = run_trial(IsingProblem.zeros(1), cfg, 0)
        assert result.build_up_time is not None
        assert result.build_up_time < 100.0
        assert abs(result.final_state.c[0]) == pytest.approx(math.sqrt(0.5), abs=0.1)
        assert abs(result.final_state.s[0]) < 0.1

    def test_cut_reported_with_graph(self, k4_graph, k4_problem):
        result = run_trial(k4_problem, SimConfigFactory(t_max=60.0), 1, graph=k4_graph)
        assert result.final_cut == (6 - result.final_energy) / 2

    def test_ramp_pump_runs(self, k4_problem):
        cfg = SimConfigFactory(pump=PumpSchedule(kind=PUMP_LINEAR_RAMP, t_ramp=100.0), t_max=100.0)
        assert run_trial(k4_problem, cfg, 0).ok

    def test_matches_iterated_step_fixed_on_the_trial_stream(self, k4_problem):
        cfg = SimConfigFactory(t_max=3.0, dt=0.07, sample_stride=1, keep_trajectory=True)
        result = run_trial(k4_problem, cfg, 2)

        xi = as_operator(assemble_couplings(k4_problem, cfg.xi_scale))
        rng = trial_rng(cfg.seed, 2)
        state = OpoNetworkState.vacuum(4)
        steps = math.ceil(cfg.t_max / cfg.dt - 1e-9)
        for k in range(steps):
            width = cfg.t_max - k * cfg.dt if k == steps - 1 else cfg.dt
            state = step_fixed(state, width, cfg.pump.p, xi, rng, cfg.a_s)
            assert np.allclose(result.trajectory.c[k + 1], state.c, rtol=0, atol=1e-12)
            assert np.allclose(result.trajectory.s[k + 1], state.s, rtol=0, atol=1e-12)

        assert result.steps == steps == 43
        assert state.t == pytest.approx(cfg.t_max)
        assert np.allclose(result.final_state.c, state.c, rtol=0, atol=1e-12)

    def test_divergence_is_reported_at_the_failing_step(self, k4_problem):
        cfg = SimConfigFactory(xi_scale=-1e6, dt=0.1, t_max=50.0, sample_stride=10_000)
        with pytest.raises(DivergenceError) as excinfo:
            run_trial(k4_problem, cfg, 0)
        t = float(re.search(r"t=(\S+);", str(excinfo.value)).group(1))
        assert t < 5.0

    def test_single_oscillator_settles_at_root_of_excess_pump(self):
        cfg = SimConfigFactory(pump=PumpSchedule.constant(2.0), t_max=200.0)
        final = run_trial(IsingProblem.zeros(1), cfg, 0).final_state
        assert abs(final.c[0]) == pytest.approx(1.0, rel=0.15)
        assert abs(final.s[0]) < 0.1

    def test_below_threshold_signs_are_fair(self):
        # uncoupled oscillators are independent trials of one oscillator
        cfg = SimConfigFactory(pump=PumpSchedule.constant(0.5), t_max=20.0, seed=31)
        final = run_trial(IsingProblem.zeros(1000), cfg, 0).final_state
        assert np.mean(final.c > 0) == pytest.approx(0.5, abs=0.05)

    def test_ferromagnetic_pair_locks_at_symmetric_fixed_point(self):
        pair = IsingProblem.from_dense([[0.0, 1.0], [1.0, 0.0]])
        cfg = SimConfigFactory(xi_scale=0.1, t_max=200.0)
        c = run_trial(pair, cfg, 0).final_state.c
        assert np.sign(c[0]) == np.sign(c[1])
        assert np.abs(c) == pytest.approx([math.sqrt(0.2)] * 2, abs=0.08)


class TestNetworkSymmetry:
    def test_drift_is_odd(self):
        rng = np.random.default_rng(8)
        c, s = rng.normal(size=4), rng.normal(size=4)
        dc, ds = drift_arrays(c, s, 1.1, FERRO_K4_XI)
        flipped_dc, flipped_ds = drift_arrays(-c, -s, 1.1, FERRO_K4_XI)
        assert np.allclose(flipped_dc, -dc)
        assert np.allclose(flipped_ds, -ds)

    def test_mirrored_noise_gives_mirrored_trajectory(self):
        noise = np.random.default_rng(3).standard_normal((400, 2, 4))
        c = s = mirror_c = mirror_s = np.zeros(4)
        for z in noise:
            c, s = euler_maruyama(c, s, *drift_arrays(c, s, 1.1, FERRO_K4_XI), 0.05, z, 1 / 50)
            mirror_c, mirror_s = euler_maruyama(
                mirror_c, mirror_s, *drift_arrays(mirror_c, mirror_s, 1.1, FERRO_K4_XI), 0.05, -z, 1 / 50
            )
        assert np.abs(c).max() > 0.1
        assert np.allclose(mirror_c, -c, rtol=0, atol=1e-12)
        assert np.allclose(mirror_s, -s, rtol=0, atol=1e-12)

    def test_fixed_point_of_symmetric_ferromagnetic_pair(self):
        c = np.full(2, math.sqrt(0.2))
        dc, ds = drift_arrays(c, np.zeros(2), 1.1, np.array([[0.0, 0.1], [0.1, 0.0]]))
        assert dc == pytest.approx([0.0, 0.0], abs=1e-12)
        assert not ds.any()


class TestQuadratureSuppression:
    def test_quadrature_stays_zero_without_noise(self):
        state = OpoNetworkState(c=[0.1, -0.2, 0.05, 0.3], s=np.zeros(4))
        rng = np.random.default_rng(0)
        for _ in range(400):
            state = step_fixed(state, 0.05, 1.1, FERRO_K4_XI, rng, math.inf)
        assert state.c.any()
        assert not state.s.any()

    def test_quadrature_power_below_in_phase_power(self, k4_problem):
        cfg = SimConfigFactory(t_max=120.0, sample_stride=1, keep_trajectory=True)
        trajectory = run_trial(k4_problem, cfg, 0).trajectory
        tail = len(trajectory) // 2
        assert np.mean(trajectory.s[tail:] ** 2) < np.mean(trajectory.c[tail:] ** 2)


class TestSimConfigRepository:
    def test_sim_config_from_overlays_keys(self):
        config = RunConfig.from_mapping({"PUMP_KIND": "linear_ramp", "PUMP_RAMP": "500", "A_S": "80", "SEED": "9"})
        cfg = sim_config_from(config)
        assert cfg.pump.kind == PUMP_LINEAR_RAMP
        assert cfg.pump.t_ramp == 500.0
        assert cfg.a_s == 80.0
        assert cfg.seed == 9
        assert cfg.dt == SimConfig().dt

    def test_save_then_load(self, tmp_path):
        cfg = SimConfig(pump=PumpSchedule.ramp(0.0, 2.0, 900.0), xi_scale=-0.05, seed=12, gamma_s=2e8)
        repository = SimConfigRepository(tmp_path)
        path = repository.save(cfg, tmp_path / "saved.env")
        assert repository.get("saved.env") == cfg
        assert path.read_text().startswith("PUMP_KIND=linear_ramp\n")

    def test_list(self, tmp_path):
        (tmp_path / "a.env").write_text("SEED=1\n")
        assert SimConfigRepository(tmp_path).list() == [tmp_path / "a.env"]

    def test_export_trajectory_csv(self, tmp_path):
        trajectory = Trajectory.from_states([OpoNetworkState(c=[0.1, 0.2], s=[0.0, -0.1], t=t) for t in (0.0, 1.0)])
        frame = pd.read_csv(export_trajectory_csv(trajectory, tmp_path / "trajectory_0000.csv"))
        assert list(frame.columns) == ["t", "c_1", "c_2", "s_1", "s_2"]
        assert frame["c_2"].tolist() == [0.2, 0.2]


def test_normalized_to_seconds():
    assert normalized_to_seconds(10.0, 2e8) == pytest.approx(1e-7)
    assert normalized_to_seconds(None, 2e8) is None
    assert normalized_to_seconds(10.0, None) is None


def test_simulation_service_from_registry(k4_problem):
    service = service_registry.get_simulation_service()
    assert service.run_trial(k4_problem, NoiseFreeSimConfigFactory(), 0).ok


def test_simulation_service_reports_divergence_as_failed_trial(k4_problem):
    service = service_registry.get_simulation_service()
    result = service.run_trial(k4_problem, SimConfigFactory(xi_scale=-1e6, dt=0.1, t_max=5.0), 0)
    assert not result.ok
    assert "non-finite" in result.failure
