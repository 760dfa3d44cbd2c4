import math

import numpy as np
import pytest
from django.core.exceptions import ValidationError

from core.dependencies.service_registry import service_registry
from core.exceptions import DomainError
from quantum.models import PositivePState, QuadratureStats, SqueezingConfig, SqueezingRow
from quantum.services import (
    clge_ensemble,
    clge_quadrature_stats,
    positive_p_ensemble,
    positive_p_step,
    qfpe_quadrature_stats,
    squeezing_compare,
)
from tests.factories import SqueezingConfigFactory


class TestSqueezingConfig:
    @pytest.mark.parametrize(
        "changes",
        [{"a_s": math.inf}, {"a_s": 0.0}, {"dt": 0.2}, {"n_samples": 0}, {"trajectories": 0}, {"guard": 0.0}],
    )
    def test_rejects_invalid_values(self, changes):
        with pytest.raises(ValidationError):
            SqueezingConfig(**changes)

    def test_burn_in_is_floored_near_threshold(self):
        cfg = SqueezingConfig(burn_in_factor=20.0)
        assert cfg.burn_in(0.5) == pytest.approx(40.0)
        assert cfg.burn_in(1.0) == pytest.approx(400.0)


class TestPositivePStep:
    def test_rejected_state_is_absorbing(self):
        state = PositivePState(a=math.inf, b=0.0, rejected=True)
        assert positive_p_step(state, 0.5, 0.01, 50.0, np.random.default_rng(0)) is state

    def test_excursion_beyond_guard_is_rejected(self):
        state = PositivePState(a=9.9, b=9.9)
        assert positive_p_step(state, 0.0, 0.1, 50.0, np.random.default_rng(0), guard=10.0).rejected

    def test_vacuum_without_pump_stays_put(self):
        new = positive_p_step(PositivePState(a=0.0, b=0.0), 0.0, 0.01, 50.0, np.random.default_rng(0))
        assert (new.a, new.b) == (0.0, 0.0)
        assert new.t == pytest.approx(0.01)

    def test_nonpositive_step(self):
        with pytest.raises(DomainError):
            positive_p_step(PositivePState(a=0.0, b=0.0), 0.5, 0.0, 50.0, np.random.default_rng(0))

    def test_non_finite_state_must_be_flagged(self):
        with pytest.raises(ValidationError):
            PositivePState(a=math.nan, b=0.0)


class TestEstimators:
    def test_qfpe_of_coherent_samples_is_vacuum_noise(self):
        samples = [PositivePState(a=0.1, b=0.1)] * 10 + [PositivePState(a=math.inf, b=0.0, rejected=True)]
        stats = qfpe_quadrature_stats(samples, 50.0)
        assert stats.n_samples == 10
        assert stats.mean_a1 == pytest.approx(5.0)
        assert stats.var_a1 == pytest.approx(0.25)
        assert stats.var_a2 == pytest.approx(0.25)

    def test_clge_scales_by_a_s_squared(self):
        stats = clge_quadrature_stats([(0.01, 0.0), (-0.01, 0.0)], 50.0)
        assert stats.mean_a1 == pytest.approx(0.0)
        assert stats.var_a1 == pytest.approx(0.25)
        assert stats.var_a2 == 0.0

    def test_empty_ensemble(self):
        with pytest.raises(DomainError):
            qfpe_quadrature_stats([], 50.0)
        with pytest.raises(DomainError):
            clge_quadrature_stats([], 50.0)


class TestEnsembles:
    def test_positive_p_vacuum_at_zero_pump(self):
        ensemble = positive_p_ensemble(0.0, SqueezingConfigFactory())
        assert not ensemble.a.any() and not ensemble.b.any()
        assert ensemble.rejected == 0
        stats = qfpe_quadrature_stats(ensemble, 50.0)
        assert stats.var_a1 == pytest.approx(0.25)
        assert stats.var_a2 == pytest.approx(0.25)

    def test_clge_vacuum_at_zero_pump(self):
        stats = clge_quadrature_stats(clge_ensemble(0.0, SqueezingConfigFactory()), 50.0)
        assert stats.n_samples == 2000
        assert stats.var_a1 == pytest.approx(0.25, abs=0.04)
        assert stats.var_a2 == pytest.approx(0.25, abs=0.04)

    def test_ensembles_are_seeded(self):
        cfg = SqueezingConfigFactory()
        assert np.array_equal(clge_ensemble(0.5, cfg).c, clge_ensemble(0.5, cfg).c)
        assert np.array_equal(positive_p_ensemble(0.5, cfg).a, positive_p_ensemble(0.5, cfg).a)
        assert not np.array_equal(clge_ensemble(0.5, cfg, stream=1).c, clge_ensemble(0.5, cfg).c)

    def test_linearized_predictions_at_half_threshold(self):
        cfg = SqueezingConfigFactory(n_samples=20000, trajectories=1000)
        (row,) = squeezing_compare([0.5], cfg)
        assert row.clge.var_a1 == pytest.approx(0.5, rel=0.1)
        assert row.clge.var_a2 == pytest.approx(1 / 6, rel=0.1)
        assert row.qfpe.var_a1 == pytest.approx(0.5, rel=0.1)
        assert row.qfpe.var_a2 == pytest.approx(1 / 6, rel=0.1)


class TestSqueezingCompare:
    @pytest.mark.parametrize("p", [-0.1, 1.3])
    def test_outside_validated_range(self, p):
        with pytest.raises(DomainError):
            squeezing_compare([p], SqueezingConfigFactory())

    def test_row_per_pump_rate(self):
        rows = squeezing_compare([0.0, 0.2], SqueezingConfigFactory())
        assert [row.p for row in rows] == [0.0, 0.2]
        assert rows[0].rejected_fraction == 0.0

    def test_service_logs_and_reraises(self):
        with pytest.raises(DomainError):
            service_registry.get_squeezing_service().compare([2.0], SqueezingConfigFactory())


def test_predictions():
    stats = QuadratureStats(0.0, 0.0, 0.25, 0.25, 1, 0.0, 0.0)
    assert SqueezingRow(0.5, stats, stats, 0.0, 0.0, 0.0, 0).predicted_a1 == pytest.approx(0.5)
    assert SqueezingRow(1.0, stats, stats, 0.0, 0.0, 0.0, 0).predicted_a1 is None
    assert SqueezingRow(0.5, stats, stats, 0.0, 0.0, 0.0, 0).predicted_a2 == pytest.approx(1 / 6)
    assert SqueezingRow(0.5, stats, stats, 3.5, 0.0, 0.0, 0).flagged


@pytest.mark.acceptance
@pytest.mark.parametrize("p", [0.0, 0.5, 0.9])
def test_samplers_agree_with_each_other_and_linear_theory(p):
    (row,) = squeezing_compare([p], SqueezingConfig(n_samples=100_000, trajectories=1000, seed=11))
    assert abs(row.z1) <= 3 and abs(row.z2) <= 3
    assert row.qfpe.var_a1 == pytest.approx(row.predicted_a1, rel=0.05)
    assert row.qfpe.var_a2 == pytest.approx(row.predicted_a2, rel=0.05)


@pytest.mark.acceptance
def test_squeezing_deepens_with_pump_but_stays_above_the_intracavity_limit():
    cfg = SqueezingConfig(n_samples=100_000, trajectories=1000, seed=17)
    rows = squeezing_compare([0.0, 0.25, 0.5, 0.75, 1.0], cfg)
    for sampler in ("qfpe", "clge"):
        stats = [getattr(row, sampler) for row in rows]
        var_a1 = [s.var_a1 for s in stats]
        var_a2 = [s.var_a2 for s in stats]
        assert all(later > earlier for earlier, later in zip(var_a1, var_a1[1:]))
        assert all(later < earlier for earlier, later in zip(var_a2, var_a2[1:]))
        assert all(s.var_a2 >= 1 / 8 - 3 * s.stderr_a2 for s in stats)
