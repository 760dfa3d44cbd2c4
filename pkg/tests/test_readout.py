from fractions import Fraction

import pytest
from django.core.exceptions import ValidationError

from core.dependencies.service_registry import service_registry
from core.exceptions import CapabilityError, DomainError
from dynamics.models import TrialResult
from graphs.models import PHASE_PI, PHASE_ZERO, DelaySpec, SpinConfig
from readout.models import PatternClass, PhaseState, PulseTrain, level_label
from readout.services import (
    accumulate_histogram,
    all_phase_states,
    classify_pattern,
    exhaustive_level_distribution,
    interferometer_pattern,
    read_out,
    reachable_levels,
    reachable_pulse_trains,
    readout_table,
    scenario_expectations,
    slow_detector_level,
    slow_level_distribution,
    spins_to_phase_state,
)

HALF = Fraction(1, 2)

# (state, pulse train, slow detector) for k = 0..15, slot 0 being the least significant bit of k
FOUR_SLOT_TABLE = [
    ("|0000⟩", "[1111]", "I_m"),
    ("|π000⟩", "[0110]", "I_m/2"),
    ("|0π00⟩", "[0011]", "I_m/2"),
    ("|ππ00⟩", "[1010]", "I_m/2"),
    ("|00π0⟩", "[1001]", "I_m/2"),
    ("|π0π0⟩", "[0000]", "0"),
    ("|0ππ0⟩", "[0101]", "I_m/2"),
    ("|πππ0⟩", "[1100]", "I_m/2"),
    ("|000π⟩", "[1100]", "I_m/2"),
    ("|π00π⟩", "[0101]", "I_m/2"),
    ("|0π0π⟩", "[0000]", "0"),
    ("|ππ0π⟩", "[1001]", "I_m/2"),
    ("|00ππ⟩", "[1010]", "I_m/2"),
    ("|π0ππ⟩", "[0011]", "I_m/2"),
    ("|0πππ⟩", "[0110]", "I_m/2"),
    ("|ππππ⟩", "[1111]", "I_m"),
]


def _phase_state(text):
    return PhaseState(tuple(0 if ch == "0" else 1 for ch in text))


class TestModels:
    def test_phase_state_label(self):
        assert _phase_state("1000").label() == "|π000⟩"

    def test_phase_state_needs_two_slots(self):
        with pytest.raises(ValidationError):
            PhaseState((0,))

    def test_pulse_train_parse(self):
        assert PulseTrain.parse("[0110]").bits == (0, 1, 1, 0)

    def test_pulse_train_rejects_other_bits(self):
        with pytest.raises(ValidationError):
            PulseTrain((0, 2))

    def test_class_size_must_divide_length(self):
        with pytest.raises(ValidationError):
            PatternClass(PulseTrain.parse("[0011]"), 3)

    @pytest.mark.parametrize(
        "level, label", [(Fraction(0), "0"), (Fraction(1), "I_m"), (HALF, "I_m/2"), (Fraction(3, 4), "3I_m/4")]
    )
    def test_level_label(self, level, label):
        assert level_label(level) == label


class TestInterferometer:
    def test_four_slot_table(self):
        rows = readout_table(4)
        assert [(r["state"], r["pulse_train"], r["slow_detector"]) for r in rows] == FOUR_SLOT_TABLE

    def test_constructive_when_neighbours_agree(self):
        assert interferometer_pattern(_phase_state("0000")).label() == "[1111]"
        assert interferometer_pattern(_phase_state("0101")).label() == "[0000]"

    @pytest.mark.parametrize("n", range(2, 9))
    def test_complement_invariance(self, n):
        for ps in all_phase_states(n):
            assert interferometer_pattern(ps) == interferometer_pattern(ps.complement())

    @pytest.mark.parametrize("n", range(2, 9))
    def test_destructive_slots_come_in_pairs(self, n):
        for ps in all_phase_states(n):
            assert interferometer_pattern(ps).bits.count(0) % 2 == 0

    def test_odd_pattern_is_unreachable(self):
        assert PulseTrain.parse("[1110]") not in reachable_pulse_trains(4)
        assert len(reachable_pulse_trains(4)) == 8

    def test_slow_detector_level(self):
        assert slow_detector_level(PulseTrain.parse("[0110]")) == HALF
        assert slow_detector_level(PulseTrain.parse("[1111]")) == 1

    def test_reachable_levels(self):
        assert reachable_levels(4) == [Fraction(0), HALF, Fraction(1)]
        assert reachable_levels(5) == [Fraction(1, 5), Fraction(3, 5), Fraction(1)]

    def test_enumeration_cap(self):
        with pytest.raises(CapabilityError):
            all_phase_states(17)


class TestClassification:
    def test_rotation_classes_of_four_slots(self):
        classes = {classify_pattern(pt) for pt in reachable_pulse_trains(4)}
        assert {c.label(): c.class_size for c in classes} == {"[0000]": 1, "[0011]": 4, "[0101]": 2, "[1111]": 1}

    def test_rotations_share_a_class(self):
        assert classify_pattern(PulseTrain.parse("[1001]")) == classify_pattern(PulseTrain.parse("[0011]"))


class TestReadOut:
    def test_spins_map_minus_to_pi(self):
        assert spins_to_phase_state(SpinConfig.from_string("-+++")) == _phase_state("1000")

    def test_read_out_trial(self):
        trial = TrialResult(trial_index=0, spins=SpinConfig.from_string("+-+-"), build_up_time=10.0, final_energy=-2)
        record = read_out(trial)
        assert record.pulse_train.label() == "[0000]"
        assert record.level == 0
        assert record.pattern_class.class_size == 1

    def test_failed_trial_has_nothing_to_read(self):
        with pytest.raises(DomainError):
            read_out(TrialResult.failed(3, "diverged"))


class TestHistogram:
    def test_every_state_once(self):
        histogram = accumulate_histogram(all_phase_states(4))
        assert histogram.total == 16
        assert histogram.counts == {"[0000]": 2, "[0011]": 8, "[0101]": 4, "[1111]": 2}
        assert {row["representative"]: row["per_state_entry"] for row in histogram.rows()} == {
            "[0000]": 2.0,
            "[0011]": 2.0,
            "[0101]": 2.0,
            "[1111]": 2.0,
        }

    def test_unobserved_classes_are_listed(self):
        histogram = accumulate_histogram([_phase_state("0000")])
        assert histogram.counts == {"[0000]": 0, "[0011]": 0, "[0101]": 0, "[1111]": 1}
        assert histogram.fraction("[1111]") == 1.0

    def test_failed_trials_are_skipped(self):
        good = TrialResult(trial_index=0, spins=SpinConfig.from_string("++++"), build_up_time=None, final_energy=0)
        histogram = accumulate_histogram([good, TrialResult.failed(1, "diverged")])
        assert histogram.total == 1

    def test_mixed_sizes(self):
        with pytest.raises(DomainError):
            accumulate_histogram([_phase_state("0000"), _phase_state("000")])

    def test_nothing_completed(self):
        with pytest.raises(DomainError):
            accumulate_histogram([TrialResult.failed(0, "diverged")])


class TestLevels:
    def test_six_one_one(self):
        distribution = exhaustive_level_distribution(4)
        assert distribution.counts == {Fraction(0): 2, HALF: 12, Fraction(1): 2}
        assert distribution.frequency(HALF) == 0.75

    def test_all_zero_phase_states_read_full_level(self):
        distribution = slow_level_distribution([_phase_state("0000")] * 5)
        assert distribution.frequencies() == {Fraction(0): 0.0, HALF: 0.0, Fraction(1): 1.0}

    def test_rows(self):
        rows = exhaustive_level_distribution(4).rows()
        assert [(r["level"], r["count"]) for r in rows] == [("0", 2), ("I_m/2", 12), ("I_m", 2)]


class TestScenarioExpectations:
    @pytest.mark.parametrize(
        "phases, expected",
        [
            ((PHASE_PI, PHASE_ZERO, PHASE_PI), {Fraction(0): 1.0, HALF: 0.0, Fraction(1): 0.0}),
            ((PHASE_ZERO, PHASE_PI, PHASE_PI), {Fraction(0): 0.0, HALF: 1.0, Fraction(1): 0.0}),
            ((PHASE_PI, PHASE_PI, PHASE_ZERO), {Fraction(0): 0.0, HALF: 1.0, Fraction(1): 0.0}),
            ((PHASE_PI, PHASE_PI, PHASE_PI), {Fraction(0): 1 / 3, HALF: 2 / 3, Fraction(1): 0.0}),
        ],
    )
    def test_delay_settings(self, phases, expected):
        observed = scenario_expectations(DelaySpec.from_phases(phases))
        assert observed == pytest.approx(expected)


def test_readout_service_from_registry():
    assert len(service_registry.get_readout_service().table()) == 16
