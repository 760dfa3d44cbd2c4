import numpy as np
import pytest
from django.core.exceptions import ValidationError

from graphs.models import PHASE_PI, PHASE_ZERO, DelayLine, DelaySpec
from graphs.topology import delay_line_topology


def test_single_pi_delay_is_antiferromagnetic_ring():
    d = DelaySpec(n=4, lines=(DelayLine(m=1, phase=PHASE_PI),))
    j = delay_line_topology(d).dense()
    expected = np.zeros((4, 4))
    for i in range(4):
        expected[i, (i + 1) % 4] = expected[(i + 1) % 4, i] = -0.5
    assert np.allclose(j, expected)


def test_complementary_delays_accumulate():
    d = DelaySpec.from_phases([PHASE_PI, PHASE_ZERO, PHASE_PI])
    j = delay_line_topology(d).dense()
    assert j[0, 1] == pytest.approx(-1.0)
    assert j[0, 3] == pytest.approx(-1.0)
    assert j[0, 2] == pytest.approx(1.0)
    assert j[1, 3] == pytest.approx(1.0)


def test_opposite_phases_cancel():
    d = DelaySpec.from_phases([PHASE_ZERO, PHASE_PI, PHASE_PI])
    j = delay_line_topology(d).dense()
    assert j[0, 1] == pytest.approx(0.0)
    assert j[0, 2] == pytest.approx(-1.0)


def test_blocked_delay_contributes_nothing():
    d = DelaySpec.from_phases([PHASE_PI, None, PHASE_PI])
    j = delay_line_topology(d).dense()
    assert j[0, 2] == 0.0
    assert j[1, 3] == 0.0


def test_amplitude_scales_couplings():
    d = DelaySpec.from_string(6, "1:pi:0.5")
    assert delay_line_topology(d).dense()[0, 1] == pytest.approx(-0.25)


def test_topology_is_symmetric_with_zero_diagonal():
    problem = delay_line_topology(DelaySpec.from_string(5, "1:pi,2:0,4:pi"))
    dense = problem.dense()
    assert np.allclose(dense, dense.T)
    assert np.all(np.diag(dense) == 0)


class TestDelaySpec:
    def test_string_round_trip(self):
        d = DelaySpec.from_string(4, "1:pi,2:off,3:0:0.5")
        assert d.to_string() == "1:pi,2:off,3:0:0.5"
        assert d.label() == "[pi,off,0]"

    def test_from_phases_label(self):
        assert DelaySpec.from_phases([PHASE_PI, PHASE_ZERO, PHASE_PI]).label() == "[pi,0,pi]"

    @pytest.mark.parametrize("text", ["1:half", "1", "x:pi", "4:pi"])
    def test_invalid_tokens(self, text):
        with pytest.raises(ValidationError):
            DelaySpec.from_string(4, text)

    def test_duplicate_delays(self):
        with pytest.raises(ValidationError):
            DelaySpec.from_string(4, "1:pi,1:0")

    def test_phase_must_be_binary(self):
        with pytest.raises(ValidationError):
            DelayLine(m=1, phase=1.0)
