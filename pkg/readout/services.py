"""
Readout service: interferometer pulse trains, slow-detector levels and pattern histograms.
"""
import logging
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Union

from core.base import Service
from core.exceptions import CapabilityError, DomainError
from dynamics.models import TrialResult
from graphs.ising import brute_force_ground
from graphs.models import DelaySpec, SpinConfig
from graphs.topology import delay_line_topology

from .models import (
    LevelDistribution,
    PatternClass,
    PhaseState,
    PulseTrain,
    ReadoutRecord,
    StateHistogram,
    level_label,
)

logger = logging.getLogger(__name__)

# exhaustive phase-state enumeration stays below this many slots
MAX_ENUMERATED_SLOTS = 16

Readable = Union[TrialResult, SpinConfig, PhaseState]


def interferometer_pattern(ps: PhaseState) -> PulseTrain:
    """Bit k is 1 when slots k and k+1 (cyclically) carry the same phase."""
    phases = ps.phases
    return PulseTrain(tuple(int(phases[k] == phases[(k + 1) % ps.n]) for k in range(ps.n)))


def slow_detector_level(pt: PulseTrain) -> Fraction:
    """Time-averaged output as a fraction of I_m: ones over slots."""
    return Fraction(sum(pt.bits), pt.n)


def classify_pattern(pt: PulseTrain) -> PatternClass:
    rotations = {r.bits for r in pt.rotations()}
    return PatternClass(representative=PulseTrain(min(rotations)), class_size=len(rotations))


def spins_to_phase_state(s: SpinConfig) -> PhaseState:
    """+1 maps to |0>, -1 to |π>."""
    return PhaseState(tuple(int(x < 0) for x in s.sigma))


def read_out(state: Readable) -> ReadoutRecord:
    ps = _phase_state(state)
    pt = interferometer_pattern(ps)
    return ReadoutRecord(
        phase_state=ps, pulse_train=pt, level=slow_detector_level(pt), pattern_class=classify_pattern(pt)
    )


def _phase_state(state: Readable) -> PhaseState:
    if isinstance(state, PhaseState):
        return state
    if isinstance(state, TrialResult):
        if state.spins is None:
            raise DomainError(f"Trial {state.trial_index} has no final spins: {state.failure}")
        state = state.spins
    return spins_to_phase_state(state)


def _completed(results: Iterable[Readable]) -> List[PhaseState]:
    """Phase states of the completed trials; failed trials are skipped."""
    states = []
    for result in results:
        if isinstance(result, TrialResult) and not result.ok:
            continue
        states.append(_phase_state(result))
    if not states:
        raise DomainError("No completed trials to read out")
    sizes = {ps.n for ps in states}
    if len(sizes) > 1:
        raise DomainError(f"Trials mix network sizes {sorted(sizes)}")
    return states


def all_phase_states(n: int) -> List[PhaseState]:
    """All 2^n phase states; index k puts |π> on slot j when bit j of k is set."""
    if n > MAX_ENUMERATED_SLOTS:
        raise CapabilityError(f"Enumerating {n} slots exceeds the cap of {MAX_ENUMERATED_SLOTS}")
    return [spins_to_phase_state(SpinConfig.from_index(k, n)) for k in range(2**n)]


def reachable_pulse_trains(n: int) -> List[PulseTrain]:
    """Distinct trains any phase state produces, in lexicographic order."""
    trains = {interferometer_pattern(ps).bits for ps in all_phase_states(n)}
    return [PulseTrain(bits) for bits in sorted(trains)]


def reachable_levels(n: int) -> List[Fraction]:
    """Levels with an even number of destructive slots."""
    return sorted(Fraction(n - zeros, n) for zeros in range(0, n + 1, 2))


def accumulate_histogram(results: Iterable[Readable], register_all: bool = True) -> StateHistogram:
    """
    Count final states by rotation class.

    With register_all, every reachable class of a small network is listed, including the
    ones that were never observed.
    """
    states = _completed(results)
    histogram = StateHistogram(n=states[0].n)
    if register_all and histogram.n <= MAX_ENUMERATED_SLOTS:
        for pt in reachable_pulse_trains(histogram.n):
            histogram.register(classify_pattern(pt))
    for ps in states:
        histogram.add(classify_pattern(interferometer_pattern(ps)))
    return histogram


def slow_level_distribution(results: Iterable[Readable]) -> LevelDistribution:
    states = _completed(results)
    n = states[0].n
    distribution = LevelDistribution(n=n, counts={level: 0 for level in reachable_levels(n)})
    for ps in states:
        level = slow_detector_level(interferometer_pattern(ps))
        distribution.counts[level] = distribution.counts.get(level, 0) + 1
        distribution.total += 1
    return distribution


def scenario_expectations(d: DelaySpec) -> Dict[Fraction, float]:
    """Level distribution under uniform selection among the ground states of the delay topology."""
    problem = delay_line_topology(d)
    energy, ground = brute_force_ground(problem)
    counts: Dict[Fraction, int] = {level: 0 for level in reachable_levels(d.n)}
    for spins in ground:
        counts[slow_detector_level(interferometer_pattern(spins_to_phase_state(spins)))] += 1
    logger.debug("Delay %s: ground energy %g over %d states", d.label(), energy, len(ground))
    return {level: count / len(ground) for level, count in counts.items()}


def readout_table(n: int = 4) -> List[Dict[str, str]]:
    """State, pulse train and slow-detector level for every phase state."""
    rows = []
    for ps in all_phase_states(n):
        pt = interferometer_pattern(ps)
        rows.append(
            {"state": ps.label(), "pulse_train": pt.label(), "slow_detector": level_label(slow_detector_level(pt))}
        )
    return rows


def exhaustive_level_distribution(n: int) -> LevelDistribution:
    """Level counts over all 2^n equiprobable phase states."""
    return slow_level_distribution(all_phase_states(n))


class ReadoutService(Service):
    """Service layer for interferometer readout."""

    def __init__(self, n: Optional[int] = None):
        super().__init__()
        self.n = n

    def histogram(self, results: Sequence[Readable]) -> StateHistogram:
        histogram = accumulate_histogram(results)
        logger.info("Histogram over %d trials: %s", histogram.total, histogram.counts)
        return histogram

    def levels(self, results: Sequence[Readable]) -> LevelDistribution:
        return slow_level_distribution(results)

    def table(self) -> List[Dict[str, str]]:
        return readout_table(self.n or 4)
