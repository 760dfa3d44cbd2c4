"""
Campaign specifications and the statistics they produce.
"""
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

from django.core.exceptions import ValidationError

from dynamics.models import SimConfig, Trajectory
from graphs.models import DelaySpec, IsingProblem
from readout.models import LevelDistribution, StateHistogram, level_label

PROBLEM_INLINE = "inline"
PROBLEM_GSET = "gset"
PROBLEM_CUBIC = "cubic"
PROBLEM_DELAY = "delay"
PROBLEM_UNCOUPLED = "uncoupled"
PROBLEM_KINDS = (PROBLEM_INLINE, PROBLEM_GSET, PROBLEM_CUBIC, PROBLEM_DELAY, PROBLEM_UNCOUPLED)

OUTPUT_CAMPAIGN = "campaign"
OUTPUT_HISTOGRAM = "histogram"
OUTPUT_LEVELS = "levels"
OUTPUT_TRAJECTORIES = "trajectories"
OUTPUT_KINDS = (OUTPUT_CAMPAIGN, OUTPUT_HISTOGRAM, OUTPUT_LEVELS, OUTPUT_TRAJECTORIES)

# Goemans-Williamson approximation guarantee
GW_RATIO = 0.878
# published normalized O_avg for G1
G1_REFERENCE = 0.9516


@dataclass(frozen=True)
class ProblemSource:
    """
    Where a campaign's problem comes from.

    inline carries an IsingProblem, gset a file path, cubic an order plus either an
    index into the enumerated catalogue or a seed for a random cubic graph, delay a
    DelaySpec and uncoupled just a size.
    """

    kind: str
    problem: Optional[IsingProblem] = None
    path: Optional[str] = None
    n: Optional[int] = None
    cubic_index: Optional[int] = None
    cubic_seed: Optional[int] = None
    delay: Optional[DelaySpec] = None

    def __post_init__(self):
        if self.kind not in PROBLEM_KINDS:
            raise ValidationError(f"Unknown problem kind {self.kind!r}; expected one of {PROBLEM_KINDS}")
        required = {
            PROBLEM_INLINE: self.problem,
            PROBLEM_GSET: self.path,
            PROBLEM_CUBIC: self.n,
            PROBLEM_DELAY: self.delay,
            PROBLEM_UNCOUPLED: self.n,
        }[self.kind]
        if required is None:
            raise ValidationError(f"Problem source {self.kind!r} is missing its defining field")
        if self.kind == PROBLEM_UNCOUPLED and self.n < 1:
            raise ValidationError("Uncoupled network needs at least one oscillator")

    def describe(self) -> str:
        if self.kind == PROBLEM_INLINE:
            return self.problem.name or f"inline{self.problem.n}"
        if self.kind == PROBLEM_GSET:
            return str(self.path)
        if self.kind == PROBLEM_CUBIC:
            suffix = f"seed{self.cubic_seed}" if self.cubic_seed is not None else f"#{self.cubic_index or 0}"
            return f"cubic{self.n} {suffix}"
        if self.kind == PROBLEM_DELAY:
            return f"delay{self.delay.n}{self.delay.label()}"
        return f"uncoupled{self.n}"


@dataclass(frozen=True)
class CampaignSpec:
    problem: ProblemSource
    sim: SimConfig = field(default_factory=SimConfig)
    n_trials: int = 1000
    apply_local_improvement: bool = True
    outputs: Tuple[str, ...] = (OUTPUT_CAMPAIGN,)
    # q needs the exact oracle; off for instances beyond its cap
    success_probability: bool = True

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValidationError("n_trials must be at least 1")
        unknown = set(self.outputs) - set(OUTPUT_KINDS)
        if unknown:
            raise ValidationError(f"Unknown report kinds {sorted(unknown)}")
        object.__setattr__(self, "outputs", tuple(self.outputs))


@dataclass(frozen=True)
class TrialRecord:
    """One row of campaign.csv."""

    trial: int
    energy: Optional[float]
    energy_improved: Optional[float]
    cut: Optional[float]
    build_up_time: Optional[float]
    is_ground: Optional[bool]
    is_ground_improved: Optional[bool]
    spins: Optional[str]
    failure: Optional[str] = None

    def to_row(self) -> Dict[str, Any]:
        return {
            "trial": self.trial,
            "energy": self.energy,
            "energy_improved": self.energy_improved,
            "cut": self.cut,
            "build_up_time": self.build_up_time,
            "is_ground": self.is_ground,
            "is_ground_improved": self.is_ground_improved,
            "spins": self.spins,
            "failure": self.failure or "",
        }


@dataclass
class CampaignStats:
    """
    Aggregate of a campaign.

    q_raw and q_improved are None without an oracle. T is the mean build-up time in
    normalized units over the trials that built up; wall_clock never reaches a data file.
    """

    name: str
    n_trials: int
    records: List[TrialRecord]
    ground_energy: Optional[float] = None
    ground_degeneracy: Optional[int] = None
    q_raw: Optional[float] = None
    q_improved: Optional[float] = None
    q_raw_ci: Optional[Tuple[float, float]] = None
    q_improved_ci: Optional[Tuple[float, float]] = None
    build_up: Dict[str, Optional[float]] = field(default_factory=dict)
    n_build_up: int = 0
    n_no_build_up: int = 0
    n_failed: int = 0
    t_mean: Optional[float] = None
    t_seconds: Optional[float] = None
    histogram: Optional[StateHistogram] = None
    levels: Optional[LevelDistribution] = None
    trajectories: Dict[int, Trajectory] = field(default_factory=dict)
    wall_clock: float = 0.0

    @property
    def energies(self) -> List[float]:
        return [r.energy for r in self.records if r.energy is not None]

    @property
    def cuts(self) -> List[float]:
        return [r.cut for r in self.records if r.cut is not None]

    def summary(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "n_trials": self.n_trials,
            "ground_energy": self.ground_energy,
            "ground_degeneracy": self.ground_degeneracy,
            "q_raw": self.q_raw,
            "q_improved": self.q_improved,
            "q_raw_ci": list(self.q_raw_ci) if self.q_raw_ci else None,
            "q_improved_ci": list(self.q_improved_ci) if self.q_improved_ci else None,
            "build_up": self.build_up,
            "n_build_up": self.n_build_up,
            "n_no_build_up": self.n_no_build_up,
            "n_failed": self.n_failed,
            "T": self.t_mean,
            "T_seconds": self.t_seconds,
        }

    def metrics(self) -> Dict[str, float]:
        """Named scalars that acceptance bands may refer to."""
        values = {
            "q_raw": self.q_raw,
            "q_improved": self.q_improved,
            "median_build_up": self.build_up.get("median"),
            "t": self.t_mean,
        }
        if self.histogram is not None and self.histogram.total:
            values["non_answer_mass"] = self.histogram.fraction("[" + "1" * self.histogram.n + "]")
        return {k: v for k, v in values.items() if v is not None}


@dataclass(frozen=True)
class SweepPoint:
    p: float
    q: float
    q_low: float
    q_high: float
    n_trials: int

    def to_row(self) -> Dict[str, Any]:
        return {"p": self.p, "q": self.q, "q_low": self.q_low, "q_high": self.q_high, "n_trials": self.n_trials}


@dataclass(frozen=True)
class SweepResult:
    points: List[SweepPoint]

    @property
    def optimum(self) -> SweepPoint:
        # first grid point wins ties
        return max(self.points, key=lambda point: point.q)

    @property
    def p_opt(self) -> float:
        return self.optimum.p

    @property
    def q_opt(self) -> float:
        return self.optimum.q


@dataclass(frozen=True)
class SurveyEntry:
    order: int
    graph_index: int
    canonical_form: str
    q: Optional[float]
    median_build_up: Optional[float]
    n_build_up: int

    def to_row(self) -> Dict[str, Any]:
        return {
            "order": self.order,
            "graph_index": self.graph_index,
            "canonical_form": self.canonical_form,
            "q": self.q,
            "median_build_up": self.median_build_up,
            "n_build_up": self.n_build_up,
        }


@dataclass(frozen=True)
class SurveyOrder:
    """Per-order roll-up; the median pools every build-up time of the order."""

    order: int
    n_graphs: int
    q_min: Optional[float]
    worst_index: Optional[int]
    median_build_up: Optional[float]

    def to_row(self) -> Dict[str, Any]:
        return {
            "order": self.order,
            "n_graphs": self.n_graphs,
            "q_min": self.q_min,
            "median_build_up": self.median_build_up,
        }


@dataclass(frozen=True)
class SurveyResult:
    entries: List[SurveyEntry]
    orders: List[SurveyOrder]


@dataclass(frozen=True)
class GsetEntry:
    instance: str
    v: int
    e: int
    u_sdp: float
    e_neg: int
    o_max: float
    o_avg: float
    o_max_improved: float
    o_avg_improved: float
    t_mean: Optional[float]

    @property
    def gw_margin(self) -> float:
        return self.o_avg - GW_RATIO

    def to_row(self) -> Dict[str, Any]:
        return {
            "instance": self.instance,
            "V": self.v,
            "E": self.e,
            "U_SDP": self.u_sdp,
            "E_neg": self.e_neg,
            "O_max": self.o_max,
            "O_avg": self.o_avg,
            "O_max_improved": self.o_max_improved,
            "O_avg_improved": self.o_avg_improved,
            "T": self.t_mean,
            "gw_margin": self.gw_margin,
        }


@dataclass
class IndependentResult:
    """Uncoupled-network statistics: state histogram, level distribution and band checks."""

    histogram: StateHistogram
    levels: LevelDistribution
    uniformity_pvalue: float
    entries_within_band: bool
    levels_within_band: bool
    expected_levels: Dict[Fraction, float] = field(default_factory=dict)

    def metrics(self) -> Dict[str, float]:
        return {
            "uniformity_pvalue": self.uniformity_pvalue,
            "entries_within_band": float(self.entries_within_band),
            "levels_within_band": float(self.levels_within_band),
        }


@dataclass
class ScenarioResult:
    label: str
    expected: Dict[Fraction, float]
    observed: LevelDistribution
    within_band: bool

    def to_rows(self) -> List[Dict[str, Any]]:
        return [
            {
                "scenario": self.label,
                "level": level_label(level),
                "expected": expected,
                "observed": self.observed.frequency(level),
                "count": self.observed.counts.get(level, 0),
                "n_trials": self.observed.total,
                "within_band": self.within_band,
            }
            for level, expected in sorted(self.expected.items())
        ]


@dataclass(frozen=True)
class PhaseScanPoint:
    phase: float
    frequencies: Dict[Fraction, float]
    n_trials: int

    def to_row(self) -> Dict[str, Any]:
        row: Dict[str, Any] = {"phase": self.phase, "phase_over_pi": self.phase / math.pi, "n_trials": self.n_trials}
        for level, frequency in sorted(self.frequencies.items()):
            row[level_label(level)] = frequency
        return row


@dataclass(frozen=True)
class AcceptanceViolation:
    metric: str
    value: Optional[float]
    low: float
    high: float

    def describe(self) -> str:
        if self.value is None:
            return f"{self.metric}: no value reported (band [{self.low}, {self.high}])"
        return f"{self.metric}={self.value:.6g} outside [{self.low}, {self.high}]"


def rows(items: Sequence[Any]) -> List[Dict[str, Any]]:
    return [item.to_row() for item in items]
