"""
Readout models for the one-bit-delay interferometer.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Tuple

from django.core.exceptions import ValidationError

PHASE_LABELS = {0: "0", 1: "π"}


@dataclass(frozen=True)
class PhaseState:
    """Phases per time slot; 0 stands for |0> and 1 for |π>."""

    phases: Tuple[int, ...]

    def __post_init__(self):
        phases = tuple(int(x) for x in self.phases)
        if len(phases) < 2:
            raise ValidationError("Phase state needs at least two slots")
        if any(x not in (0, 1) for x in phases):
            raise ValidationError("Phases must be 0 or π")
        object.__setattr__(self, "phases", phases)

    @property
    def n(self) -> int:
        return len(self.phases)

    def complement(self) -> "PhaseState":
        return PhaseState(tuple(1 - x for x in self.phases))

    def label(self) -> str:
        return "|" + "".join(PHASE_LABELS[x] for x in self.phases) + "⟩"


@dataclass(frozen=True)
class PulseTrain:
    """Interferometer output per slot: 1 constructive, 0 destructive."""

    bits: Tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(x) for x in self.bits)
        if not bits or any(x not in (0, 1) for x in bits):
            raise ValidationError("Pulse train bits must be 0 or 1")
        object.__setattr__(self, "bits", bits)

    @property
    def n(self) -> int:
        return len(self.bits)

    @classmethod
    def parse(cls, text: str) -> "PulseTrain":
        return cls(tuple(int(ch) for ch in text.strip().strip("[]")))

    def label(self) -> str:
        return "[" + "".join(str(x) for x in self.bits) + "]"

    def rotations(self) -> List["PulseTrain"]:
        return [PulseTrain(self.bits[k:] + self.bits[:k]) for k in range(self.n)]


@dataclass(frozen=True)
class PatternClass:
    """Rotation class of a pulse train, keyed by its lexicographically minimal rotation."""

    representative: PulseTrain
    class_size: int

    def __post_init__(self):
        if self.class_size < 1 or self.representative.n % self.class_size:
            raise ValidationError("Class size must divide the train length")

    def label(self) -> str:
        return self.representative.label()


@dataclass(frozen=True)
class ReadoutRecord:
    """Everything the interferometer shows for one final phase state."""

    phase_state: PhaseState
    pulse_train: PulseTrain
    level: Fraction
    pattern_class: PatternClass


@dataclass
class StateHistogram:
    """Raw counts per pattern class; per-state entries divide by the class size."""

    n: int
    classes: Dict[str, PatternClass] = field(default_factory=dict)
    counts: Dict[str, int] = field(default_factory=dict)
    total: int = 0

    def add(self, pattern: PatternClass, count: int = 1) -> None:
        key = pattern.label()
        self.classes.setdefault(key, pattern)
        self.counts[key] = self.counts.get(key, 0) + count
        self.total += count

    def register(self, pattern: PatternClass) -> None:
        """List a class with zero counts."""
        key = pattern.label()
        self.classes.setdefault(key, pattern)
        self.counts.setdefault(key, 0)

    def per_state_entry(self, key: str) -> float:
        return self.counts.get(key, 0) / self.classes[key].class_size

    def fraction(self, key: str) -> float:
        return self.counts.get(key, 0) / self.total if self.total else 0.0

    def rows(self) -> List[Dict[str, Any]]:
        return [
            {
                "representative": key,
                "class_size": self.classes[key].class_size,
                "raw_count": self.counts[key],
                "per_state_entry": self.per_state_entry(key),
            }
            for key in sorted(self.classes)
        ]


@dataclass
class LevelDistribution:
    """Slow-detector level counts; levels are fractions of I_m."""

    n: int
    counts: Dict[Fraction, int] = field(default_factory=dict)
    total: int = 0

    def frequency(self, level: Fraction) -> float:
        return self.counts.get(level, 0) / self.total if self.total else 0.0

    def frequencies(self) -> Dict[Fraction, float]:
        return {level: self.frequency(level) for level in sorted(self.counts)}

    def rows(self) -> List[Dict[str, Any]]:
        return [
            {"level": level_label(level), "count": self.counts[level], "frequency": self.frequency(level)}
            for level in sorted(self.counts)
        ]


def level_label(level: Fraction) -> str:
    """0, I_m, I_m/2, 3I_m/4, ..."""
    level = Fraction(level)
    if level == 0:
        return "0"
    if level == 1:
        return "I_m"
    numerator = "" if level.numerator == 1 else str(level.numerator)
    return f"{numerator}I_m/{level.denominator}"
