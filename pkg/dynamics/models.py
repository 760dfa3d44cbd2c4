"""
Simulation models for the OPO network.

Times are normalized: t = (gamma_s / 2) tau, amplitudes are normalized by A_s.
"""
import dataclasses
import math
from dataclasses import dataclass
from typing import Any, Iterator, List, Optional

import numpy as np
from django.core.exceptions import ValidationError

from core.utils.seeding import MAX_SEED
from graphs.models import SpinConfig

PUMP_CONSTANT = "constant"
PUMP_LINEAR_RAMP = "linear_ramp"
PUMP_KINDS = (PUMP_CONSTANT, PUMP_LINEAR_RAMP)

INTEGRATOR_FIXED = "fixed_step"
INTEGRATOR_ADAPTIVE = "adaptive_dp"
INTEGRATORS = (INTEGRATOR_FIXED, INTEGRATOR_ADAPTIVE)

COUPLING_LINEAR = "linear"
COUPLING_SIGN = "sign"
COUPLING_MODES = (COUPLING_LINEAR, COUPLING_SIGN)

MAX_FIXED_DT = 0.1


@dataclass(frozen=True)
class PumpSchedule:
    """Pump rate p(t), normalized to the oscillation threshold."""

    kind: str = PUMP_CONSTANT
    p: float = 1.1
    p_start: float = 0.0
    p_end: float = 2.2
    t_ramp: float = 1500.0

    def __post_init__(self):
        if self.kind not in PUMP_KINDS:
            raise ValidationError(f"Unknown pump kind {self.kind!r}, expected one of {PUMP_KINDS}")
        if self.kind == PUMP_CONSTANT and self.p < 0:
            raise ValidationError("Pump rate must be nonnegative")
        if self.kind == PUMP_LINEAR_RAMP:
            if self.p_start < 0 or self.p_end < 0:
                raise ValidationError("Pump rates must be nonnegative")
            if self.t_ramp <= 0:
                raise ValidationError("Ramp duration must be positive")

    @classmethod
    def constant(cls, p: float) -> "PumpSchedule":
        return cls(kind=PUMP_CONSTANT, p=p)

    @classmethod
    def ramp(cls, p_start: float, p_end: float, t_ramp: float) -> "PumpSchedule":
        return cls(kind=PUMP_LINEAR_RAMP, p_start=p_start, p_end=p_end, t_ramp=t_ramp)

    @property
    def final(self) -> float:
        return self.p if self.kind == PUMP_CONSTANT else self.p_end

    def describe(self) -> str:
        if self.kind == PUMP_CONSTANT:
            return f"constant({self.p:g})"
        return f"ramp({self.p_start:g}, {self.p_end:g}, {self.t_ramp:g})"


@dataclass(frozen=True)
class SimConfig:
    """
    Everything a trial needs besides the problem.

    a_s may be infinite, which switches the noise off (deterministic flow).
    gamma_s is optional physical metadata (1/s) used only to convert normalized time to seconds.
    """

    pump: PumpSchedule = dataclasses.field(default_factory=PumpSchedule)
    xi_scale: float = -0.1
    a_s: float = 50.0
    integrator: str = INTEGRATOR_FIXED
    dt: float = 0.05
    rel_tol: float = 1e-4
    abs_tol: float = 1e-6
    max_step: float = 0.5
    t_max: float = 300.0
    seed: int = 0
    sample_stride: int = 10
    coupling_mode: str = COUPLING_LINEAR
    build_up_fraction: float = 0.9
    build_up_window: float = 10.0
    keep_trajectory: bool = False
    gamma_s: Optional[float] = None

    def __post_init__(self):
        if not (0 < self.dt <= MAX_FIXED_DT):
            raise ValidationError(f"dt must lie in (0, {MAX_FIXED_DT}], got {self.dt}")
        if not self.t_max >= 1:
            raise ValidationError(f"t_max must be at least 1, got {self.t_max}")
        if not self.a_s > 0:
            raise ValidationError(f"a_s must be positive, got {self.a_s}")
        if self.integrator not in INTEGRATORS:
            raise ValidationError(f"Unknown integrator {self.integrator!r}, expected one of {INTEGRATORS}")
        if self.coupling_mode not in COUPLING_MODES:
            raise ValidationError(f"Unknown coupling mode {self.coupling_mode!r}, expected one of {COUPLING_MODES}")
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValidationError("Tolerances must be positive")
        if self.max_step <= 0:
            raise ValidationError("max_step must be positive")
        if self.sample_stride < 1:
            raise ValidationError("sample_stride must be a positive integer")
        if not 0 <= self.seed <= MAX_SEED:
            raise ValidationError("seed must be an unsigned 64-bit integer")
        if not 0 < self.build_up_fraction <= 1:
            raise ValidationError("build_up_fraction must lie in (0, 1]")
        if self.build_up_window < 0:
            raise ValidationError("build_up_window must be nonnegative")
        if self.gamma_s is not None and self.gamma_s <= 0:
            raise ValidationError("gamma_s must be positive when given")

    @property
    def noise_free(self) -> bool:
        return math.isinf(self.a_s)

    def replace(self, **changes: Any) -> "SimConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True, eq=False)
class OpoNetworkState:
    """In-phase amplitudes c, quadrature amplitudes s, and normalized time t."""

    c: np.ndarray
    s: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        c = np.array(self.c, dtype=float)
        s = np.array(self.s, dtype=float)
        if c.ndim != 1 or c.shape != s.shape or c.size < 1:
            raise ValidationError("c and s must be vectors of equal nonzero length")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(s))):
            raise ValidationError("State amplitudes must be finite")
        c.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "s", s)

    @property
    def n(self) -> int:
        return int(self.c.size)

    @classmethod
    def vacuum(cls, n: int) -> "OpoNetworkState":
        return cls(c=np.zeros(n), s=np.zeros(n), t=0.0)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, OpoNetworkState)
            and self.t == other.t
            and np.array_equal(self.c, other.c)
            and np.array_equal(self.s, other.s)
        )

    def __hash__(self) -> int:
        return hash((self.t, self.c.tobytes(), self.s.tobytes()))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled states stored column-wise: times (k,), c (k, n), s (k, n)."""

    times: np.ndarray
    c: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        if self.c.ndim != 2 or self.c.shape != self.s.shape or self.c.shape[0] != self.times.shape[0]:
            raise ValidationError("Trajectory arrays must have matching shapes")

    def __len__(self) -> int:
        return int(self.times.shape[0])

    @property
    def n(self) -> int:
        return int(self.c.shape[1])

    def state(self, index: int) -> OpoNetworkState:
        return OpoNetworkState(c=self.c[index], s=self.s[index], t=float(self.times[index]))

    def states(self) -> Iterator[OpoNetworkState]:
        for index in range(len(self)):
            yield self.state(index)

    @classmethod
    def from_states(cls, states: List[OpoNetworkState]) -> "Trajectory":
        if not states:
            raise ValidationError("Trajectory needs at least one state")
        return cls(
            times=np.array([state.t for state in states], dtype=float),
            c=np.vstack([state.c for state in states]),
            s=np.vstack([state.s for state in states]),
        )


@dataclass(frozen=True, eq=False)
class TrialResult:
    """Outcome of one trial; failure holds the error message of a trial that did not complete."""

    trial_index: int
    spins: Optional[SpinConfig]
    build_up_time: Optional[float]
    final_energy: Optional[float]
    final_cut: Optional[float] = None
    final_state: Optional[OpoNetworkState] = None
    trajectory: Optional[Trajectory] = None
    steps: int = 0
    failure: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.failure is None

    @classmethod
    def failed(cls, trial_index: int, message: str) -> "TrialResult":
        return cls(trial_index=trial_index, spins=None, build_up_time=None, final_energy=None, failure=message)
