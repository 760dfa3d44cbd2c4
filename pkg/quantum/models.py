"""
Models for the quantum-noise cross-check of a single below-threshold OPO.
"""
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np
from django.core.exceptions import ValidationError

MAX_VALIDATED_PUMP = 1.2


@dataclass(frozen=True)
class PositivePState:
    """Normalized positive-P eigenvalues a = alpha/A_s, b = beta/A_s (real here) at time t."""

    a: float
    b: float
    t: float = 0.0
    rejected: bool = False

    def __post_init__(self):
        if not self.rejected and not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValidationError("Positive-P amplitudes must be finite")


@dataclass(frozen=True, eq=False)
class PositivePEnsemble:
    """Stationary samples; groups holds the trajectory id of each sample."""

    a: np.ndarray
    b: np.ndarray
    groups: Optional[np.ndarray] = None
    trajectories: int = 0
    rejected: int = 0
    clamp_events: int = 0

    @property
    def rejected_fraction(self) -> float:
        return self.rejected / self.trajectories if self.trajectories else 0.0


@dataclass(frozen=True, eq=False)
class ClgeEnsemble:
    """Stationary (c, s) samples of the c-number Langevin model."""

    c: np.ndarray
    s: np.ndarray
    groups: Optional[np.ndarray] = None


@dataclass(frozen=True)
class QuadratureStats:
    """
    Quadrature means and variances in vacuum units (vacuum variance 1/4).

    mean_a2 is reported without the imaginary unit of the positive-P estimator.
    """

    mean_a1: float
    mean_a2: float
    var_a1: float
    var_a2: float
    n_samples: int
    stderr_a1: float
    stderr_a2: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mean_a1": self.mean_a1,
            "mean_a2": self.mean_a2,
            "var_a1": self.var_a1,
            "var_a2": self.var_a2,
            "n_samples": self.n_samples,
            "stderr_a1": self.stderr_a1,
            "stderr_a2": self.stderr_a2,
        }


@dataclass(frozen=True)
class SqueezingConfig:
    """Sampler settings shared by both noise models."""

    a_s: float = 50.0
    dt: float = 0.005
    n_samples: int = 100_000
    trajectories: int = 1000
    guard: float = 10.0
    burn_in_factor: float = 20.0
    sample_interval: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not (self.a_s > 0 and math.isfinite(self.a_s)):
            raise ValidationError("a_s must be a finite positive number for squeezing runs")
        if not 0 < self.dt <= 0.1:
            raise ValidationError("dt must lie in (0, 0.1]")
        if self.n_samples < 1 or self.trajectories < 1:
            raise ValidationError("n_samples and trajectories must be positive")
        if self.guard <= 0 or self.burn_in_factor <= 0 or self.sample_interval <= 0:
            raise ValidationError("guard, burn_in_factor and sample_interval must be positive")

    def burn_in(self, p: float) -> float:
        """burn_in_factor over the slowest relaxation rate |1 - p|, floored at 0.05 near threshold."""
        return self.burn_in_factor / max(abs(1.0 - p), 0.05)


@dataclass(frozen=True)
class SqueezingRow:
    p: float
    qfpe: QuadratureStats
    clge: QuadratureStats
    z1: float
    z2: float
    rejected_fraction: float
    clamp_events: int

    @property
    def ratio_a1(self) -> float:
        return self.qfpe.var_a1 / self.clge.var_a1 if self.clge.var_a1 else math.nan

    @property
    def ratio_a2(self) -> float:
        return self.qfpe.var_a2 / self.clge.var_a2 if self.clge.var_a2 else math.nan

    @property
    def flagged(self) -> bool:
        return abs(self.z1) > 3 or abs(self.z2) > 3

    @property
    def predicted_a1(self) -> Optional[float]:
        """Linearized below-threshold prediction 1/(4(1-p))."""
        return 1.0 / (4.0 * (1.0 - self.p)) if self.p < 1 else None

    @property
    def predicted_a2(self) -> float:
        return 1.0 / (4.0 * (1.0 + self.p))

    def to_row(self) -> Dict[str, Any]:
        return {
            "p": self.p,
            "var_a1_qfpe": self.qfpe.var_a1,
            "var_a2_qfpe": self.qfpe.var_a2,
            "var_a1_clge": self.clge.var_a1,
            "var_a2_clge": self.clge.var_a2,
            "z1": self.z1,
            "z2": self.z2,
            "rejected_fraction": self.rejected_fraction,
        }
