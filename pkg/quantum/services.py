"""
Squeezing service: positive-P and c-number Langevin samplers for a single OPO.

The positive-P process uses real a, b with drift
    da = -[a - (p - a^2) b] dt,   db = -[b - (p - b^2) a] dt
and diffusion (p - a^2)/A_s^2, (p - b^2)/A_s^2, clamped at zero when negative.
"""
import logging
import math
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from core.base import Service
from core.exceptions import DomainError
from core.utils.seeding import stream_rng
from dynamics.integrators import noise_amplitude

from .models import (
    MAX_VALIDATED_PUMP,
    ClgeEnsemble,
    PositivePEnsemble,
    PositivePState,
    QuadratureStats,
    SqueezingConfig,
    SqueezingRow,
)

logger = logging.getLogger(__name__)

NOISE_BLOCK = 1024

# stream ids keep the two samplers on disjoint random streams
QFPE_STREAM = 1
CLGE_STREAM = 2


def positive_p_step(
    state: PositivePState, p: float, dt: float, a_s: float, rng: np.random.Generator, guard: float = 10.0
) -> PositivePState:
    """One Euler-Maruyama step; an excursion beyond guard returns a rejected state."""
    if dt <= 0:
        raise DomainError(f"dt must be positive, got {dt}")
    if state.rejected:
        return state

    a, b = state.a, state.b
    drift_a = -(a - (p - a * a) * b)
    drift_b = -(b - (p - b * b) * a)
    diffusion_a = max(0.0, p - a * a) / (a_s * a_s)
    diffusion_b = max(0.0, p - b * b) / (a_s * a_s)
    z = rng.standard_normal(2)
    root = math.sqrt(dt)
    a_new = a + drift_a * dt + math.sqrt(diffusion_a) * root * z[0]
    b_new = b + drift_b * dt + math.sqrt(diffusion_b) * root * z[1]

    t = state.t + dt
    if not (math.isfinite(a_new) and math.isfinite(b_new)) or abs(a_new) > guard or abs(b_new) > guard:
        return PositivePState(a=a_new, b=b_new, t=t, rejected=True)
    return PositivePState(a=a_new, b=b_new, t=t)


def _schedule(p: float, cfg: SqueezingConfig) -> Tuple[int, int, int]:
    burn_steps = int(math.ceil(cfg.burn_in(p) / cfg.dt))
    stride_steps = max(1, int(round(cfg.sample_interval / cfg.dt)))
    rounds = int(math.ceil(cfg.n_samples / cfg.trajectories))
    return burn_steps, stride_steps, rounds


def positive_p_ensemble(p: float, cfg: SqueezingConfig, stream: int = 0) -> PositivePEnsemble:
    """Vectorized positive-P trajectories from vacuum, sampled after burn-in."""
    rng = stream_rng(cfg.seed, QFPE_STREAM, stream)
    burn_steps, stride_steps, rounds = _schedule(p, cfg)
    total = burn_steps + rounds * stride_steps
    m = cfg.trajectories
    root = math.sqrt(cfg.dt)
    inv_a_s2 = 1.0 / (cfg.a_s * cfg.a_s)

    a = np.zeros(m)
    b = np.zeros(m)
    alive = np.ones(m, dtype=bool)
    clamp_events = 0
    samples_a, samples_b = [], []
    noise = None
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(total):
            offset = k % NOISE_BLOCK
            if offset == 0:
                noise = rng.standard_normal((min(NOISE_BLOCK, total - k), 2, m))
            raw_a = p - a * a
            raw_b = p - b * b
            clamp_events += int(np.count_nonzero((raw_a < 0) & alive) + np.count_nonzero((raw_b < 0) & alive))
            sigma_a = np.sqrt(np.maximum(raw_a, 0.0) * inv_a_s2) * root
            sigma_b = np.sqrt(np.maximum(raw_b, 0.0) * inv_a_s2) * root
            a_next = a - (a - raw_a * b) * cfg.dt + sigma_a * noise[offset, 0]
            b_next = b - (b - raw_b * a) * cfg.dt + sigma_b * noise[offset, 1]
            finite = np.isfinite(a_next) & np.isfinite(b_next)
            escaped = ~finite | (np.abs(a_next) > cfg.guard) | (np.abs(b_next) > cfg.guard)
            alive &= ~escaped
            a = np.where(alive, a_next, 0.0)
            b = np.where(alive, b_next, 0.0)
            if k + 1 > burn_steps and (k + 1 - burn_steps) % stride_steps == 0:
                samples_a.append(a.copy())
                samples_b.append(b.copy())

    kept = np.flatnonzero(alive)
    stacked_a = np.vstack(samples_a)[:, kept]
    stacked_b = np.vstack(samples_b)[:, kept]
    groups = np.broadcast_to(kept, stacked_a.shape)
    rejected = m - kept.size
    if rejected:
        logger.warning("positive-P at p=%.3g rejected %d of %d trajectories", p, rejected, m)
    return PositivePEnsemble(
        a=stacked_a.ravel(),
        b=stacked_b.ravel(),
        groups=groups.ravel(),
        trajectories=m,
        rejected=rejected,
        clamp_events=clamp_events,
    )


def clge_ensemble(p: float, cfg: SqueezingConfig, stream: int = 0) -> ClgeEnsemble:
    """Uncoupled single-OPO c-number Langevin trajectories from vacuum, sampled after burn-in."""
    rng = stream_rng(cfg.seed, CLGE_STREAM, stream)
    burn_steps, stride_steps, rounds = _schedule(p, cfg)
    total = burn_steps + rounds * stride_steps
    m = cfg.trajectories
    root = math.sqrt(cfg.dt)

    c = np.zeros(m)
    s = np.zeros(m)
    samples_c, samples_s = [], []
    noise = None
    for k in range(total):
        offset = k % NOISE_BLOCK
        if offset == 0:
            noise = rng.standard_normal((min(NOISE_BLOCK, total - k), 2, m))
        r2 = c * c + s * s
        amplitude = noise_amplitude(c, s, cfg.a_s) * root
        c = c + (-1.0 + p - r2) * c * cfg.dt + amplitude * noise[offset, 0]
        s = s + (-1.0 - p - r2) * s * cfg.dt + amplitude * noise[offset, 1]
        if k + 1 > burn_steps and (k + 1 - burn_steps) % stride_steps == 0:
            samples_c.append(c.copy())
            samples_s.append(s.copy())

    stacked_c = np.vstack(samples_c)
    groups = np.broadcast_to(np.arange(m), stacked_c.shape)
    return ClgeEnsemble(c=stacked_c.ravel(), s=np.vstack(samples_s).ravel(), groups=groups.ravel())


def _mean(values: np.ndarray) -> float:
    return math.fsum(values.tolist()) / values.size


def _variance(values: np.ndarray) -> float:
    centre = _mean(values)
    return math.fsum(((values - centre) ** 2).tolist()) / values.size


def _variance_stderr(values: np.ndarray, groups: Optional[np.ndarray]) -> float:
    """
    Standard error of the population variance.

    With trajectory ids, independent per-trajectory estimates absorb the autocorrelation of
    samples along a trajectory; otherwise samples are treated as independent.
    """
    n = values.size
    if n < 2:
        return 0.0
    if groups is not None:
        labels, inverse = np.unique(groups, return_inverse=True)
        if labels.size >= 2:
            counts = np.bincount(inverse)
            sums = np.bincount(inverse, weights=values)
            squares = np.bincount(inverse, weights=values * values)
            means = sums / counts
            estimates = squares / counts - means * means
            return float(np.std(estimates, ddof=1) / math.sqrt(labels.size))
    centre = _mean(values)
    deviations = (values - centre) ** 2
    return float(np.std(deviations, ddof=1) / math.sqrt(n))


def _as_arrays(ensemble, first: str, second: str) -> Tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
    if isinstance(ensemble, (PositivePEnsemble, ClgeEnsemble)):
        return (
            np.asarray(getattr(ensemble, first), dtype=float),
            np.asarray(getattr(ensemble, second), dtype=float),
            ensemble.groups,
        )
    items = list(ensemble)
    if items and isinstance(items[0], PositivePState):
        items = [(state.a, state.b) for state in items if not state.rejected]
    arr = np.asarray(items, dtype=float).reshape(-1, 2)
    return arr[:, 0], arr[:, 1], None


def qfpe_quadrature_stats(
    ensemble: Union[PositivePEnsemble, Sequence[PositivePState]], a_s: float
) -> QuadratureStats:
    """
    Quadrature statistics from positive-P samples.

        <A1> = A_s <a + b> / 2
        var_a1 = [A_s^2 <(a + b)^2> + 1] / 4 - <A1>^2
        var_a2 = -[A_s^2 <(a - b)^2> - 1] / 4 - <A2>^2,  with <A2> = A_s <a - b> / (2i)

    so var_a1 = 1/4 + A_s^2 var(a + b) / 4 and var_a2 = 1/4 - A_s^2 var(a - b) / 4.
    """
    a, b, groups = _as_arrays(ensemble, "a", "b")
    if a.size == 0:
        raise DomainError("positive-P ensemble is empty")
    total = a + b
    difference = a - b
    scale = a_s * a_s / 4.0
    return QuadratureStats(
        mean_a1=a_s * _mean(total) / 2.0,
        mean_a2=a_s * _mean(difference) / 2.0,
        var_a1=0.25 + scale * _variance(total),
        var_a2=0.25 - scale * _variance(difference),
        n_samples=int(a.size),
        stderr_a1=scale * _variance_stderr(total, groups),
        stderr_a2=scale * _variance_stderr(difference, groups),
    )


def clge_quadrature_stats(ensemble: Union[ClgeEnsemble, Sequence[Tuple[float, float]]], a_s: float) -> QuadratureStats:
    """var_a1 = A_s^2 var(c), var_a2 = A_s^2 var(s); means A_s <c>, A_s <s>."""
    c, s, groups = _as_arrays(ensemble, "c", "s")
    if c.size == 0:
        raise DomainError("c-number ensemble is empty")
    scale = a_s * a_s
    return QuadratureStats(
        mean_a1=a_s * _mean(c),
        mean_a2=a_s * _mean(s),
        var_a1=scale * _variance(c),
        var_a2=scale * _variance(s),
        n_samples=int(c.size),
        stderr_a1=scale * _variance_stderr(c, groups),
        stderr_a2=scale * _variance_stderr(s, groups),
    )


def _z_score(first: float, second: float, se_first: float, se_second: float) -> float:
    combined = math.hypot(se_first, se_second)
    if combined == 0:
        return 0.0 if first == second else math.copysign(math.inf, first - second)
    return (first - second) / combined


def squeezing_compare(p_values: Sequence[float], cfg: SqueezingConfig) -> List[SqueezingRow]:
    """Run both samplers at each pump rate and compare their quadrature variances."""
    for p in p_values:
        if not 0 <= p <= MAX_VALIDATED_PUMP:
            raise DomainError(f"pump rate {p} outside the validated range [0, {MAX_VALIDATED_PUMP}]")

    rows = []
    for index, p in enumerate(p_values):
        positive = positive_p_ensemble(p, cfg, stream=index)
        clge = clge_ensemble(p, cfg, stream=index)
        qfpe_stats = qfpe_quadrature_stats(positive, cfg.a_s)
        clge_stats = clge_quadrature_stats(clge, cfg.a_s)
        row = SqueezingRow(
            p=float(p),
            qfpe=qfpe_stats,
            clge=clge_stats,
            z1=_z_score(qfpe_stats.var_a1, clge_stats.var_a1, qfpe_stats.stderr_a1, clge_stats.stderr_a1),
            z2=_z_score(qfpe_stats.var_a2, clge_stats.var_a2, qfpe_stats.stderr_a2, clge_stats.stderr_a2),
            rejected_fraction=positive.rejected_fraction,
            clamp_events=positive.clamp_events,
        )
        logger.info(
            "p=%.3g: var_a1 %.4f/%.4f var_a2 %.4f/%.4f (z1=%.2f, z2=%.2f)",
            p,
            qfpe_stats.var_a1,
            clge_stats.var_a1,
            qfpe_stats.var_a2,
            clge_stats.var_a2,
            row.z1,
            row.z2,
        )
        if row.flagged:
            logger.warning("samplers disagree at p=%.3g beyond 3 standard errors", p)
        rows.append(row)
    return rows


class SqueezingService(Service):
    """Service layer for the squeezing cross-check."""

    def compare(self, p_values: Sequence[float], cfg: SqueezingConfig) -> List[SqueezingRow]:
        try:
            return squeezing_compare(p_values, cfg)
        except DomainError as e:
            logger.error("Squeezing comparison rejected: %s", e)
            raise
