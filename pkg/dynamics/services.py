"""
Simulation service: trials of the OPO network from vacuum to the horizon.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from core.base import Service
from core.exceptions import SimulationError
from core.utils.seeding import trial_rng
from graphs.ising import cut_value, ising_energy
from graphs.models import IsingProblem, SpinConfig, WeightedGraph

from .integrators import (
    Coupling,
    Tolerances,
    drift_arrays,
    as_operator,
    assemble_couplings,
    ensure_finite,
    euler_maruyama,
    pump_series,
    step_adaptive,
)
from .models import INTEGRATOR_ADAPTIVE, OpoNetworkState, SimConfig, Trajectory, TrialResult
from .repositories import SimConfigRepository

logger = logging.getLogger(__name__)

NOISE_BLOCK = 4096


@dataclass
class Integration:
    final: OpoNetworkState
    samples: Trajectory
    steps: int


def _fixed_step_run(n: int, cfg: SimConfig, rng: np.random.Generator, xi: Coupling, xi_quad: Optional[Coupling]):
    """
    step_fixed over the whole horizon, with the noise drawn in blocks from the same stream.

    The last step is shortened so the run ends exactly at t_max.
    """
    steps = max(1, int(math.ceil(cfg.t_max / cfg.dt - 1e-9)))
    starts = np.arange(steps) * cfg.dt
    widths = np.full(steps, cfg.dt)
    widths[-1] = cfg.t_max - starts[-1]
    pumps = pump_series(cfg.pump, starts)
    inverse_a_s = 0.0 if cfg.noise_free else 1.0 / cfg.a_s

    c = np.zeros(n)
    s = np.zeros(n)
    times, cs, ss = [0.0], [c.copy()], [s.copy()]
    noise = None
    z = None
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(steps):
            if inverse_a_s:
                offset = k % NOISE_BLOCK
                if offset == 0:
                    noise = rng.standard_normal((min(NOISE_BLOCK, steps - k), 2, n))
                z = noise[offset]

            dc, ds = drift_arrays(c, s, pumps[k], xi, xi_quad)
            c, s = euler_maruyama(c, s, dc, ds, widths[k], z, inverse_a_s)
            t = cfg.t_max if k + 1 == steps else (k + 1) * cfg.dt
            ensure_finite(c, s, t)

            if (k + 1) % cfg.sample_stride == 0 or k + 1 == steps:
                times.append(t)
                cs.append(c.copy())
                ss.append(s.copy())

    samples = Trajectory(times=np.array(times), c=np.vstack(cs), s=np.vstack(ss))
    return Integration(final=OpoNetworkState(c=c, s=s, t=cfg.t_max), samples=samples, steps=steps)


def _adaptive_run(n: int, cfg: SimConfig, rng: np.random.Generator, xi: Coupling, xi_quad: Optional[Coupling]):
    tolerances = Tolerances(rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol, max_step=cfg.max_step)
    state = OpoNetworkState.vacuum(n)
    samples = [state]
    dt_next = cfg.dt
    steps = 0
    while cfg.t_max - state.t > 1e-12:
        dt_try = min(dt_next, cfg.t_max - state.t)
        state, _, dt_next = step_adaptive(state, dt_try, tolerances, cfg.pump, xi, rng, cfg.a_s, xi_quad)
        steps += 1
        if steps % cfg.sample_stride == 0:
            samples.append(state)
    if samples[-1] is not state:
        samples.append(state)
    return Integration(final=state, samples=Trajectory.from_states(samples), steps=steps)


def simulate(
    n: int, cfg: SimConfig, rng: np.random.Generator, xi: Coupling, xi_quad: Optional[Coupling] = None
) -> Integration:
    """Integrate n oscillators from c = s = 0 to cfg.t_max with the configured integrator."""
    xi = as_operator(xi)
    xi_quad = as_operator(xi_quad) if xi_quad is not None else None
    if cfg.integrator == INTEGRATOR_ADAPTIVE:
        return _adaptive_run(n, cfg, rng, xi, xi_quad)
    return _fixed_step_run(n, cfg, rng, xi, xi_quad)


def detect_build_up(
    trajectory: Union[Trajectory, Sequence[OpoNetworkState]], window: float = 10.0, fraction: float = 0.9
) -> Optional[float]:
    """
    Earliest sampled time after which every spin keeps its final sign and the total
    power sum c_j^2 stays at or above fraction times its final value.

    Returns None when the final power is zero or the time falls within window of the end.
    """
    if not isinstance(trajectory, Trajectory):
        trajectory = Trajectory.from_states(list(trajectory))
    if len(trajectory) == 0:
        return None

    c = trajectory.c
    power = np.sum(c * c, axis=1)
    final_power = power[-1]
    if final_power <= 0:
        return None

    signs = np.where(c >= 0, 1, -1)
    settled = np.all(signs == signs[-1], axis=1) & (power >= fraction * final_power)
    unsettled = np.flatnonzero(~settled)
    index = 0 if unsettled.size == 0 else int(unsettled[-1]) + 1
    build_up = float(trajectory.times[index])
    if build_up > float(trajectory.times[-1]) - window:
        return None
    return build_up


def normalized_to_seconds(t: Optional[float], gamma_s: Optional[float]) -> Optional[float]:
    """tau = 2 t / gamma_s."""
    if t is None or gamma_s is None:
        return None
    return 2.0 * t / gamma_s


def run_trial(
    problem: IsingProblem,
    cfg: SimConfig,
    trial_seed: int,
    graph: Optional[WeightedGraph] = None,
    xi: Optional[Coupling] = None,
    xi_quad: Optional[Coupling] = None,
) -> TrialResult:
    """
    One trial from vacuum: spins are sign(c) at t_max, the build-up time is detected post hoc.

    The random stream is keyed by (cfg.seed, trial_seed). xi defaults to the couplings
    assembled from the problem; xi_quad adds quadrature mixing.
    """
    rng = trial_rng(cfg.seed, trial_seed)
    if xi is None:
        xi = assemble_couplings(problem, cfg.xi_scale, cfg.coupling_mode)

    run = simulate(problem.n, cfg, rng, xi, xi_quad)
    spins = SpinConfig.from_amplitudes(run.final.c)
    build_up = detect_build_up(run.samples, window=cfg.build_up_window, fraction=cfg.build_up_fraction)
    return TrialResult(
        trial_index=int(trial_seed),
        spins=spins,
        build_up_time=build_up,
        final_energy=ising_energy(problem, spins),
        final_cut=cut_value(graph, spins) if graph is not None else None,
        final_state=run.final,
        trajectory=run.samples if cfg.keep_trajectory else None,
        steps=run.steps,
    )


class SimulationService(Service):
    """Service layer for network trials; a trial that fails numerically comes back as TrialResult.failed."""

    def __init__(self, repository: SimConfigRepository):
        super().__init__(repository)
        self.repository = repository

    def run_trial(self, problem: IsingProblem, cfg: SimConfig, trial_index: int, **kwargs) -> TrialResult:
        try:
            return run_trial(problem, cfg, trial_index, **kwargs)
        except SimulationError as e:
            logger.warning("Trial %d failed: %s", trial_index, e)
            return TrialResult.failed(trial_index, str(e))
