"""
Drift, noise and steppers for the c-number Langevin equations of an OPO network.

    dc_j = ([-1 + p - (c_j^2 + s_j^2)] c_j + sum_l xi_jl c_l) dt + (1/A_s) sqrt(c_j^2 + s_j^2 + 1/2) dW_j1
    ds_j = ([-1 - p - (c_j^2 + s_j^2)] s_j + sum_l xi_jl s_l) dt + (1/A_s) sqrt(c_j^2 + s_j^2 + 1/2) dW_j2
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse

from core.exceptions import DivergenceError, DomainError, StiffnessError
from graphs.models import IsingProblem

from .models import COUPLING_LINEAR, COUPLING_SIGN, PUMP_CONSTANT, OpoNetworkState, PumpSchedule

logger = logging.getLogger(__name__)

Coupling = Union[np.ndarray, sparse.spmatrix]
Pump = Union[float, PumpSchedule, Callable[[float], float]]

# couplings are densified below this size
DENSE_LIMIT = 512

MIN_STEP = 1e-9
SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0

# Dormand-Prince 5(4) tableau
DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
DP_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
DP_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)


@dataclass(frozen=True)
class Tolerances:
    rel_tol: float = 1e-4
    abs_tol: float = 1e-6
    max_step: float = 0.5


def pump_at(sched: PumpSchedule, t: float) -> float:
    """Constant rate, or a linear ramp from p_start to p_end over [0, t_ramp] clamped afterwards."""
    if t < 0:
        raise DomainError(f"pump time must be nonnegative, got {t}")
    if sched.kind == PUMP_CONSTANT:
        return sched.p
    if t >= sched.t_ramp:
        return sched.p_end
    return sched.p_start + (sched.p_end - sched.p_start) * (t / sched.t_ramp)


def pump_series(sched: PumpSchedule, times: np.ndarray) -> np.ndarray:
    """pump_at over an array of times."""
    if sched.kind == PUMP_CONSTANT:
        return np.full(times.shape, sched.p, dtype=float)
    fraction = np.clip(times / sched.t_ramp, 0.0, 1.0)
    series = sched.p_start + (sched.p_end - sched.p_start) * fraction
    series[times >= sched.t_ramp] = sched.p_end
    return series


def _pump_function(pump: Pump) -> Callable[[float], float]:
    if isinstance(pump, PumpSchedule):
        return lambda t: pump_at(pump, max(t, 0.0))
    if callable(pump):
        return pump
    value = float(pump)
    return lambda t: value


def assemble_couplings(p: IsingProblem, xi_scale: float, mode: str = COUPLING_LINEAR) -> sparse.csr_matrix:
    """
    Coupling matrix xi = |xi_scale| * J.

    The sign of xi_scale is discarded: a positive scale gives the same matrix as its negative.
    The sign of the coupling is carried by J (J = -w for MAX-CUT edges), so a MAX-CUT edge
    with |xi_scale| = 0.1 gets xi = -0.1. In sign mode only sign(J) is used.
    """
    magnitude = abs(float(xi_scale))
    j = p.j.copy()
    if mode == COUPLING_SIGN:
        j.data = np.sign(j.data)
    elif mode != COUPLING_LINEAR:
        raise DomainError(f"unknown coupling mode {mode!r}")
    j.data = j.data * magnitude
    j.eliminate_zeros()
    return j


def assemble_phase_couplings(
    n: int, delays: Sequence[Tuple[int, float, float]], xi_scale: float
) -> Tuple[np.ndarray, np.ndarray]:
    """
    In-phase and quadrature-mixing couplings of a ring whose delays have arbitrary phases.

    Each (m, theta, amplitude) injects slot i into slot (i + m) mod n with weight
    amplitude * e^{i theta}; real and imaginary parts are symmetrized like the {0, pi} case,
    so theta in {0, pi} reproduces the real coupling matrix exactly.
    """
    magnitude = abs(float(xi_scale))
    real = np.zeros((n, n))
    imag = np.zeros((n, n))
    slots = np.arange(n)
    for m, theta, amplitude in delays:
        if not 1 <= m <= n - 1:
            raise DomainError(f"delay {m} outside 1..{n - 1}")
        cos, sin = math.cos(theta), math.sin(theta)
        cos = 0.0 if abs(cos) < 1e-12 else cos
        sin = 0.0 if abs(sin) < 1e-12 else sin
        np.add.at(real, (slots, (slots + m) % n), amplitude * cos)
        np.add.at(imag, (slots, (slots + m) % n), amplitude * sin)
    return magnitude * (real + real.T) / 2.0, magnitude * (imag + imag.T) / 2.0


def as_operator(xi: Coupling) -> Coupling:
    """Dense array for small networks, CSR otherwise."""
    if sparse.issparse(xi):
        return xi.toarray() if xi.shape[0] <= DENSE_LIMIT else xi.tocsr()
    return np.asarray(xi, dtype=float)


def drift_arrays(
    c: np.ndarray, s: np.ndarray, p: float, xi: Coupling, xi_quad: Optional[Coupling] = None
) -> Tuple[np.ndarray, np.ndarray]:
    r2 = c * c + s * s
    dc = (-1.0 + p - r2) * c + xi @ c
    ds = (-1.0 - p - r2) * s + xi @ s
    if xi_quad is not None:
        dc = dc - xi_quad @ s
        ds = ds + xi_quad @ c
    return dc, ds


def drift(
    state: OpoNetworkState, p: float, xi: Coupling, xi_quad: Optional[Coupling] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """Deterministic part of the network equations; xi_quad adds quadrature mixing."""
    if xi.shape != (state.n, state.n):
        raise DomainError(f"coupling shape {xi.shape} does not match {state.n} oscillators")
    return drift_arrays(state.c, state.s, p, xi, xi_quad)


def noise_amplitude(c_j, s_j, a_s: float):
    """(1/A_s) sqrt(c^2 + s^2 + 1/2); works elementwise on arrays."""
    if not a_s > 0:
        raise DomainError(f"a_s must be positive, got {a_s}")
    return np.sqrt(np.square(c_j) + np.square(s_j) + 0.5) / a_s


def ensure_finite(c: np.ndarray, s: np.ndarray, t: float) -> None:
    if not (np.all(np.isfinite(c)) and np.all(np.isfinite(s))):
        raise DivergenceError(f"state became non-finite at t={t:.6g}; reduce the step size")


def euler_maruyama(
    c: np.ndarray,
    s: np.ndarray,
    dc: np.ndarray,
    ds: np.ndarray,
    h: float,
    z: Optional[np.ndarray] = None,
    inverse_a_s: float = 0.0,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Euler-Maruyama update over a step of width h given the drift at (c, s).

    z holds the (2, n) standard normals of the step; without it the update is a plain Euler step.
    """
    c_new = c + dc * h
    s_new = s + ds * h
    if z is not None:
        amplitude = np.sqrt(c * c + s * s + 0.5) * (inverse_a_s * math.sqrt(h))
        c_new = c_new + amplitude * z[0]
        s_new = s_new + amplitude * z[1]
    return c_new, s_new


def step_fixed(
    state: OpoNetworkState,
    dt: float,
    p: float,
    xi: Coupling,
    rng: np.random.Generator,
    a_s: float,
    xi_quad: Optional[Coupling] = None,
) -> OpoNetworkState:
    """One Euler-Maruyama step; dt = 0 or an infinite a_s leaves rng untouched."""
    if dt < 0:
        raise DomainError(f"dt must be nonnegative, got {dt}")
    if not a_s > 0:
        raise DomainError(f"a_s must be positive, got {a_s}")
    if dt == 0:
        return state

    inverse_a_s = 0.0 if math.isinf(a_s) else 1.0 / a_s
    z = rng.standard_normal((2, state.n)) if inverse_a_s else None
    with np.errstate(over="ignore", invalid="ignore"):
        dc, ds = drift(state, p, xi, xi_quad)
        c, s = euler_maruyama(state.c, state.s, dc, ds, dt, z, inverse_a_s)
    t = state.t + dt
    ensure_finite(c, s, t)
    return OpoNetworkState(c=c, s=s, t=t)


def _dp_attempt(
    y: np.ndarray, t: float, dt: float, pump: Callable[[float], float], xi: Coupling, xi_quad: Optional[Coupling]
) -> Tuple[np.ndarray, np.ndarray]:
    """Fifth-order solution and embedded error estimate of one deterministic step."""
    n = y.size // 2

    def rhs(values: np.ndarray, time: float) -> np.ndarray:
        dc, ds = drift_arrays(values[:n], values[n:], pump(time), xi, xi_quad)
        return np.concatenate([dc, ds])

    stages = []
    for c_i, a_row in zip(DP_C, DP_A):
        increment = y.copy()
        for a_ij, k_j in zip(a_row, stages):
            if a_ij:
                increment += dt * a_ij * k_j
        stages.append(rhs(increment, t + c_i * dt))

    y_new = y.copy()
    error = np.zeros_like(y)
    for b_i, e_i, k_i in zip(DP_B, DP_E, stages):
        if b_i:
            y_new += dt * b_i * k_i
        if e_i:
            error += dt * e_i * k_i
    return y_new, error


def step_adaptive(
    state: OpoNetworkState,
    dt_try: float,
    tolerances: Tolerances,
    p: Pump,
    xi: Coupling,
    rng: np.random.Generator,
    a_s: float,
    xi_quad: Optional[Coupling] = None,
) -> Tuple[OpoNetworkState, float, float]:
    """
    One accepted Dormand-Prince 5(4) step plus a noise increment.

    The error norm is the RMS of err / (abs_tol + rel_tol * max(|y|, |y_new|)). Rejected
    attempts shrink dt and draw no noise; the accepted step adds one Gaussian increment per
    component with the pre-step amplitude. Returns (new state, dt used, suggested next dt).
    """
    if dt_try <= 0:
        raise DomainError(f"dt_try must be positive, got {dt_try}")

    pump = _pump_function(p)
    y = np.concatenate([state.c, state.s])
    dt = min(dt_try, tolerances.max_step)
    while True:
        with np.errstate(over="ignore", invalid="ignore"):
            y_new, error = _dp_attempt(y, state.t, dt, pump, xi, xi_quad)
            scale = tolerances.abs_tol + tolerances.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
            err_norm = float(np.sqrt(np.mean(np.square(error / scale))))

        if math.isfinite(err_norm) and err_norm <= 1.0:
            break

        factor = MIN_FACTOR if not math.isfinite(err_norm) else max(MIN_FACTOR, SAFETY * err_norm ** -0.2)
        dt *= factor
        if dt < MIN_STEP:
            raise StiffnessError(f"step size underflow at t={state.t:.6g} (dt={dt:.3g})")

    factor = MAX_FACTOR if err_norm == 0 else min(MAX_FACTOR, max(MIN_FACTOR, SAFETY * err_norm ** -0.2))
    dt_next = min(dt * factor, tolerances.max_step)

    n = state.n
    c, s = y_new[:n], y_new[n:]
    if math.isfinite(a_s):
        amplitude = noise_amplitude(state.c, state.s, a_s) * math.sqrt(dt)
        z = rng.standard_normal((2, n))
        c = c + amplitude * z[0]
        s = s + amplitude * z[1]

    t = state.t + dt
    ensure_finite(c, s, t)
    return OpoNetworkState(c=c, s=s, t=t), dt, dt_next
