"""
Ising energy, cut value, exact ground-state oracle and local improvement.

Energies use the unordered-pair convention H = -sum_{i<j} J_ij s_i s_j.
"""
import logging
from typing import List, Tuple

import numpy as np
from scipy import sparse

from core.exceptions import CapabilityError, DomainError

from .models import IsingProblem, SpinConfig, WeightedGraph

logger = logging.getLogger(__name__)

ORACLE_MAX_SPINS = 24
ORACLE_CHUNK = 1 << 16
ENERGY_TOLERANCE = 1e-9


def graph_to_ising(g: WeightedGraph) -> IsingProblem:
    """J_uv = -w(u, v): minimizing the energy maximizes the weighted cut."""
    us, vs, ws = g.edge_arrays
    rows = np.concatenate([us, vs])
    cols = np.concatenate([vs, us])
    data = np.concatenate([-ws, -ws])
    j = sparse.coo_matrix((data, (rows, cols)), shape=(g.n, g.n)).tocsr()
    return IsingProblem(j=j, name=g.name)


def _check_dimension(n: int, s: SpinConfig) -> None:
    if s.n != n:
        raise DomainError(f"spin configuration has {s.n} entries, problem has {n}")


def ising_energy(p: IsingProblem, s: SpinConfig) -> float:
    _check_dimension(p.n, s)
    sigma = s.sigma.astype(float)
    return float(-0.5 * sigma @ (p.j @ sigma))


def cut_value(g: WeightedGraph, s: SpinConfig) -> float:
    """Total weight of edges whose endpoints have opposite spins."""
    _check_dimension(g.n, s)
    us, vs, ws = g.edge_arrays
    crossing = s.sigma[us] != s.sigma[vs]
    return float(ws[crossing].sum())


def _energies(j_dense: np.ndarray, indices: np.ndarray) -> np.ndarray:
    n = j_dense.shape[0]
    bits = (indices[:, None] >> np.arange(n)) & 1
    spins = 1.0 - 2.0 * bits
    return -0.5 * ((spins @ j_dense) * spins).sum(axis=1)


def brute_force_ground(p: IsingProblem, max_spins: int = ORACLE_MAX_SPINS) -> Tuple[float, List[SpinConfig]]:
    """
    Exhaustive scan of all 2^n configurations.

    The last spin is pinned to +1 and each minimizer is reported together with its
    complement, so the ground set is closed under global spin flip.
    """
    n = p.n
    if n > max_spins:
        raise CapabilityError(f"exact oracle is capped at {max_spins} spins, problem has {n}")

    j_dense = p.dense()
    half = 1 << (n - 1)
    best = np.inf
    ground: List[int] = []
    for start in range(0, half, ORACLE_CHUNK):
        indices = np.arange(start, min(start + ORACLE_CHUNK, half), dtype=np.int64)
        energies = _energies(j_dense, indices)
        chunk_min = float(energies.min())
        tolerance = ENERGY_TOLERANCE * max(1.0, abs(min(best, chunk_min)))
        if chunk_min < best - tolerance:
            best = chunk_min
            ground = []
        if chunk_min <= best + tolerance:
            ground.extend(int(k) for k in indices[energies <= best + tolerance])

    full = (1 << n) - 1
    members = sorted(set(ground) | {k ^ full for k in ground})
    logger.debug("oracle on %d spins: min energy %s, %d ground states", n, best, len(members))
    return best, [SpinConfig.from_index(k, n) for k in members]


def local_improvement(p: IsingProblem, s: SpinConfig) -> SpinConfig:
    """
    Steepest-descent single-spin flips until no flip strictly lowers the energy.

    Flipping spin i changes the energy by 2 s_i h_i with h = J s; ties go to the lowest index.
    """
    _check_dimension(p.n, s)
    sigma = s.sigma.astype(float)
    field = np.asarray(p.j @ sigma, dtype=float)

    flips = 0
    while True:
        delta = 2.0 * sigma * field
        i = int(np.argmin(delta))
        if delta[i] >= -ENERGY_TOLERANCE:
            break
        cols, vals = p.neighbors(i)
        field[cols] -= 2.0 * vals * sigma[i]
        sigma[i] = -sigma[i]
        flips += 1

    if flips:
        logger.debug("local improvement applied %d flips", flips)
    return SpinConfig(sigma.astype(np.int8))


def normalized_cut_score(o: float, e_neg: float, u_sdp: float) -> float:
    """(O + E_neg) / (U_SDP + E_neg)."""
    if e_neg < 0:
        raise DomainError(f"E_neg must be nonnegative, got {e_neg}")
    denominator = u_sdp + e_neg
    if denominator <= 0:
        raise DomainError(f"score denominator U_SDP + E_neg must be positive, got {denominator}")
    return (o + e_neg) / denominator
