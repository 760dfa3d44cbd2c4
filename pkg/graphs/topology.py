"""
Delay-line ring topology compiled to an Ising coupling matrix.
"""
import numpy as np

from .models import DelaySpec, IsingProblem


def delay_line_topology(d: DelaySpec) -> IsingProblem:
    """
    Couplings of a time-multiplexed ring.

    Each enabled delay of m slots injects slot i into slot (i + m) mod n with amplitude
    +amp for phase 0 and -amp for phase pi. Injections addressing the same unordered
    pair (delays m and n - m, or m = n/2 twice) accumulate, and the directed injection
    matrix D is symmetrized as J = (D + D^T) / 2. A pair joined by a single one-way
    injection of amplitude a therefore couples with magnitude a / 2; a delay m and its
    complement n - m together restore the full a.
    """
    injection = np.zeros((d.n, d.n), dtype=float)
    slots = np.arange(d.n)
    for line in d.lines:
        if not line.enabled or line.amplitude == 0:
            continue
        np.add.at(injection, (slots, (slots + line.m) % d.n), line.sign * line.amplitude)

    return IsingProblem.from_dense((injection + injection.T) / 2.0, name=f"delay{d.n}{d.label()}")
