"""
Counter-based random streams.

Each trial draws from its own Philox stream keyed by (campaign seed, trial index), so a
campaign gives the same numbers under any worker count or execution order.
"""
import numpy as np

MAX_SEED = 2**64 - 1


def validate_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def trial_rng(campaign_seed: int, trial_index: int) -> np.random.Generator:
    """Independent generator for one trial."""
    sequence = np.random.SeedSequence([validate_seed(campaign_seed), int(trial_index)])
    return np.random.Generator(np.random.Philox(sequence))


def stream_rng(campaign_seed: int, *path: int) -> np.random.Generator:
    """Generator keyed by an arbitrary integer path, e.g. (seed, pump index, batch)."""
    sequence = np.random.SeedSequence([validate_seed(campaign_seed), *(int(part) for part in path)])
    return np.random.Generator(np.random.Philox(sequence))
