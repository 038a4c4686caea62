"""Seeded random streams for reproducible experiments"""

import numpy as np

RNG_IDENTIFIER = "numpy.random.Philox"


def realization_stream(master_seed: int, realization: int) -> np.random.Generator:
    """Counter-based stream owned by one realization.

    Streams depend only on (master_seed, realization), never on execution order,
    so any subset of realizations can be recomputed in isolation.
    """
    if master_seed < 0 or realization < 0:
        raise ValueError("master_seed and realization must be non-negative")
    seed_seq = np.random.SeedSequence([master_seed, realization])
    return np.random.Generator(np.random.Philox(seed_seq))
