"""Deterministic random streams.

Every draw in the package comes from a generator keyed by ``(seed, *keys)``.
Keys are small integers naming the realization index and the purpose of the
stream (lines, vehicles, channel), so realizations can be generated in any
order or in parallel and still be bit-identical.
"""

import numpy as np

# stream purposes
LINES = 0
VEHICLES = 1
EGO_STREET = 2
CHANNEL = 3
TARGET = 4


def stream(seed: int, *keys: int) -> np.random.Generator:
    """Counter-based generator for the substream ``keys`` of root ``seed``."""
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))
MARKS = 5
