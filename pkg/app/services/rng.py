# app/services/rng.py
"""
Counter-based random streams.

Every trajectory (or Ramsey shot block) gets its own Philox generator keyed by
(seed, *key). Outcomes therefore depend only on the seed and their index,
never on which worker thread evaluated them or in what order.
"""

import numpy as np

# stream tags keep independent consumers of one seed disjoint
STREAM_TRAJECTORY = 0
STREAM_RAMSEY = 1
STREAM_RAMSEY_REFERENCE = 2
STREAM_SWEEP_BASE = 16  # sweep point i uses STREAM_SWEEP_BASE + i


def trajectory_rng(seed: int, *key: int) -> np.random.Generator:
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    sequence = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(sequence))
