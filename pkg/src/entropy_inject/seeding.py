"""Counter-based seed derivation.

Per-trial seeds come from hashing (seed, index) with SplitMix64, so a trial's
randomness never depends on which other trials ran first or in what order.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    x = (x + GOLDEN) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_seed(seed: int, *path: int) -> int:
    """Derive a 64-bit child seed from a parent seed and an index path."""
    x = splitmix64(seed & MASK64)
    for p in path:
        x = splitmix64(x ^ (p & MASK64))
    return x


def splitmix64_array(x: np.ndarray) -> np.ndarray:
    """Vectorized SplitMix64 finalizer over a uint64 array (wrapping arithmetic)."""
    x = x.astype(np.uint64, copy=True)
    with np.errstate(over="ignore"):
        x += np.uint64(GOLDEN)
        x ^= x >> np.uint64(30)
        x *= np.uint64(0xBF58476D1CE4E5B9)
        x ^= x >> np.uint64(27)
        x *= np.uint64(0x94D049BB133111EB)
        x ^= x >> np.uint64(31)
    return x


def trial_uniforms(seed: int, trials: int, stream: int = 0) -> np.ndarray:
    """One float64 in [0, 1) per trial index, each a pure function of (seed, stream, index)."""
    base = derive_seed(seed, stream)
    idx = np.arange(trials, dtype=np.uint64)
    with np.errstate(over="ignore"):
        words = splitmix64_array(idx * np.uint64(GOLDEN) ^ np.uint64(base))
    return (words >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))
