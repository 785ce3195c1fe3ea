"""Counter-based uniform variates.

Every random number is a pure function of ``(seed, step, counter)``:
``u = splitmix64(step_key + counter * GOLDEN) >> 11`` scaled to [0, 1).
For a fixed step key the counters walk one SplitMix64 stream, so draws are
independent of evaluation order and of how particles are split across
threads.  The compiled core implements the same arithmetic bit for bit.

Counter layout: particle index ``i`` and purpose ``p`` map to ``4*i + p``.
Two purposes split one 64-bit draw into a pair of 32-bit uniforms (high word
first): DECIDE gives (tumble, growth) and VELOCITY gives (U1, U2).  A 2^-32
grid is far finer than any probability the engine compares against.
"""
from __future__ import annotations

import numpy as np

__all__ = [
    "BIRTH_X", "DECIDE", "INIT_X", "VELOCITY",
    "CounterRNG", "splitmix64", "step_key", "uniform_from_counters", "uniform_pair_from_counters",
]

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
MUL1 = 0xBF58476D1CE4E5B9
MUL2 = 0x94D049BB133111EB

DECIDE, VELOCITY, BIRTH_X, INIT_X = range(4)
STRIDE = 4


def splitmix64(z: int) -> int:
    z &= MASK
    z = ((z ^ (z >> 30)) * MUL1) & MASK
    z = ((z ^ (z >> 27)) * MUL2) & MASK
    return z ^ (z >> 31)


def step_key(seed: int, step: int) -> int:
    """Stream start for one time step (step 0 is reserved for initialisation)."""
    return splitmix64(splitmix64(seed) ^ splitmix64((step * GOLDEN + 1) & MASK))


def _mix_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(MUL1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(MUL2)
    return z ^ (z >> np.uint64(31))


def _bits(key: int, counters) -> np.ndarray:
    c = np.atleast_1d(np.asarray(counters, dtype=np.uint64))
    return _mix_array(np.uint64(key) + c * np.uint64(GOLDEN))


def uniform_from_counters(key: int, counters) -> np.ndarray:
    """53-bit uniforms in [0, 1)."""
    return (_bits(key, counters) >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def uniform_pair_from_counters(key: int, counters) -> tuple[np.ndarray, np.ndarray]:
    """Two 32-bit uniforms in [0, 1) per counter (high word, low word)."""
    h = _bits(key, counters)
    hi = (h >> np.uint64(32)).astype(np.float64) * (1.0 / 4294967296.0)
    lo = (h & np.uint64(0xFFFFFFFF)).astype(np.float64) * (1.0 / 4294967296.0)
    return hi, lo


class CounterRNG:
    """Seeded family of per-step counter streams."""

    def __init__(self, seed: int):
        self.seed = int(seed) & MASK

    def key(self, step: int) -> int:
        return step_key(self.seed, step)

    def counters(self, index, purpose: int) -> np.ndarray:
        idx = np.atleast_1d(np.asarray(index, dtype=np.uint64))
        return idx * np.uint64(STRIDE) + np.uint64(purpose)

    def uniform(self, step: int, index, purpose: int) -> np.ndarray:
        return uniform_from_counters(self.key(step), self.counters(index, purpose))

    def uniform_pair(self, step: int, index, purpose: int) -> tuple[np.ndarray, np.ndarray]:
        return uniform_pair_from_counters(self.key(step), self.counters(index, purpose))
