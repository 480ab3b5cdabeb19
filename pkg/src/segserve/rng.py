"""SplitMix64 pseudo-random stream.

Integer-exact and publicly specified, so any language can regenerate the
same projection/weight matrices from the same seed. The i-th output of the
stream is ``mix(seed + i * GOLDEN)`` which also admits a vectorized
counter-based evaluation.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """Sequential form of the generator."""

    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        return _mix(self._state)

    def next_unit(self) -> float:
        """Next value mapped uniformly onto [-1, 1)."""
        return u64_to_unit(self.next_u64())


def u64_to_unit(z: int) -> float:
    # Top 53 bits give a uniform double in [0, 1); stretch to [-1, 1).
    return (z >> 11) * (2.0**-53) * 2.0 - 1.0


def unit_array(seed: int, count: int) -> np.ndarray:
    """First ``count`` stream values mapped onto [-1, 1), as float64.

    Matches the sequential generator bit for bit; uint64 arithmetic wraps
    modulo 2**64 exactly like the scalar implementation.
    """
    idx = np.arange(1, count + 1, dtype=np.uint64)
    z = np.uint64(seed) + idx * np.uint64(_GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)).astype(np.float64) * (2.0**-53) * 2.0 - 1.0
