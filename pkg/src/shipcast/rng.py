"""Counter-based seeded random numbers for bit-reproducible synthetic data.

The generator is a splitmix64 recurrence: state advances by the golden-gamma
constant 0x9E3779B97F4A7C15 (mod 2**64) and each output is the finalized mix

    z  = state
    z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9  (mod 2**64)
    z ^= z >> 27;  z *= 0x94D049BB133111EB  (mod 2**64)
    z ^= z >> 31

Uniform doubles take the top 53 bits (``z >> 11`` times 2**-53) and normal
deviates come from the Box-Muller transform on consecutive uniforms, so any
implementation of the same recurrence reproduces the streams bit for bit.
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


class SplitMix64:
    """Deterministic 64-bit generator; identical streams on every platform."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) / float(1 << 53)

    def normal(self) -> float:
        """Standard normal deviate via Box-Muller."""
        u1 = self.uniform()
        u2 = self.uniform()
        # Guard the log; u1 == 0 occurs with probability 2**-53.
        while u1 == 0.0:
            u1 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def randint(self, lo: int, hi: int) -> int:
        """Integer in [lo, hi] by rejection-free modular draw (tiny bias is
        acceptable for test-data purposes; documented, deterministic)."""
        span = hi - lo + 1
        return lo + self.next_u64() % span
