"""
Portable uniform random numbers for initial data.

xorshift64* (Marsaglia shift register, 64-bit state, multiplier
0x2545F4914F6CDD1D), seeded by one round of splitmix64 so that small or
zero seeds still give a well-mixed nonzero state. Uniforms use the top
53 bits: ``u = (x >> 11) * 2**-53`` in ``[0, 1)``. Everything is integer
arithmetic modulo 2**64, so the stream is identical on every platform.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1


def splitmix64(seed: int) -> int:
    z = (seed + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


class XorShift64Star:
    def __init__(self, seed: int):
        s = splitmix64(int(seed) & _MASK)
        self.state = s or 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & _MASK
        x ^= x >> 27
        self.state = x
        return (x * 0x2545F4914F6CDD1D) & _MASK

    def uniform(self, n: int) -> np.ndarray:
        """``n`` doubles in ``[0, 1)``."""
        out = np.empty(n, dtype=np.uint64)
        for i in range(n):
            out[i] = self.next_u64() >> 11
        return out.astype(np.float64) * 2.0**-53
