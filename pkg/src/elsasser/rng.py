"""Seeded 64-bit linear congruential generator with Box-Muller normals.

The recurrence is ``x <- (A x + C) mod 2^64`` with Knuth's MMIX constants.
Uniforms take the top 53 bits, mapped to ``(0, 1]``.  Normals come in pairs
from the trigonometric Box-Muller transform
``(sqrt(-2 ln u1) cos(2 pi u2), sqrt(-2 ln u1) sin(2 pi u2))``; the second
value of each pair is returned on the following call.
"""

from __future__ import annotations

import math

__all__ = ["Lcg64"]

A = 6364136223846793005
C = 1442695040888963407
MASK = (1 << 64) - 1


class Lcg64:
    def __init__(self, seed: int):
        self.state = int(seed) & MASK
        self._spare: float | None = None

    def next_u64(self) -> int:
        self.state = (A * self.state + C) & MASK
        return self.state

    def uniform(self) -> float:
        """Uniform deviate in ``(0, 1]``."""
        return ((self.next_u64() >> 11) + 1) * (1.0 / (1 << 53))

    def normal(self) -> float:
        if self._spare is not None:
            z, self._spare = self._spare, None
            return z
        r = math.sqrt(-2.0 * math.log(self.uniform()))
        theta = 2.0 * math.pi * self.uniform()
        self._spare = r * math.sin(theta)
        return r * math.cos(theta)
