"""Deterministic shuffling on top of splitmix64.

Fold assignment and train/test splits have to reproduce bit-for-bit across
platforms and Python versions, so they use an explicitly specified generator
rather than ``random`` or numpy. The algorithm, in full:

* splitmix64 state advances by 0x9E3779B97F4A7C15 (mod 2**64) per draw; the
  output is the advanced state passed through two xorshift-multiply rounds
  with constants 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB and shift widths
  30, 27 and 31.
* bounded draws reject outputs from the final partial block of the 64-bit
  range, so every value in [0, bound) is equally likely.
* ``shuffled`` is a Fisher-Yates shuffle walking from the last index down,
  swapping position i with a bounded draw from [0, i].
"""

from __future__ import annotations

from typing import Iterable, TypeVar

_MASK64 = (1 << 64) - 1

T = TypeVar("T")


class SplitMix64:
    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def below(self, bound: int) -> int:
        """Unbiased draw from [0, bound)."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = (1 << 64) - ((1 << 64) % bound)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % bound


def shuffled(items: Iterable[T], seed: int) -> list[T]:
    """Return a new list with the items in seeded Fisher-Yates order."""
    out = list(items)
    gen = SplitMix64(seed)
    for i in range(len(out) - 1, 0, -1):
        j = gen.below(i + 1)
        out[i], out[j] = out[j], out[i]
    return out
