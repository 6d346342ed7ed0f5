"""Deterministic 64-bit mixing PRNG for reproducible sampling plans.

Splitmix-style update, pinned by its constants so any implementation can
reproduce a plan from the seed alone:

    state  <- (state + 0x9E3779B97F4A7C15) mod 2^64
    z      <- state
    z      <- ((z XOR (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2^64
    z      <- ((z XOR (z >> 27)) * 0x94D049BB133111EB) mod 2^64
    output <- z XOR (z >> 31)

Bounded draws use the multiply-high reduction floor(output * n / 2^64),
and shuffles are Fisher-Yates driven by those draws.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MULT1 = 0xBF58476D1CE4E5B9
_MULT2 = 0x94D049BB133111EB


class SplitMix64:
    """Tiny deterministic generator; state is a single 64-bit word."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _MULT1) & _MASK64
        z = ((z ^ (z >> 27)) * _MULT2) & _MASK64
        return z ^ (z >> 31)

    def next_below(self, n: int) -> int:
        """Uniform draw in [0, n): multiply-high reduction of one 64-bit word."""
        if n <= 0:
            raise ValueError(f"bound must be positive, got {n}")
        return (self.next_u64() * n) >> 64

    def sample_prefix(self, items: list, k: int) -> list:
        """First k entries of a Fisher-Yates shuffle of `items` (copied)."""
        pool = list(items)
        for i in range(k):
            j = i + self.next_below(len(pool) - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]

    def shuffle(self, items: list) -> list:
        return self.sample_prefix(items, len(items))
