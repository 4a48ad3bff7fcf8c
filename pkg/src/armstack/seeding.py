"""Deterministic seeding utilities.

Object placement and all derived episode seeds use splitmix64, a tiny
64-bit PRNG with a documented closed form, so that any implementation
(including non-Python tooling) can reproduce the draws bit for bit.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1

_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """splitmix64 stream: state advances by the golden-gamma increment,
    each output is the finalizer of the new state."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & MASK64
        return z ^ (z >> 31)

    def next_float(self) -> float:
        # 53 high bits -> uniform double in [0, 1)
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def uniform(self, low: float, high: float) -> float:
        return low + (high - low) * self.next_float()


def mix(*parts: int) -> int:
    """Collapse several integers into one 64-bit seed.

    Feeds each part through a fresh splitmix64 step so that (a, b) and
    (b, a) produce unrelated streams.
    """
    acc = 0
    for part in parts:
        rng = SplitMix64((acc ^ part) & MASK64)
        acc = rng.next_u64()
    return acc
