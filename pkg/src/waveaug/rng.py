"""Deterministic 64-bit PRNG used everywhere randomness is needed.

The generator is splitmix64, pinned bit-exactly so that seeds, sampled
policies and operator draws reproduce across platforms and languages:

    state += 0x9E3779B97F4A7C15
    z = state
    z = (z ^ z >> 30) * 0xBF58476D1CE4E5B9
    z = (z ^ z >> 27) * 0x94D049BB133111EB
    output = z ^ z >> 31

``next_float`` maps an output to [0, 1) via the top 53 bits, and
``next_below(n)`` reduces without modulo bias using the high 64 bits of the
128-bit product.  Because the state only ever advances by the golden-ratio
increment, a batch of k sequential outputs can be produced in one vectorized
pass; ``next_block`` does exactly that and is bit-identical to k calls of
``next``.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB


def splitmix64(x: int) -> int:
    """One splitmix64 step applied to state ``x``; returns the output word."""
    z = (x + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _MUL1) & MASK64
    z = ((z ^ (z >> 27)) * _MUL2) & MASK64
    return z ^ (z >> 31)


def fnv1a64(data: bytes) -> int:
    """FNV-1a 64-bit hash, used for path-keyed seed derivation."""
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & MASK64
    return h


class RandomSource:
    """Deterministic splitmix64 stream with an owned 64-bit state.

    A RandomSource must not be shared across concurrent operator invocations;
    fork sub-streams with :meth:`fork` instead.
    """

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _MUL1) & MASK64
        z = ((z ^ (z >> 27)) * _MUL2) & MASK64
        return z ^ (z >> 31)

    def next_float(self) -> float:
        """Uniform double in [0, 1), from the top 53 bits of one output."""
        return (self.next() >> 11) * 2.0**-53

    def next_below(self, n: int) -> int:
        """Uniform integer in [0, n) via the high half of a 128-bit product."""
        if n <= 0:
            raise ValueError("next_below requires n >= 1")
        return (self.next() * n) >> 64

    def fork(self) -> "RandomSource":
        """Child stream seeded with splitmix64 of one parent draw."""
        return RandomSource(splitmix64(self.next()))

    def next_block(self, count: int) -> np.ndarray:
        """``count`` sequential outputs as uint64, bit-identical to scalar calls."""
        if count <= 0:
            return np.zeros(0, dtype=np.uint64)
        # state_k = state_0 + k * GOLDEN (mod 2^64); mixing is stateless.
        steps = np.arange(1, count + 1, dtype=np.uint64)
        z = np.uint64(self.state) + steps * np.uint64(GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MUL1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MUL2)
        out = z ^ (z >> np.uint64(31))
        self.state = (self.state + count * GOLDEN) & MASK64
        return out

    def next_float_block(self, count: int) -> np.ndarray:
        """``count`` uniform doubles in [0, 1), bit-identical to scalar calls."""
        block = self.next_block(count)
        return (block >> np.uint64(11)).astype(np.float64) * 2.0**-53
