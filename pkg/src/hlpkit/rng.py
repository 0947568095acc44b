"""SplitMix64 pseudo-random generator.

Fixtures must be reproducible bit-for-bit from a seed, including by
reimplementations in other languages, so the generator is pinned to
SplitMix64 (Steele, Lea & Flood's 64-bit mixer over a Weyl sequence):

    state   = seed + (n + 1) * 0x9E3779B97F4A7C15        (mod 2^64)
    z       = state
    z       = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9       (mod 2^64)
    z       = (z ^ (z >> 27)) * 0x94D049BB133111EB       (mod 2^64)
    out(n)  = z ^ (z >> 31)

Because the state is an affine function of the output index n, the stream
is addressable: ``values_at(seed, start, count)`` evaluates any window
without generating its prefix, which keeps bulk sampling vectorizable and
chunking-independent. Reference outputs (seed 1234567, n = 0..4):

    6457827717110365317, 3203168211198807973, 9817491932198370423,
    4593380528125082431, 16408922859458223821

Derived quantities:

* uniform double in [0, 1): ``(out >> 11) * 2^-53``
* uniform float32 in [0, 1): ``(out >> 40) * 2^-24``
* bounded int in [0, n): ``out % n`` (modulo bias is irrelevant at fixture
  scale and keeps the recipe one line)
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def splitmix64_at(seed: int, n: int) -> int:
    """The n-th output (0-based) of the SplitMix64 stream for ``seed``."""
    z = (seed + (n + 1) * _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def values_at(seed: int, start: int, count: int) -> np.ndarray:
    """Outputs ``start .. start+count-1`` as a uint64 array (vectorized)."""
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    z = np.uint64(seed & _MASK) + idx * np.uint64(_GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def uniform_f32_at(seed: int, start: int, count: int) -> np.ndarray:
    """float32 uniforms in [0, 1) for stream positions start..start+count-1."""
    u = values_at(seed, start, count)
    return (u >> np.uint64(40)).astype(np.float32) * np.float32(2.0 ** -24)


class SplitMix64:
    """Sequential view over the stream, for stateful generation."""

    def __init__(self, seed: int):
        self.seed = seed & _MASK
        self.pos = 0

    def next_u64(self) -> int:
        value = splitmix64_at(self.seed, self.pos)
        self.pos += 1
        return value

    def next_below(self, n: int) -> int:
        return self.next_u64() % n

    def next_unit(self) -> float:
        return (self.next_u64() >> 11) * 2.0 ** -53
