"""Portable deterministic random streams for the stochastic fault models.

The generator is SplitMix64 (Steele, Lea & Flood's 64-bit mixer, the
same update used as the seeder in the xoshiro family). It is chosen over
a platform RNG because the whole algorithm fits in a dozen lines and can
be re-implemented independently to cross-check every draw bit for bit:

    state  <- (state + 0x9E3779B97F4A7C15) mod 2^64
    z      <- state
    z      <- ((z XOR (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2^64
    z      <- ((z XOR (z >> 27)) * 0x94D049BB133111EB) mod 2^64
    output <- z XOR (z >> 31)

Derived quantities are fixed conventions of this module:

* uniform in [0, 1):   (output >> 11) * 2^-53
* uniform in (0, 1]:   ((output >> 11) + 1) * 2^-53
* standard gaussian:   Box-Muller, exactly two uniforms per draw,
                       sqrt(-2 ln u1) * cos(2 pi u2) with u1 in (0, 1]
                       and u2 in [0, 1); no caching of the sine branch.

Per-channel streams are split from a master seed by hashing the channel
id: seed XOR (first 8 bytes, big-endian, of SHA-256 of the UTF-8 channel
id). Two channels given the same master seed therefore draw from
unrelated streams, and each stream is reproducible in isolation.
"""

from __future__ import annotations

import hashlib
import math

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_TWO53 = float(1 << 53)


def channel_seed(master_seed: int, channel_id: str) -> int:
    """Split a per-channel seed out of the master seed."""
    h = hashlib.sha256(channel_id.encode("utf-8")).digest()
    return (master_seed ^ int.from_bytes(h[:8], "big")) & _MASK64


class SplitMix64:
    """One deterministic 64-bit stream; not shared between threads."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Uniform double in [0, 1) with 53 random mantissa bits."""
        return (self.next_u64() >> 11) / _TWO53

    def uniform_open(self) -> float:
        """Uniform double in (0, 1]; safe as a log argument."""
        return ((self.next_u64() >> 11) + 1) / _TWO53

    def gaussian(self) -> float:
        """Standard normal draw; consumes exactly two uniforms."""
        u1 = self.uniform_open()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)
