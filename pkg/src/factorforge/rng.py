"""Portable pseudo-random number generation.

Every stochastic component in the package draws from the same small, named
generator so that a given seed produces the same stream on any platform or
language: a SplitMix64 finalizer derives stream seeds, and xoshiro256**
produces the draws.  Nothing here depends on numpy's bit generators, so
results cannot drift with library upgrades.

Integer draws in [0, n) use the fixed mapping ``((u >> 32) * n) >> 32`` on a
64-bit output ``u``; all quantities stay within 64 bits so the same code works
in C and Python.
"""

from __future__ import annotations

MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64_mix(z: int) -> int:
    """The SplitMix64 output function applied to a 64-bit state value."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Derive the ``index``-th child seed of ``seed``.

    Equals the ``index``-th output of a SplitMix64 stream started at ``seed``
    (the stream's state advances by a fixed increment, so any element is
    addressable directly).  Used for per-tree and other per-unit seeds.
    """
    state = (seed + (index + 1) * _GOLDEN) & MASK64
    return splitmix64_mix(state)


class SplitMix64:
    """Sequential form of the same stream ``derive_seed`` indexes into."""

    def __init__(self, seed: int):
        self._state = seed & MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & MASK64
        return splitmix64_mix(self._state)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256StarStar:
    """xoshiro256** 1.0, seeded through SplitMix64 per the reference code."""

    def __init__(self, seed: int):
        sm = SplitMix64(seed)
        self._s = [sm.next_u64() for _ in range(4)]

    @property
    def state(self) -> tuple[int, int, int, int]:
        return tuple(self._s)

    def next_u64(self) -> int:
        s = self._s
        result = (_rotl((s[1] * 5) & MASK64, 7) * 9) & MASK64
        t = (s[1] << 17) & MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def next_below(self, n: int) -> int:
        """Integer in [0, n) via the fixed 32-bit scaling map."""
        return ((self.next_u64() >> 32) * n) >> 32

    def next_float(self) -> float:
        """Uniform in [0, 1) with 53-bit resolution."""
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)


__all__ = [
    "MASK64",
    "SplitMix64",
    "Xoshiro256StarStar",
    "derive_seed",
    "splitmix64_mix",
]
