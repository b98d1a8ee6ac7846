"""Counter-based deterministic random number generation.

Every random decision in the simulator flows through a `Stream`, a
counter-based 64-bit generator built on the splitmix64 finalizer.  Streams
are derived from a master seed plus a text label, so adding a new consumer
never perturbs the draw sequence of an existing one.  All arithmetic is
integer mod 2**64; results are identical on every platform.
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def _mix64(z: int) -> int:
    """splitmix64 finalizer: a bijective avalanche over 64-bit ints."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & _MASK64
    return h


def derive_seed(master_seed: int, label: str) -> int:
    """Child seed for a named substream. Pure function of (seed, label)."""
    return _mix64((master_seed & _MASK64) ^ fnv1a64(label.encode("utf-8")))


class Stream:
    """Deterministic stream of draws: value_i = mix64(key + i * GOLDEN)."""

    __slots__ = ("key", "counter")

    def __init__(self, master_seed: int, label: str):
        self.key = derive_seed(master_seed, label)
        self.counter = 0

    def next_u64(self) -> int:
        self.counter += 1
        return _mix64((self.key + self.counter * _GOLDEN) & _MASK64)

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        """Uniform in [lo, hi) with 53-bit resolution."""
        u = (self.next_u64() >> 11) * (1.0 / (1 << 53))
        return lo + u * (hi - lo)

    def randint(self, n: int) -> int:
        """Unbiased integer in [0, n) via rejection sampling."""
        if n <= 0:
            raise ValueError("randint requires n > 0")
        limit = ((1 << 64) // n) * n
        while True:
            v = self.next_u64()
            if v < limit:
                return v % n

    def normal(self, mean: float = 0.0, sd: float = 1.0) -> float:
        """Gaussian draw via Box-Muller (one pair consumed per call)."""
        u1 = ((self.next_u64() >> 11) + 1) * (1.0 / (1 << 53))  # (0, 1]
        u2 = (self.next_u64() >> 11) * (1.0 / (1 << 53))
        r = math.sqrt(-2.0 * math.log(u1))
        return mean + sd * r * math.cos(2.0 * math.pi * u2)

    def bernoulli(self, p: float) -> bool:
        return self.uniform() < p
