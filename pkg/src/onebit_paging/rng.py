"""Counter-based 64-bit random stream shared by the Python and compiled kernels.

Every draw is ``splitmix64(seed + i * GOLDEN)`` for the i-th call, so a stream
is fully described by ``(seed, counter)`` and replays bit-identically on any
platform.  Bounded draws use rejection sampling on the raw 64-bit output; the
compiled kernels implement exactly the same arithmetic.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def mix64(z: int) -> int:
    """SplitMix64 finalizer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def fnv1a64(text: str) -> int:
    h = _FNV_OFFSET
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) & MASK64
    return h


def derive_seed(base_seed: int, name: str, trial: int) -> int:
    """Per-trial seed: ``mix64(mix64(base ^ fnv1a64(name)) + trial * GOLDEN)``.

    Streams for different policies or trials never need coordination, and the
    derivation is independent of execution order.
    """
    keyed = mix64((base_seed & MASK64) ^ fnv1a64(name))
    return mix64((keyed + (trial & MASK64) * GOLDEN) & MASK64)


class SplitMix64:
    """Deterministic stream; ``below(m)`` draws uniformly from ``range(m)``."""

    __slots__ = ("seed", "counter")

    def __init__(self, seed: int):
        self.seed = seed & MASK64
        self.counter = 0

    def next_u64(self) -> int:
        self.counter += 1
        return mix64(self.seed + self.counter * GOLDEN)

    def below(self, m: int) -> int:
        if m <= 0:
            raise ValueError("below() needs a positive bound")
        # 2**64 % m, computed the way the uint64 kernels do it
        rem = ((1 << 64) - m) % m
        limit = MASK64 - rem
        while True:
            x = self.next_u64()
            if x <= limit:
                return x % m

    def choice(self, candidates):
        """Pick one element of an already-sorted sequence."""
        return candidates[self.below(len(candidates))]

    def copy(self) -> "SplitMix64":
        twin = SplitMix64(self.seed)
        twin.counter = self.counter
        return twin
