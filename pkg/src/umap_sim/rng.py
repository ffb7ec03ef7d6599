"""Portable deterministic 64-bit PRNG.

SplitMix64: a tiny shift-xor-multiply generator with a 64-bit counter state.
It is fully specified here (no dependence on platform or library versions),
which is what makes trajectories reproducible across machines and processes.
Subsystems draw from independent substreams derived by hashing (seed, label),
so adding a consumer never perturbs the draws seen by another.
"""

from __future__ import annotations

MASK64 = 0xFFFFFFFFFFFFFFFF

_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """The SplitMix64 output function: a bijective 64-bit finalizer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return (z ^ (z >> 31)) & MASK64


def hash_label(seed: int, label: str) -> int:
    """Derive a substream seed from a master seed and a subsystem label."""
    h = mix64(seed & MASK64)
    for byte in label.encode("utf-8"):
        h = mix64((h ^ byte) * _GAMMA)
    return h


class SplitMix64:
    """Sequential SplitMix64 generator."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & MASK64
        return mix64(self.state)

    def uniform(self, low: float = 0.0, high: float = 1.0) -> float:
        """Uniform double in [low, high): 53 mantissa bits from one draw."""
        u = self.next_u64() >> 11
        return low + (high - low) * (u * (1.0 / (1 << 53)))

    def randint(self, low: int, high: int) -> int:
        """Uniform integer in [low, high] via rejection-free Lemire-style scaling."""
        if high < low:
            raise ValueError(f"empty range [{low}, {high}]")
        span = high - low + 1
        return low + (self.next_u64() * span >> 64)

    def choice(self, seq):
        if not seq:
            raise ValueError("empty sequence")
        return seq[self.randint(0, len(seq) - 1)]

    def substream(self, label: str) -> "SplitMix64":
        return SplitMix64(hash_label(self.state, label))


def substream(seed: int, label: str) -> SplitMix64:
    """Independent generator for a (seed, subsystem label) pair."""
    return SplitMix64(hash_label(seed, label))
