"""Seeded pseudo-random stream used for every random draw in the package.

All randomness (coefficient draws, band perturbations, specialization values,
sample schedules) flows through SplitMix (the splitmix64 finalizer, version 1
as documented in the README), so a certificate that records its 64-bit seed
replays byte for byte on any implementation of the same stream.  Python's
random module is deliberately not used anywhere: its generator is not a
cross-implementation contract.

Stream derivation is by label mixing: derive(seed, tags...) folds each tag
(FNV-1a for strings, raw value for ints) into the state through the same
finalizer, which gives independent, order-sensitive substreams without
global coordination.
"""

from __future__ import annotations

from fractions import Fraction

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """splitmix64 output finalizer (version 1)."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def fnv1a64(text: str) -> int:
    h = 0xCBF29CE484222325
    for b in text.encode("utf-8"):
        h = ((h ^ b) * 0x100000001B3) & _MASK
    return h


class SplitMix:
    """splitmix64 stream with a fixed odd increment (gamma)."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK
        return mix64(self.state)

    def below(self, n: int) -> int:
        """Uniform-ish integer in [0, n).  Defined as u64() mod n; the modulo
        bias is part of the documented stream contract, not an accident."""
        if n <= 0:
            raise ValueError("below() needs a positive bound")
        return self.u64() % n

    def int_in(self, lo: int, hi: int) -> int:
        """Integer in the inclusive range [lo, hi]."""
        if hi < lo:
            raise ValueError("empty range")
        return lo + self.below(hi - lo + 1)

    def choice(self, seq):
        if not seq:
            raise ValueError("choice from empty sequence")
        return seq[self.below(len(seq))]

    def dyadic(self, bound: Fraction | int, grid_bits: int = 16) -> Fraction:
        """Rational c / 2**grid_bits with |value| < bound, c an integer.

        The dyadic grid keeps denominators to powers of two so products stay
        cheap in downstream exact linear algebra.
        """
        b = Fraction(bound)
        if b <= 0:
            raise ValueError("bound must be positive")
        scale = 1 << grid_bits
        top = -(-(b.numerator * scale) // b.denominator) - 1  # ceil - 1
        if top < 0:
            top = 0
        c = self.int_in(-top, top)
        return Fraction(c, scale)

    def dyadic_nonzero(self, bound: Fraction | int, grid_bits: int = 16) -> Fraction:
        for _ in range(64):
            v = self.dyadic(bound, grid_bits)
            if v != 0:
                return v
        raise ValueError("bound too small for a nonzero dyadic draw")

    def mod_p(self, p: int) -> int:
        return self.below(p)

    def mod_p_nonzero(self, p: int) -> int:
        if p < 2:
            raise ValueError("need p >= 2")
        return 1 + self.below(p - 1)


def derive(seed: int, *tags) -> SplitMix:
    """Child stream for (seed, tags).  Tags may be ints or strings."""
    h = seed & _MASK
    for t in tags:
        if isinstance(t, str):
            h = mix64(h ^ fnv1a64(t))
        elif isinstance(t, int):
            h = mix64(h ^ (t & _MASK))
        else:
            raise TypeError(f"tag must be int or str, got {type(t).__name__}")
    return SplitMix(h)
