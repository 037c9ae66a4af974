"""Seeded random number generation for the synthetic-trace tools.

The generator is fixed by specification rather than delegated to the
platform so that one spec (including its 64-bit seed) always produces the
same trace, sample for sample.  The algorithm, in full:

State advance (splitmix64)::

    s'      = (s + 0x9E3779B97F4A7C15) mod 2**64
    z       = s'
    z       = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2**64
    z       = ((z ^ (z >> 27)) * 0x94D049BB133111EB) mod 2**64
    output  = z ^ (z >> 31)

Uniform doubles take the top 53 bits of an output word:

    uniform()      = (word >> 11) / 2**53          in [0, 1)
    uniform_oc()   = ((word >> 11) + 1) / 2**53    in (0, 1]

Normals use the Box-Muller transform on one (uniform_oc, uniform) pair::

    r = sqrt(-2 ln u1),  theta = 2 pi u2
    n0 = r cos(theta),   n1 = r sin(theta)

``normal()`` returns n0 and caches n1 for the next call.  Derived stream
seeds come from ``derive_seed``, which feeds ``base + (index+1) * GOLDEN``
through the splitmix64 output mix.  Transcendental functions are the
platform libm's; golden trace files pin the expected output for a build.
"""
from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_TWO53 = float(1 << 53)


def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(base: int, index: int) -> int:
    """Deterministic sub-stream seed for trial ``index`` of a base seed."""
    return _mix64((base + (index + 1) * _GOLDEN) & _MASK64)


class SplitMix64:
    """Tiny deterministic PRNG; see the module docstring for the algorithm."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64
        self._spare_normal: float | None = None

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        return _mix64(self._state)

    def uniform(self) -> float:
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) / _TWO53

    def uniform_oc(self) -> float:
        """Uniform double in (0, 1]; safe to pass to log()."""
        return ((self.next_u64() >> 11) + 1) / _TWO53

    def uniform_symmetric(self, half_width: float) -> float:
        """Uniform double in [-half_width, +half_width)."""
        return (2.0 * self.uniform() - 1.0) * half_width

    def normal(self) -> float:
        """Standard normal via Box-Muller; consumes two words per pair."""
        if self._spare_normal is not None:
            value = self._spare_normal
            self._spare_normal = None
            return value
        u1 = self.uniform_oc()
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        theta = 2.0 * math.pi * u2
        self._spare_normal = r * math.sin(theta)
        return r * math.cos(theta)

    def normals(self, n: int) -> list[float]:
        return [self.normal() for _ in range(n)]
