"""Counter-based deterministic random streams.

Every synthetic-data generator in this package draws from fixed, documented
integer arithmetic so that a stream can be reproduced bit-for-bit from
(seed, stream id, counter) alone, in any language with 64-bit unsigned
arithmetic.  The construction is the SplitMix64 output function applied to a
Weyl sequence:

    GAMMA   = 0x9E3779B97F4A7C15                      (2^64 / golden ratio)
    mix(x)  : x ^= x >> 30; x *= 0xBF58476D1CE4E5B9;
              x ^= x >> 27; x *= 0x94D049BB133111EB;
              x ^= x >> 31                            (all mod 2^64)
    s0      = mix(seed + GAMMA)
    base    = mix(s0 + GAMMA * (stream + 1))
    word(k) = mix(base + GAMMA * (k + 1))             (k = 0, 1, 2, ...)

Uniform doubles take the top 53 bits of word(k):  u = (word >> 11 + 0.5) / 2^53,
strictly inside (0, 1) so logarithms and inverse CDFs are always defined.
Normal deviates use the Box-Muller transform on counter pairs (2k, 2k+1).

Streams are splittable: distinct stream ids give decorrelated sequences, and
any counter window can be generated independently of the rest.
"""

from __future__ import annotations

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1


def mix64(x: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer on a uint64 array (wraps mod 2^64)."""
    x = x.astype(np.uint64, copy=True)
    x ^= x >> np.uint64(30)
    x *= _MIX1
    x ^= x >> np.uint64(27)
    x *= _MIX2
    x ^= x >> np.uint64(31)
    return x


def _mix_scalar(x: int) -> int:
    x &= _MASK
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9 & _MASK
    x = (x ^ (x >> 27)) * 0x94D049BB133111EB & _MASK
    return (x ^ (x >> 31)) & _MASK


class CounterRng:
    """One named substream of a seeded generator family.

    `uniforms(n, start)` returns the same values as `uniforms(start + n)[start:]`
    would — windows are position-addressable, which is what makes parallel and
    incremental generation reproducible.
    """

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed)
        self.stream = int(stream)
        s0 = _mix_scalar((self.seed + 0x9E3779B97F4A7C15) & _MASK)
        self._base = np.uint64(
            _mix_scalar((s0 + 0x9E3779B97F4A7C15 * (self.stream + 1)) & _MASK)
        )

    def words(self, n: int, start: int = 0) -> np.ndarray:
        counters = np.arange(start + 1, start + n + 1, dtype=np.uint64)
        return mix64(self._base + _GAMMA * counters)

    def uniforms(self, n: int, start: int = 0) -> np.ndarray:
        """n doubles strictly inside (0, 1)."""
        top53 = (self.words(n, start) >> np.uint64(11)).astype(np.float64)
        return (top53 + 0.5) * (2.0 ** -53)

    def integers(self, n: int, bound: int, start: int = 0) -> np.ndarray:
        """n int64 values uniform on [0, bound) via floor(u * bound)."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        vals = np.floor(self.uniforms(n, start) * bound).astype(np.int64)
        # floor(u * bound) can only reach bound when u is within one ulp of 1.
        np.minimum(vals, bound - 1, out=vals)
        return vals

    def normals(self, n: int, start: int = 0) -> np.ndarray:
        """n standard normals; value k consumes counters 2(start+k), 2(start+k)+1."""
        u = self.uniforms(2 * n, 2 * start)
        r = np.sqrt(-2.0 * np.log(u[0::2]))
        return r * np.cos(2.0 * np.pi * u[1::2])
