"""Deterministic random draws for everything that takes a seed.

The stream is SplitMix64: output ``i`` of a generator seeded with ``s`` is
``mix64(s + (i + 1) * GAMMA)``, a pure function of ``(s, i)``. That makes the
sequence identical on every platform and lets whole blocks of draws be
computed with vectorized uint64 arithmetic. Normal variates are produced by
the Box-Muller transform on consecutive pairs of uniforms; uniforms take the
top 53 bits of each output word.

Draw-order contract: ``uniform(n)`` consumes n words, ``normal(n)`` consumes
2 * ceil(n / 2) words (interleaved cos/sin pairs, truncated to n), ``below``
consumes one word per value. Consumers document their own draw order on top
of this.
"""

import numpy as np

GAMMA = 0x9E3779B97F4A7C15
_MASK = 0xFFFFFFFFFFFFFFFF
_INV_2_53 = 2.0**-53


def mix64(x: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer on a uint64 array (modular arithmetic throughout)."""
    with np.errstate(over="ignore"):
        x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return x ^ (x >> np.uint64(31))


class SplitMix64:
    """Counter-based 64-bit PRNG with a fixed cross-platform stream."""

    def __init__(self, seed: int):
        self._seed = np.uint64(int(seed) & _MASK)
        self._count = 0

    def raw(self, n: int) -> np.ndarray:
        """Next ``n`` raw uint64 words."""
        idx = np.arange(self._count + 1, self._count + n + 1, dtype=np.uint64)
        self._count += n
        with np.errstate(over="ignore"):
            return mix64(self._seed + idx * np.uint64(GAMMA))

    def uniform(self, n: int) -> np.ndarray:
        """``n`` float64 draws in [0, 1)."""
        return (self.raw(n) >> np.uint64(11)).astype(np.float64) * _INV_2_53

    def normal(self, n: int) -> np.ndarray:
        """``n`` standard normal float64 draws (Box-Muller pairs)."""
        m = (n + 1) // 2
        words = self.raw(2 * m)
        # u1 in (0, 1] so log() is finite; u2 in [0, 1).
        u1 = ((words[0::2] >> np.uint64(11)).astype(np.float64) + 1.0) * _INV_2_53
        u2 = (words[1::2] >> np.uint64(11)).astype(np.float64) * _INV_2_53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        out = np.empty(2 * m, dtype=np.float64)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        return out[:n]

    def below(self, bound: int) -> int:
        """One integer in [0, bound). Modulo bias is ~bound/2^64, ignored."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        return int(self.raw(1)[0] % np.uint64(bound))

    def shuffle_index(self, n: int) -> np.ndarray:
        """Fisher-Yates permutation of range(n), one word per swap."""
        order = np.arange(n, dtype=np.int64)
        for i in range(n - 1, 0, -1):
            j = self.below(i + 1)
            order[i], order[j] = order[j], order[i]
        return order
