"""Deterministic pseudo-random number generation.

Splits, shuffles, weight initialization and synthetic textures all draw from
xoshiro256** seeded through splitmix64, so every artifact the toolkit writes
is reproducible from a single 64-bit seed regardless of platform or numpy
version. Bounded integers use masked rejection (unbiased), floats take the
top 53 bits of a word, and shuffling is the classic top-down Fisher-Yates.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class Xoshiro256:
    """xoshiro256** stream; the four state words come from splitmix64."""

    def __init__(self, seed: int):
        state = seed & _MASK64
        words = []
        for _ in range(4):
            state, word = _splitmix64(state)
            words.append(word)
        self._s = words

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def next_below(self, n: int) -> int:
        """Uniform integer in [0, n), rejection-sampled under a power-of-two mask."""
        if n <= 0:
            raise ValueError(f"bound must be positive, got {n}")
        if n == 1:
            return 0
        mask = (1 << (n - 1).bit_length()) - 1
        while True:
            r = self.next_u64() & mask
            if r < n:
                return r

    def next_float(self) -> float:
        """Uniform in [0, 1) with 53-bit resolution."""
        return (self.next_u64() >> 11) * 2.0**-53

    def next_floats(self, n: int) -> np.ndarray:
        """n uniform floats in [0, 1), one per consecutive stream word."""
        words = np.array([self.next_u64() for _ in range(n)], dtype=np.uint64)
        return (words >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def next_bytes(self, n: int) -> bytes:
        """n bytes from consecutive stream words serialized little-endian."""
        n_words = (n + 7) // 8
        words = np.array([self.next_u64() for _ in range(n_words)], dtype=np.uint64)
        return words.astype("<u8").tobytes()[:n]

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates: for i = len-1 .. 1 swap with j = next_below(i+1)."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_below(i + 1)
            items[i], items[j] = items[j], items[i]
