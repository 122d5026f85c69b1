"""Deterministic random number generation.

The generator is the splitmix64 sequence: output k is the splitmix64
finalizer applied to ``seed + (k+1) * GOLDEN`` (mod 2**64). Because each
output depends only on the seed and the draw index, blocks of any size can
be produced with vectorized uint64 arithmetic while the stream stays
identical across runs, platforms, and block boundaries.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64_MASK = (1 << 64) - 1
# 53-bit mantissa: top 53 bits of a uint64 give a uniform double in [0, 1)
_INV_2_53 = 2.0 ** -53


def _mix64(x: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer on a uint64 array (wrapping arithmetic)."""
    x = x.copy()
    x ^= x >> np.uint64(30)
    x *= _MIX1
    x ^= x >> np.uint64(27)
    x *= _MIX2
    x ^= x >> np.uint64(31)
    return x


class Rng:
    """Counter-based splitmix64 stream.

    Single-owner: callers advance the state explicitly by drawing. Two
    instances with the same seed produce bitwise-identical streams.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & _U64_MASK
        self._counter = 0

    def clone(self) -> "Rng":
        other = Rng(self.seed)
        other._counter = self._counter
        return other

    def draw_u64(self, n: int) -> np.ndarray:
        """Next n raw 64-bit outputs."""
        if n < 0:
            raise ConfigError(f"cannot draw {n} values")
        idx = np.arange(self._counter + 1, self._counter + n + 1, dtype=np.uint64)
        self._counter += n
        return _mix64(np.uint64(self.seed) + idx * _GOLDEN)

    def uniform(self, n: int) -> np.ndarray:
        """n doubles uniform in [0, 1)."""
        return (self.draw_u64(n) >> np.uint64(11)).astype(np.float64) * _INV_2_53

    def normal(self, n: int) -> np.ndarray:
        """n standard-normal doubles via Box-Muller."""
        pairs = (n + 1) // 2
        # u1 shifted into (0, 1] so log() is finite
        u1 = (self.draw_u64(pairs) >> np.uint64(11)).astype(np.float64)
        u1 = (u1 + 1.0) * _INV_2_53
        u2 = self.uniform(pairs)
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * math.pi * u2
        out = np.concatenate([r * np.cos(theta), r * np.sin(theta)])
        return out[:n]

    def truncated_normal(self, shape: tuple[int, ...], std: float, bound_sigmas: float = 2.0) -> np.ndarray:
        """Normal(0, std**2) resampled until within +/- bound_sigmas * std."""
        n = int(np.prod(shape)) if shape else 1
        out = self.normal(n)
        for _ in range(100):
            bad = np.abs(out) > bound_sigmas
            if not bad.any():
                break
            out[bad] = self.normal(int(bad.sum()))
        return (out * std).reshape(shape)

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates permutation of range(n)."""
        perm = np.arange(n, dtype=np.int64)
        if n < 2:
            return perm
        u = self.uniform(n - 1)
        for i in range(n - 1, 0, -1):
            j = int(u[n - 1 - i] * (i + 1))
            perm[i], perm[j] = perm[j], perm[i]
        return perm

    def keep_mask(self, shape: tuple[int, ...], drop_p: float) -> np.ndarray:
        """Boolean array, True with probability 1 - drop_p per entry."""
        n = int(np.prod(shape)) if shape else 1
        return (self.uniform(n) >= drop_p).reshape(shape)
