"""Deterministic, platform-independent random number generation.

The generator is counter-based splitmix64: draw ``k`` is the splitmix64
finalizer applied to ``seed + (counter + k) * GOLDEN`` in wrapping uint64
arithmetic. Because each output depends only on (seed, counter), blocks of
any size can be produced with vectorized numpy uint64 ops and the stream is
identical on every platform for a given seed. Uniform doubles take the top
53 bits, giving values in [0, 1).
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def _mix_scalar(z: int) -> int:
    z = (z ^ (z >> 30)) * _MIX1 & _MASK64
    z = (z ^ (z >> 27)) * _MIX2 & _MASK64
    return z ^ (z >> 31)


class Rng:
    """Seeded splitmix64 stream. Single-owner: never share across threads."""

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self._counter = 0

    def _raw(self, n: int) -> np.ndarray:
        """Next ``n`` uint64 outputs, advancing the counter."""
        idx = np.arange(self._counter + 1, self._counter + n + 1, dtype=np.uint64)
        self._counter += n
        with np.errstate(over="ignore"):
            z = (np.uint64(self.seed) + idx * np.uint64(_GOLDEN))
            z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
            return z ^ (z >> np.uint64(31))

    def uniform(self, shape, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
        """I.i.d. uniform draws in [lo, hi) as float64."""
        if not lo < hi:
            raise ConfigError(f"uniform bounds require lo < hi, got lo={lo}, hi={hi}")
        if isinstance(shape, int):
            shape = (shape,)
        n = int(np.prod(shape)) if shape else 1
        u = (self._raw(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return (lo + (hi - lo) * u).reshape(shape)

    def permutation(self, n: int) -> np.ndarray:
        """Uniform permutation of range(n): stable argsort of raw uint64 keys."""
        return np.argsort(self._raw(n), kind="stable")

    def derive(self, tag: int) -> "Rng":
        """Independent child stream; deterministic in (seed, tag)."""
        child = _mix_scalar((_mix_scalar(self.seed) + (tag + 1) * _GOLDEN) & _MASK64)
        return Rng(child)
