"""Deterministic random streams.

All randomness in the engine flows through :class:`RandomSource`, a thin wrapper
around numpy's Philox4x32-10 counter-based bit generator.  Philox has fixed,
published round constants and produces the same stream on every platform for a
given (seed, key), which is what makes seeded runs byte-reproducible.  Derived
streams are obtained through ``SeedSequence`` spawn keys rather than by drawing
seeds from a parent stream, so child sources are independent and stable.
"""

from __future__ import annotations

import numpy as np


class RandomSource:
    """Seeded Philox stream; ``child(k)`` derives an independent keyed stream."""

    def __init__(self, seed: int, key: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=self.key)
        self.generator = np.random.Generator(np.random.Philox(seq))

    def child(self, *key: int) -> "RandomSource":
        return RandomSource(self.seed, self.key + tuple(key))

    def integers(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        return int(self.generator.integers(n))

    def integer_range(self, low: int, high: int) -> int:
        """Uniform integer in [low, high] inclusive."""
        return int(self.generator.integers(low, high + 1))

    def random(self, size=None, dtype=np.float64):
        return self.generator.random(size, dtype=dtype)

    def uniform(self, low: float, high: float) -> float:
        return float(self.generator.uniform(low, high))

    def permutation(self, n: int) -> np.ndarray:
        return self.generator.permutation(n)

    def describe(self) -> str:
        """Stable identifier of this stream, e.g. ``"42"`` or ``"42/3/0"``."""
        return "/".join(str(x) for x in (self.seed, *self.key))

    def __repr__(self) -> str:
        return f"RandomSource({self.describe()})"
