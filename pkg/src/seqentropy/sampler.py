"""Reproducible unbounded i.i.d. class-label streams.

Labels are drawn by inverse CDF: a uniform double from numpy's PCG64 generator
is located in the cumulative probability vector with a binary search. PCG64
doubles are consumed one per draw, so the label sequence does not depend on the
internal buffering block size.
"""

from __future__ import annotations

import numpy as np

from .dist import CategoricalDistribution
from .errors import CapExceeded

DEFAULT_MAX_DRAWS = 10**7
GENERATOR = "numpy-PCG64/SeedSequence(seed)/random-double/inverse-cdf-searchsorted-right"

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def derive_seed(master_seed: int, replication_index: int) -> int:
    """Seed for replication ``replication_index`` of a run seeded by ``master_seed``.

    SplitMix64: the state ``master + (index + 1) * golden`` goes through the
    SplitMix64 finalizer. Both steps are bijections of 64-bit words for a fixed
    master, so distinct indices below 2**64 never collide.
    """
    z = (master_seed + (replication_index + 1) * _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def cumulative(dist: CategoricalDistribution) -> np.ndarray:
    cdf = np.cumsum(np.asarray(dist.probs, dtype=np.float64))
    # pin the top so no uniform in [0, 1) falls past the last reachable class
    cdf[dist.support[-1] - 1:] = 1.0
    return cdf


class SampleStream:
    """Single-owner stream ``w_1, w_2, ...`` of labels in ``1..len(dist)``."""

    def __init__(self, distribution: CategoricalDistribution, seed: int,
                 max_draws: int = DEFAULT_MAX_DRAWS, cdf: np.ndarray | None = None):
        if max_draws < 1:
            raise ValueError("max_draws must be positive")
        self.distribution = distribution
        self.seed = seed
        self.max_draws = max_draws
        self._cdf = cumulative(distribution) if cdf is None else cdf
        self._rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
        self._buffer: list[int] = []
        self._pos = 0
        self._block = 64
        self._consumed = 0

    @property
    def draws_consumed(self) -> int:
        return self._consumed

    def _refill(self):
        u = self._rng.random(self._block)
        self._buffer = (np.searchsorted(self._cdf, u, side="right") + 1).tolist()
        self._pos = 0
        if self._block < 1 << 16:
            self._block *= 2

    def next_sample(self) -> int:
        if self._consumed >= self.max_draws:
            raise CapExceeded(self.max_draws)
        if self._pos == len(self._buffer):
            self._refill()
        label = self._buffer[self._pos]
        self._pos += 1
        self._consumed += 1
        return label

    def take(self, k: int) -> list[int]:
        return [self.next_sample() for _ in range(k)]


class ReplayStream:
    """Stream that replays a fixed label sequence, then behaves as if capped.

    Used to trace estimators on hand-written prefixes.
    """

    distribution = None

    def __init__(self, labels):
        self._labels = list(labels)
        self.max_draws = len(self._labels)
        self._consumed = 0

    @property
    def draws_consumed(self) -> int:
        return self._consumed

    def next_sample(self) -> int:
        if self._consumed >= self.max_draws:
            raise CapExceeded(self.max_draws)
        label = self._labels[self._consumed]
        self._consumed += 1
        return label

    def take(self, k: int) -> list[int]:
        return [self.next_sample() for _ in range(k)]
