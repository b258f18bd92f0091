"""Seeded random streams.

A thin wrapper over :class:`numpy.random.Generator` that can split into
independent child streams, so per-agent and per-worker randomness is fixed up
front and does not depend on scheduling.
"""
from __future__ import annotations

import numpy as np


class RandomStream:
    def __init__(self, seed=None):
        if isinstance(seed, np.random.SeedSequence):
            self._seq = seed
        else:
            self._seq = np.random.SeedSequence(seed)
        self.gen = np.random.Generator(np.random.PCG64(self._seq))

    @property
    def seed_sequence(self):
        return self._seq

    def spawn(self, n):
        """Return ``n`` independent child streams."""
        return [RandomStream(s) for s in self._seq.spawn(n)]

    def normal(self, size=None):
        return self.gen.standard_normal(size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self.gen.uniform(low, high, size)

    def integers(self, low, high=None, size=None):
        return self.gen.integers(low, high, size)

    def random(self, size=None):
        return self.gen.random(size)

    def choice(self, a, size=None, replace=True, p=None):
        return self.gen.choice(a, size=size, replace=replace, p=p)

    def permutation(self, x):
        return self.gen.permutation(x)

    def categorical(self, probs):
        """Index drawn from a probability vector by inverse CDF on one uniform."""
        u = self.gen.random()
        cdf = np.cumsum(probs)
        idx = int(np.searchsorted(cdf, u * cdf[-1], side="right"))
        return min(idx, len(probs) - 1)
