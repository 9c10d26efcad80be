"""Reproducible randomness for every stochastic component.

``Rng`` wraps numpy's PCG64 bit generator seeded through ``SeedSequence``.
PCG64 is a documented, versioned algorithm whose stream is stable across
platforms and numpy releases, so a ``(seed, path)`` pair identifies one
stream forever.  ``child`` derives an independent, named substream; walk
generation, dropout, initialisation and shuffling each pull from their own
child so that adding draws to one component never perturbs another.
"""

from __future__ import annotations

import zlib

import numpy as np

__all__ = ["Rng"]


def _path_key(key) -> int:
    if isinstance(key, (int, np.integer)):
        return int(key)
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    raise TypeError(f"rng path keys must be int or str, got {type(key).__name__}")


class Rng:
    """Seeded generator: identical (seed, path) gives an identical stream."""

    __slots__ = ("seed", "path", "_gen")

    def __init__(self, seed: int, path: tuple = ()):
        self.seed = int(seed)
        self.path = tuple(_path_key(k) for k in path)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def child(self, *key) -> "Rng":
        """Derive the independent substream named by ``key``."""
        return Rng(self.seed, self.path + tuple(key))

    def random(self, size=None):
        return self._gen.random(size)

    def uniform(self, low: float, high: float, size=None):
        return self._gen.uniform(low, high, size)

    def normal(self, loc: float = 0.0, scale: float = 1.0, size=None):
        return self._gen.normal(loc, scale, size)

    def integers(self, low: int, high=None, size=None):
        return self._gen.integers(low, high, size)

    def choice(self, seq, size=None, replace=True):
        return self._gen.choice(seq, size=size, replace=replace)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def permuted(self, seq) -> list:
        """Return a shuffled copy of ``seq`` as a list."""
        items = list(seq)
        return [items[i] for i in self._gen.permutation(len(items))]

    def __repr__(self):
        return f"Rng(seed={self.seed}, path={self.path})"
