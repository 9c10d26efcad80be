"""Embedding tables (users or words) and their text-format persistence.

The on-disk format is one "id v1 ... v_d" line per vector, UTF-8, with
floats printed via ``repr`` so a save/load round-trip is exact.  Ids must
not contain whitespace.
"""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor
from .rng import Rng

__all__ = [
    "EmbeddingTable",
    "random_author_embeddings",
    "centroid_fallback",
    "load_word_vectors",
    "load_embeddings",
    "save_embeddings",
]


class EmbeddingTable:
    """id -> fixed-dimension vector store.

    Vectors are held as autodiff tensors; ``trainable`` sets the
    ``requires_grad`` default for vectors added through ``add``.  Lookup
    of a registered id never fails; absent ids return None from ``get``
    (callers decide between a hard error and the centroid fallback).
    """

    def __init__(self, dim: int, trainable: bool = False):
        if dim < 1:
            raise ValueError(f"embedding dimension must be positive, got {dim}")
        self.dim = int(dim)
        self.trainable = bool(trainable)
        self.vectors: dict[str, Tensor] = {}
        # filled by the trainers for loss-curve inspection
        self.epoch_losses: list[float] | None = None

    def add(self, key: str, values, trainable: bool | None = None) -> Tensor:
        arr = np.asarray(values, dtype=np.float64)
        if arr.shape != (self.dim,):
            raise ValueError(f"vector for {key!r} has shape {arr.shape}, expected ({self.dim},)")
        t = Tensor(arr, requires_grad=self.trainable if trainable is None else trainable)
        self.vectors[key] = t
        return t

    def get(self, key: str) -> Tensor | None:
        return self.vectors.get(key)

    def __contains__(self, key: str) -> bool:
        return key in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)

    def ids(self) -> list[str]:
        return sorted(self.vectors)

    def __repr__(self):
        return f"EmbeddingTable(dim={self.dim}, n={len(self)}, trainable={self.trainable})"


def random_author_embeddings(ids, dim: int = 200, rng: Rng | None = None) -> EmbeddingTable:
    """A trainable table with one uniform [-0.5/dim, 0.5/dim] vector per id."""
    if rng is None:
        raise ValueError("random_author_embeddings needs an explicit rng")
    table = EmbeddingTable(dim, trainable=True)
    bound = 0.5 / dim
    for key in sorted(str(i) for i in ids):
        table.add(key, rng.uniform(-bound, bound, dim))
    return table


def centroid_fallback(table: EmbeddingTable) -> np.ndarray:
    """Arithmetic mean of all stored vectors; the stand-in for unknown ids."""
    if len(table) == 0:
        raise ValueError("cannot take the centroid of an empty table")
    acc = np.zeros(table.dim)
    for key in table.ids():
        acc += table.vectors[key].data
    return acc / len(table)


def save_embeddings(table: EmbeddingTable, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key in table.ids():
            if any(ch.isspace() for ch in key):
                raise ValueError(f"id {key!r} contains whitespace; not representable")
            vals = " ".join(repr(float(v)) for v in table.vectors[key].data)
            fh.write(f"{key} {vals}\n")


def load_embeddings(path, trainable: bool = False) -> EmbeddingTable:
    """Parse "id v1 ... v_d" lines; dimension is inferred from the first."""
    table: EmbeddingTable | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) < 2:
                raise ValueError(f"{path}:{lineno}: expected 'id v1 ... v_d'")
            key, values = parts[0], parts[1:]
            try:
                arr = [float(v) for v in values]
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-numeric vector entry") from exc
            if table is None:
                table = EmbeddingTable(len(arr), trainable=trainable)
            elif len(arr) != table.dim:
                raise ValueError(
                    f"{path}:{lineno}: vector has {len(arr)} dims, expected {table.dim}"
                )
            if key in table:
                raise ValueError(f"{path}:{lineno}: duplicate id {key!r}")
            table.add(key, arr)
    if table is None:
        raise ValueError(f"{path}: no vectors found")
    return table


def load_word_vectors(path) -> EmbeddingTable:
    """Load pretrained word vectors (frozen)."""
    return load_embeddings(path, trainable=False)
