"""Skip-gram with negative sampling and its two front-ends.

One SGNS core serves both pretraining routes: ``node2vec`` feeds it
random-walk sequences over the social graph, and ``train_pv_dbow`` trains
one document vector per author against tokens of her concatenated
timeline (distributed bag of words).

Implementation notes:

* Negatives are drawn from the unigram distribution raised to 0.75.
* Input vectors start uniform in [-0.5/dim, 0.5/dim]; output vectors
  start at zero (the classic word2vec setup).
* The learning rate decays linearly over all center positions down to a
  1e-4 floor of the starting rate.
* All pairs of one center are updated as a block (one gather, one
  scatter-add); this is the deterministic batched analog of the usual
  sequential pair loop.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .embeddings import EmbeddingTable
from .graph import SocialGraph
from .rng import Rng
from .walks import WalkConfig, generate_walks

__all__ = ["SkipgramConfig", "train_skipgram", "train_pv_dbow", "node2vec"]


@dataclass
class SkipgramConfig:
    window: int = 10
    negatives: int = 5
    epochs: int = 20
    learning_rate: float = 0.025
    min_count: int = 0

    def __post_init__(self):
        if self.window < 1 or self.negatives < 1:
            raise ValueError("window and negatives must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be nonnegative")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.min_count < 0:
            raise ValueError("min_count must be nonnegative")


def _sigmoid(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-x))


class _SgnsCore:
    """Shared vocabulary, noise distribution and update rule."""

    def __init__(self, counts: Counter, min_count: int, dim: int, negatives: int, rng: Rng):
        vocab = sorted(t for t, c in counts.items() if c >= max(min_count, 1))
        if not vocab:
            raise ValueError("corpus is empty after min-count filtering")
        self.vocab = vocab
        self.index = {t: i for i, t in enumerate(vocab)}
        self.dim = dim
        self.negatives = negatives
        freq = np.array([counts[t] for t in vocab], dtype=np.float64) ** 0.75
        self.noise_cum = np.cumsum(freq / freq.sum())
        self.w_out = np.zeros((len(vocab), dim))
        self.rng = rng

    def init_vectors(self, n: int) -> np.ndarray:
        bound = 0.5 / self.dim
        return self.rng.uniform(-bound, bound, (n, self.dim))

    def sample_negatives(self, shape) -> np.ndarray:
        draws = self.rng.random(shape)
        return np.searchsorted(self.noise_cum, draws, side="right").clip(max=len(self.vocab) - 1)

    def update(self, v: np.ndarray, targets: np.ndarray, lr: float) -> tuple[np.ndarray, float]:
        """One block update of input vector ``v`` against positive ``targets``.

        Returns (gradient for v, summed loss).  Negatives that collide
        with their own positive target are masked out.
        """
        k = targets.shape[0]
        neg = self.sample_negatives((k, self.negatives))
        rows = np.concatenate((targets, neg.ravel()))
        labels = np.zeros(rows.shape[0])
        labels[:k] = 1.0
        mask = np.ones(rows.shape[0])
        collide = neg == targets[:, None]
        if collide.any():
            mask[k:] = (~collide).ravel()
        out = self.w_out[rows]
        f = _sigmoid(out @ v)
        g = (labels - f) * lr * mask
        grad_v = g @ out
        np.add.at(self.w_out, rows, np.outer(g, v))
        fc = np.clip(f, 1e-10, 1.0 - 1e-10)
        loss = -(np.log(fc[:k]).sum() + (np.log(1.0 - fc[k:]) * mask[k:]).sum())
        return grad_v, float(loss)


def train_skipgram(
    sequences: Sequence[Sequence[str]],
    cfg: SkipgramConfig,
    rng: Rng,
    dim: int = 200,
) -> EmbeddingTable:
    """Skip-gram over within-window pairs of the given token sequences.

    Returns the input-side vectors as a frozen table with per-epoch mean
    pair losses attached in ``epoch_losses``.
    """
    counts = Counter(tok for seq in sequences for tok in seq)
    if not counts:
        raise ValueError("empty corpus")
    core = _SgnsCore(counts, cfg.min_count, dim, cfg.negatives, rng.child("core"))
    encoded = []
    for seq in sequences:
        idx = [core.index[t] for t in seq if t in core.index]
        if idx:
            encoded.append(np.array(idx, dtype=np.intp))
    w_in = core.init_vectors(len(core.vocab))
    total = max(1, cfg.epochs * sum(len(s) for s in encoded))
    lr0 = cfg.learning_rate
    step = 0
    losses: list[float] = []
    for _ in range(cfg.epochs):
        loss_sum = 0.0
        pair_count = 0
        for seq in encoded:
            n = len(seq)
            for i in range(n):
                lr = max(lr0 * (1.0 - step / total), lr0 * 1e-4)
                step += 1
                lo = 0 if i < cfg.window else i - cfg.window
                hi = min(n, i + cfg.window + 1)
                if hi - lo <= 1:
                    continue
                ctx = np.concatenate((seq[lo:i], seq[i + 1 : hi]))
                grad_v, loss = core.update(w_in[seq[i]], ctx, lr)
                w_in[seq[i]] += grad_v
                loss_sum += loss
                pair_count += len(ctx)
        losses.append(loss_sum / max(1, pair_count))
    table = EmbeddingTable(dim, trainable=False)
    for tok in core.vocab:
        table.add(tok, w_in[core.index[tok]])
    table.epoch_losses = losses
    return table


def train_pv_dbow(
    author_docs: Mapping[str, Sequence[str]],
    cfg: SkipgramConfig | None = None,
    rng: Rng | None = None,
    dim: int = 200,
) -> EmbeddingTable:
    """Distributed bag-of-words paragraph vectors over author timelines.

    Each author vector is trained to predict (against sampled negatives)
    the tokens of her concatenated past posts.  Authors whose timeline is
    empty after min-count filtering are left out of the table; the
    centroid fallback covers them downstream.
    """
    if rng is None:
        raise ValueError("train_pv_dbow needs an explicit rng")
    if cfg is None:
        cfg = SkipgramConfig(epochs=30, min_count=5)
    if not author_docs:
        raise ValueError("empty author-document map")
    counts = Counter(tok for doc in author_docs.values() for tok in doc)
    core = _SgnsCore(counts, cfg.min_count, dim, cfg.negatives, rng.child("core"))
    authors = sorted(author_docs)
    docs = []
    kept_authors = []
    for a in authors:
        idx = [core.index[t] for t in author_docs[a] if t in core.index]
        if idx:
            docs.append(np.array(idx, dtype=np.intp))
            kept_authors.append(a)
    if not kept_authors:
        raise ValueError("all timelines empty after min-count filtering")
    d_in = core.init_vectors(len(kept_authors))
    total = max(1, cfg.epochs * sum(len(d) for d in docs))
    lr0 = cfg.learning_rate
    step = 0
    losses: list[float] = []
    chunk = 64  # block size per update; keeps the scatter-add bounded
    for _ in range(cfg.epochs):
        loss_sum = 0.0
        pair_count = 0
        for ai, doc in enumerate(docs):
            for s in range(0, len(doc), chunk):
                block = doc[s : s + chunk]
                lr = max(lr0 * (1.0 - step / total), lr0 * 1e-4)
                step += len(block)
                grad_v, loss = core.update(d_in[ai], block, lr)
                d_in[ai] += grad_v
                loss_sum += loss
                pair_count += len(block)
        losses.append(loss_sum / max(1, pair_count))
    table = EmbeddingTable(dim, trainable=False)
    for ai, a in enumerate(kept_authors):
        table.add(a, d_in[ai])
    table.epoch_losses = losses
    return table


def node2vec(
    g: SocialGraph,
    wc: WalkConfig | None = None,
    sc: SkipgramConfig | None = None,
    rng: Rng | None = None,
    dim: int = 200,
) -> EmbeddingTable:
    """Biased walks plus skip-gram; every graph node receives a vector."""
    if rng is None:
        raise ValueError("node2vec needs an explicit rng")
    if wc is None:
        wc = WalkConfig()
    if sc is None:
        sc = SkipgramConfig(epochs=20, min_count=0)
    walks = generate_walks(g, wc, rng.child("walks"))
    table = train_skipgram(walks, sc, rng.child("sgns"), dim=dim)
    missing = [u for u in g.node_ids if u not in table]
    if missing:  # pragma: no cover - min_count=0 and walk starts prevent this
        raise RuntimeError(f"{len(missing)} nodes received no vector (min_count too high?)")
    return table
