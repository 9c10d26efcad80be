"""Second-order biased random walks over the social graph.

The walk chooses its next node with the usual return / in-out biases:
stepping from ``cur`` with previous node ``prev``, a neighbor x gets
unnormalized weight 1/p if x == prev, 1 if x is adjacent to prev, and
1/q otherwise; the first step is uniform.  p = q = 1 reduces to a plain
first-order walk with exact 1/degree transition probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import SocialGraph
from .rng import Rng

__all__ = ["WalkConfig", "next_step_distribution", "generate_walks"]


@dataclass
class WalkConfig:
    p: float = 1.0
    q: float = 1.0
    walk_length: int = 80
    walks_per_node: int = 10

    def __post_init__(self):
        if self.p <= 0 or self.q <= 0:
            raise ValueError(f"walk biases must be positive, got p={self.p}, q={self.q}")
        if self.walk_length < 1 or self.walks_per_node < 1:
            raise ValueError("walk_length and walks_per_node must be positive")


def _step_weights(g: SocialGraph, prev, cur: str, p: float, q: float):
    nbrs = g.neighbors(cur)
    if prev is None or (p == 1.0 and q == 1.0):
        return nbrs, np.ones(len(nbrs))
    w = np.empty(len(nbrs))
    for i, x in enumerate(nbrs):
        if x == prev:
            w[i] = 1.0 / p
        elif g.has_edge(x, prev):
            w[i] = 1.0
        else:
            w[i] = 1.0 / q
    return nbrs, w


def next_step_distribution(g: SocialGraph, prev, cur: str, cfg: WalkConfig) -> dict:
    """Normalized transition probabilities over neighbors(cur)."""
    nbrs, w = _step_weights(g, prev, cur, cfg.p, cfg.q)
    if len(nbrs) == 0:
        raise ValueError(f"node {cur!r} has no neighbors; walk must terminate")
    w = w / w.sum()
    return dict(zip(nbrs, (float(x) for x in w)))


def generate_walks(g: SocialGraph, cfg: WalkConfig, rng: Rng) -> list[list[str]]:
    """``walks_per_node`` walks from every node, each up to ``walk_length``.

    Node order is reshuffled every pass (one pass starts one walk per
    node).  Isolated nodes yield length-1 walks.  Fully deterministic
    under a fixed rng.
    """
    walks: list[list[str]] = []
    nodes = list(g.node_ids)
    for _ in range(cfg.walks_per_node):
        for start in rng.permuted(nodes):
            walk = [start]
            while len(walk) < cfg.walk_length:
                cur = walk[-1]
                nbrs, w = _step_weights(
                    g, walk[-2] if len(walk) > 1 else None, cur, cfg.p, cfg.q
                )
                if len(nbrs) == 0:
                    break
                cum = np.cumsum(w)
                draw = rng.random() * cum[-1]
                j = int(np.searchsorted(cum, draw, side="right"))
                if j >= len(nbrs):  # guard against draw == cum[-1]
                    j = len(nbrs) - 1
                walk.append(nbrs[j])
            walks.append(walk)
    return walks
