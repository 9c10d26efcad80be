"""Single-hop multi-head graph attention over the social graph.

For a target node v every neighbor u in N(v) plus the virtual self-loop
gets a score

    e_vu = leaky_relu( a . (W h_v || W h_u), 0.2 )

computed on the projected vectors; the scores are softmax-normalized into
attention weights and each head emits

    relu( sum_u alpha_vu (W h_u + b) ).

Head outputs are concatenated in head order.  The update reads exactly
N(v) and v (one hop).  Each head is one fused tape record, and the exact
normalized weights used by the update are returned alongside it, so
attention inspection never recomputes anything.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor, concat, current_tape, _out
from .embeddings import EmbeddingTable
from .graph import SocialGraph
from .rng import Rng

__all__ = [
    "GatHead",
    "GatLayer",
    "AttentionRecord",
    "attention_weights",
    "node_update",
    "extract_attention",
]

LEAKY_ALPHA = 0.2  # fixed across all settings

GAT_HIDDEN_GRID = (10, 15, 20, 25, 30, 50)
GAT_HEAD_GRID = (1, 2, 3, 4)


@dataclass
class GatHead:
    wa: Tensor  # attention vector, length 2 * hidden
    wk: Tensor  # projection, [in_dim, hidden]
    bk: Tensor  # update bias, length hidden


@dataclass
class AttentionRecord:
    """Per-head (neighbor, weight) lists, sorted by descending weight."""

    target: str
    heads: list[list[tuple[str, float]]]

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "heads": [
                [{"neighbor": n, "weight": w} for n, w in head] for head in self.heads
            ],
        }


class GatLayer:
    def __init__(self, in_dim: int, hidden: int, heads: int, rng: Rng):
        if heads < 1:
            raise ValueError(f"head count must be positive, got {heads}")
        if hidden < 1:
            raise ValueError(f"hidden size must be positive, got {hidden}")
        self.in_dim = in_dim
        self.hidden = hidden
        self.heads: list[GatHead] = []
        bound = 1.0 / np.sqrt(hidden)
        for k in range(heads):
            r = rng.child("head", k)
            self.heads.append(
                GatHead(
                    wa=Tensor(r.uniform(-bound, bound, 2 * hidden), requires_grad=True),
                    wk=Tensor(r.uniform(-bound, bound, (in_dim, hidden)), requires_grad=True),
                    bk=Tensor(np.zeros(hidden), requires_grad=True),
                )
            )

    @property
    def n_heads(self) -> int:
        return len(self.heads)

    @property
    def out_dim(self) -> int:
        return self.n_heads * self.hidden

    def _neighborhood(self, v: str, table: EmbeddingTable, g: SocialGraph):
        if v not in g:
            raise KeyError(f"node {v!r} is not in the graph")
        nodes = sorted(set(g.neighbors(v)) | {v})
        vecs = []
        for u in nodes:
            t = table.get(u)
            if t is None:
                raise KeyError(f"no embedding for graph node {u!r}")
            vecs.append(t)
        return nodes, vecs, nodes.index(v)

    def _head_forward(self, head: GatHead, vecs: list[Tensor], target_idx: int):
        """One head on an explicit neighborhood; returns (output, weights)."""
        wa_d, wk_d, bk_d = head.wa.data, head.wk.data, head.bk.data
        dh = self.hidden
        H = np.stack([t.data for t in vecs])
        P = H @ wk_d
        Pb = P + bk_d
        wa1, wa2 = wa_d[:dh], wa_d[dh:]
        cv = float(P[target_idx] @ wa1)
        raw = cv + P @ wa2
        scores = np.where(raw > 0, raw, LEAKY_ALPHA * raw)
        e = np.exp(scores - scores.max())
        att = e / e.sum()
        msg = att @ Pb
        out_d = np.maximum(msg, 0.0)
        req = (
            head.wa.requires_grad
            or head.wk.requires_grad
            or head.bk.requires_grad
            or any(t.requires_grad for t in vecs)
        )
        out = _out(out_d, req)
        tape = current_tape()
        if req and tape is not None:

            def back(gs):
                (g,) = gs
                gmsg = g * (msg > 0)
                gatt = Pb @ gmsg
                gPb = np.outer(att, gmsg)
                gscore = att * (gatt - float(att @ gatt))
                graw = gscore * np.where(raw > 0, 1.0, LEAKY_ALPHA)
                s = float(graw.sum())
                gP = gPb + np.outer(graw, wa2)
                gP[target_idx] += s * wa1
                contribs = []
                if head.wa.requires_grad:
                    contribs.append(
                        (head.wa, np.concatenate((s * P[target_idx], P.T @ graw)))
                    )
                if head.wk.requires_grad:
                    contribs.append((head.wk, H.T @ gP))
                if head.bk.requires_grad:
                    contribs.append((head.bk, gPb.sum(axis=0)))
                if any(t.requires_grad for t in vecs):
                    gH = gP @ wk_d.T
                    for idx, t in enumerate(vecs):
                        if t.requires_grad:
                            contribs.append((t, gH[idx]))
                return contribs

            tape._record((out,), back)
        return out, att

    def forward_neighborhood(
        self, target: str, nodes: list[str], vecs: list[Tensor], target_idx: int
    ) -> tuple[Tensor, AttentionRecord]:
        outs = []
        weights = []
        for head in self.heads:
            out, att = self._head_forward(head, vecs, target_idx)
            outs.append(out)
            pairs = sorted(zip(nodes, att.tolist()), key=lambda p: (-p[1], p[0]))
            weights.append([(n, float(w)) for n, w in pairs])
        result = outs[0]
        for o in outs[1:]:
            result = concat(result, o)
        return result, AttentionRecord(target=target, heads=weights)

    def forward(
        self, v: str, table: EmbeddingTable, g: SocialGraph
    ) -> tuple[Tensor, AttentionRecord]:
        nodes, vecs, target_idx = self._neighborhood(v, table, g)
        return self.forward_neighborhood(v, nodes, vecs, target_idx)

    def forward_virtual(self, author: str, vec: Tensor) -> tuple[Tensor, AttentionRecord]:
        """A node outside the graph: its only connection is the self-loop."""
        return self.forward_neighborhood(author, [author], [vec], 0)

    def parameters(self) -> dict[str, Tensor]:
        out = {}
        for k, head in enumerate(self.heads):
            out[f"gat.h{k}.wa"] = head.wa
            out[f"gat.h{k}.wk"] = head.wk
            out[f"gat.h{k}.bk"] = head.bk
        return out


def attention_weights(
    layer: GatLayer, head: int, v: str, table: EmbeddingTable, g: SocialGraph
) -> dict[str, float]:
    """Normalized attention of one head over N(v) plus the self-loop."""
    nodes, vecs, target_idx = layer._neighborhood(v, table, g)
    _, att = layer._head_forward(layer.heads[head], vecs, target_idx)
    return dict(zip(nodes, att.tolist()))


def node_update(layer: GatLayer, v: str, table: EmbeddingTable, g: SocialGraph) -> Tensor:
    return layer.forward(v, table, g)[0]


def extract_attention(
    layer: GatLayer, v: str, table: EmbeddingTable, g: SocialGraph
) -> AttentionRecord:
    return layer.forward(v, table, g)[1]
