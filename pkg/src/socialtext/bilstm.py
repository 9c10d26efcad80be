"""Bidirectional LSTM text encoder.

One fused tape record per cell step keeps the per-token op count constant:
the forward computes all four gates in numpy and the closure applies the
analytic cell backward.  The encoder output is the concatenation of the
final forward and final backward hidden states (length 2 * hidden); an
empty token sequence encodes to the zero vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor, concat, current_tape, _out
from .embeddings import EmbeddingTable
from .rng import Rng
from .text import Vocab

__all__ = ["LstmParams", "BiLstm", "lstm_step", "bilstm_encode", "MAX_TOKENS"]

# tweets rarely exceed this; truncation bounds the tape length
MAX_TOKENS = 64


@dataclass
class LstmParams:
    """One direction: fused gate weights [4h, e+h] (i, f, g, o blocks) and bias."""

    w: Tensor
    b: Tensor
    hidden: int

    @classmethod
    def init(cls, input_dim: int, hidden: int, rng: Rng) -> "LstmParams":
        bound = 1.0 / np.sqrt(hidden)
        w = Tensor(rng.uniform(-bound, bound, (4 * hidden, input_dim + hidden)), requires_grad=True)
        b = np.zeros(4 * hidden)
        b[hidden : 2 * hidden] = 1.0  # forget gate starts open
        return cls(w=w, b=Tensor(b, requires_grad=True), hidden=hidden)


def _sig(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-x))


def lstm_step(params: LstmParams, x: Tensor, h: Tensor, c: Tensor) -> tuple[Tensor, Tensor]:
    """One cell step; returns (h_next, c_next) as a single fused record."""
    H = params.hidden
    wd, bd = params.w.data, params.b.data
    xh = np.concatenate((x.data, h.data))
    z = wd @ xh + bd
    gi = _sig(z[:H])
    gf = _sig(z[H : 2 * H])
    gg = np.tanh(z[2 * H : 3 * H])
    go = _sig(z[3 * H :])
    c2 = gf * c.data + gi * gg
    tc = np.tanh(c2)
    h2 = go * tc
    req = (
        params.w.requires_grad
        or params.b.requires_grad
        or x.requires_grad
        or h.requires_grad
        or c.requires_grad
    )
    out_h = _out(h2, req)
    out_c = _out(c2, req)
    tape = current_tape()
    if req and tape is not None:
        cd = c.data
        e = x.data.shape[0]

        def back(gs):
            gh, gc = gs
            gct = gc + gh * go * (1.0 - tc * tc)
            d_o = gh * tc
            d_f = gct * cd
            d_i = gct * gg
            d_g = gct * gi
            gz = np.concatenate(
                (
                    d_i * gi * (1.0 - gi),
                    d_f * gf * (1.0 - gf),
                    d_g * (1.0 - gg * gg),
                    d_o * go * (1.0 - go),
                )
            )
            contribs = []
            if params.w.requires_grad:
                contribs.append((params.w, np.outer(gz, xh)))
            if params.b.requires_grad:
                contribs.append((params.b, gz))
            if x.requires_grad or h.requires_grad:
                gxh = wd.T @ gz
                if x.requires_grad:
                    contribs.append((x, gxh[:e]))
                if h.requires_grad:
                    contribs.append((h, gxh[e:]))
            if c.requires_grad:
                contribs.append((c, gct * gf))
            return contribs

        tape._record((out_h, out_c), back)
    return out_h, out_c


@dataclass
class BiLstm:
    forward: LstmParams
    backward: LstmParams

    @classmethod
    def init(cls, input_dim: int, hidden: int, rng: Rng) -> "BiLstm":
        return cls(
            forward=LstmParams.init(input_dim, hidden, rng.child("fw")),
            backward=LstmParams.init(input_dim, hidden, rng.child("bw")),
        )

    @property
    def hidden(self) -> int:
        return self.forward.hidden

    @property
    def out_dim(self) -> int:
        return 2 * self.forward.hidden

    def _run(self, params: LstmParams, vecs) -> Tensor:
        H = params.hidden
        h = Tensor(np.zeros(H))
        c = Tensor(np.zeros(H))
        for x in vecs:
            h, c = lstm_step(params, x, h, c)
        return h

    def encode(self, vecs: list[Tensor]) -> Tensor:
        """Concatenated final states of the two passes; zeros on empty input."""
        if not vecs:
            return Tensor(np.zeros(self.out_dim))
        hf = self._run(self.forward, vecs)
        hb = self._run(self.backward, list(reversed(vecs)))
        return concat(hf, hb)


def bilstm_encode(
    tokens: list[str],
    bilstm: BiLstm,
    vocab: Vocab,
    word_table: EmbeddingTable,
    max_tokens: int = MAX_TOKENS,
) -> Tensor:
    """Embed tokens (<unk> for out-of-vocabulary) and encode the sequence."""
    unk = word_table.get("<unk>")
    vecs = []
    for tok in tokens[:max_tokens]:
        vec = word_table.get(tok) if tok in vocab else None
        vecs.append(vec if vec is not None else unk)
    return bilstm.encode(vecs)
