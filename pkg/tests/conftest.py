"""Shared fixture builders: tiny corpora, graphs and models."""

import numpy as np
import pytest

from socialtext.embeddings import EmbeddingTable
from socialtext.graph import build_social_graph
from socialtext.model import FusionModel, ModelConfig
from socialtext.rng import Rng
from socialtext.text import Corpus, LabeledExample, TASK_LABELS, Vocab, preprocess


def make_corpus(task, rows):
    """rows: (id, author, label_name, text, split)."""
    labels = TASK_LABELS[task]
    index = {name: i for i, name in enumerate(labels)}
    corpus = Corpus(task=task, label_names=labels)
    for rid, author, label, text, split in rows:
        corpus.examples.append(
            LabeledExample(
                id=rid,
                author=author,
                label=index[label],
                raw_text=text,
                tokens=preprocess(text),
                split=split,
            )
        )
    return corpus


def separable_corpus(task="hate", n_per_class=40, seed=0, authors=4):
    """Two disjoint vocabularies, one per class: learnable by text alone."""
    rng = Rng(seed)
    labels = TASK_LABELS[task]
    rows = []
    rid = 0
    for k, label in enumerate(labels):
        vocab = [f"w{k}x{j}" for j in range(6)]
        for _ in range(n_per_class):
            text = " ".join(vocab[int(rng.random() * 6)] for _ in range(5))
            split = ("train", "val", "test")[
                0 if rid % 10 < 8 else (1 if rid % 10 == 8 else 2)
            ]
            rows.append((f"t{rid}", f"u{rid % authors}", label, text, split))
            rid += 1
    return make_corpus(task, rows)


def small_table(ids, dim, seed=0, trainable=False):
    rng = Rng(seed)
    table = EmbeddingTable(dim, trainable=trainable)
    for i in sorted(ids):
        table.add(i, rng.normal(size=dim))
    return table


def tiny_model(corpus, variant="LING", seed=0, **cfg_kwargs):
    """A small model over the corpus with fresh random parts."""
    # classifier_hidden stays >= 16: with very few ReLU units and no bias,
    # a whole input cluster can go dead and never recover
    defaults = dict(
        word_dim=8, text_hidden=6, author_dim=10, gat_hidden=4, gat_heads=2,
        classifier_hidden=16,
    )
    defaults.update(cfg_kwargs)
    cfg = ModelConfig(variant=variant, task=corpus.task, **defaults)
    vocab = Vocab.from_corpus(corpus)
    rng = Rng(seed)
    author_table = None
    graph = None
    if variant == "LING_RANDOM":
        from socialtext.embeddings import random_author_embeddings

        author_table = random_author_embeddings(corpus.authors(), cfg.author_dim, rng.child("at"))
    elif variant in ("LING_PV", "LING_N2V"):
        author_table = small_table(corpus.authors(), cfg.author_dim, seed=seed + 1)
    elif variant == "LING_GAT":
        authors = sorted(corpus.authors())
        events = [(authors[i], authors[(i + 1) % len(authors)]) for i in range(len(authors))]
        graph = build_social_graph(set(authors), events)
        author_table = small_table(authors, cfg.author_dim, seed=seed + 1)
    return FusionModel.build(
        cfg, vocab, rng.child("model"),
        author_table=author_table, graph=graph,
    )


@pytest.fixture
def hate_corpus():
    return separable_corpus("hate")
