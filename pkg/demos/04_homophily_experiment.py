"""When does social information help? A controlled homophily experiment.

Generates two planted-partition corpora that differ only in graph
homophily: one where connected users mostly share labels (0.9) and one at
the chance level for three balanced classes (~0.35). Text carries only a
partial signal, so on the homophilous graph the author side has room to
help. Trains the text-only model, the static pretrained-embedding fusion
and the graph-attention fusion over a few seeds each, then runs the
pairwise significance test over the per-seed metrics.

Scaled down to finish in a couple of minutes; the acceptance suite runs
the full-size version.
"""

import numpy as np

from socialtext.graph import build_social_graph, homophily
from socialtext.metrics import significance_matrix
from socialtext.model import FusionModel, ModelConfig
from socialtext.rng import Rng
from socialtext.sgns import SkipgramConfig, node2vec
from socialtext.synth import SynthSpec, generate
from socialtext.text import Corpus, LabeledExample, TASK_LABELS, Vocab, preprocess
from socialtext.train import TrainConfig, train_model
from socialtext.walks import WalkConfig

SEEDS = (0, 1, 2)


def build_dataset(target_homophily, seed=0):
    spec = SynthSpec(
        n_users=600, n_classes=3, homophily=target_homophily,
        text_signal=0.6, author_signal=0.9, tweets_per_user=2,
        tokens_per_tweet=6, class_vocab_size=8, background_vocab_size=40,
        intra_rate=0.04, inter_rate=0.008, seed=seed,
    )
    data = generate(spec)
    labels = TASK_LABELS[data.task]
    index = {n: i for i, n in enumerate(labels)}
    corpus = Corpus(task=data.task, label_names=labels)
    for r in data.corpus:
        corpus.examples.append(
            LabeledExample(r["id"], r["author"], index[r["label"]], r["text"],
                           preprocess(r["text"]), r["split"])
        )
    authors = {}
    for r in data.corpus:
        authors.setdefault(r["author"], []).append(r["label"])
    graph = build_social_graph(authors, [(e["retweeter"], e["retweeted"]) for e in data.events])
    return corpus, graph


def train_variant(corpus, graph, table, variant, seed):
    cfg = ModelConfig(
        variant=variant, task=corpus.task, word_dim=12, text_hidden=12,
        author_dim=table.dim if table else 200, gat_hidden=15, gat_heads=2,
        classifier_hidden=32,
    )
    kwargs = {}
    if variant != "LING":
        kwargs["author_table"] = table
    if variant == "LING_GAT":
        kwargs["graph"] = graph
    model = FusionModel.build(cfg, Vocab.from_corpus(corpus), Rng(seed).child("model"), **kwargs)
    tc = TrainConfig(batch_size=32, max_epochs=8, patience=3, seed=seed, lr=0.002)
    return train_model(model, corpus, tc).test_metric


for target in (0.9, 0.35):
    corpus, graph = build_dataset(target)
    print(f"--- homophily target {target}: measured {homophily(graph):.3f}, "
          f"{graph.n_edges} edges ---")
    table = node2vec(
        graph,
        WalkConfig(walk_length=20, walks_per_node=3),
        SkipgramConfig(window=5, negatives=5, epochs=2),
        Rng(99),
        dim=16,
    )
    runsets = {}
    for variant in ("LING", "LING_N2V", "LING_GAT"):
        vals = [train_variant(corpus, graph, table, variant, s) for s in SEEDS]
        runsets[variant] = vals
        print(f"  {variant:<9} mean recall {np.mean(vals):.3f}  (seeds: "
              + ", ".join(f"{v:.3f}" for v in vals) + ")")
    sig = significance_matrix(runsets)
    for name, beats in sig["improves_over"].items():
        if beats:
            print(f"  {name} significantly improves over: {', '.join(beats)}")
    print()
