"""socialtext: socially-aware text classification on a desk-scale engine.

A BiLSTM text encoder is fused with author representations derived from a
retweet graph (node2vec, paragraph vectors, trainable lookups, or a
single-hop graph-attention update) and trained end to end on sentiment,
stance and hate-speech tasks, with the full evaluation protocol: task
metrics, ten-seed runs, and Welch significance tests.
"""

__version__ = "0.1.0"

from .autodiff import Tensor, Tape, backward, check_gradients
from .rng import Rng
from .graph import SocialGraph, NodeMeta, build_social_graph, stats
from .embeddings import EmbeddingTable, load_word_vectors, save_embeddings, load_embeddings
from .walks import WalkConfig, generate_walks, next_step_distribution
from .sgns import SkipgramConfig, train_skipgram, train_pv_dbow, node2vec
from .text import Corpus, Vocab, load_corpus, preprocess
from .bilstm import BiLstm, bilstm_encode
from .gat import GatLayer, attention_weights, node_update, extract_attention
from .model import FusionModel, ModelConfig, Prediction, fuse_and_classify, frequency_baseline
from .train import TrainConfig, train_model, grid_search, multi_run, adam_step
from .metrics import ConfusionMatrix, avg_rec, f_avg, f1_hateful, welch_t_test

__all__ = [
    "__version__",
    "Tensor", "Tape", "backward", "check_gradients", "Rng",
    "SocialGraph", "NodeMeta", "build_social_graph", "stats",
    "EmbeddingTable", "load_word_vectors", "save_embeddings", "load_embeddings",
    "WalkConfig", "generate_walks", "next_step_distribution",
    "SkipgramConfig", "train_skipgram", "train_pv_dbow", "node2vec",
    "Corpus", "Vocab", "load_corpus", "preprocess",
    "BiLstm", "bilstm_encode",
    "GatLayer", "attention_weights", "node_update", "extract_attention",
    "FusionModel", "ModelConfig", "Prediction", "fuse_and_classify", "frequency_baseline",
    "TrainConfig", "train_model", "grid_search", "multi_run", "adam_step",
    "ConfusionMatrix", "avg_rec", "f_avg", "f1_hateful", "welch_t_test",
]
