"""The six model variants and the late-fusion classifier.

Every variant except FREQUENCY encodes the tweet with the BiLSTM into a
text vector l; the author vector s depends on the variant:

* LING          no author information (classifier input is l alone)
* LING_RANDOM   trainable per-author embedding, updated during training
* LING_PV       frozen paragraph-vector table from past posts
* LING_N2V      frozen node2vec table over the social graph
* LING_GAT      graph-attention update of the node2vec vector

Prediction is softmax(W2 relu(W1 (l || s))) with dropout on the fused
input and on the hidden activation at train time.  Unknown authors fall
back to the table centroid; for the GAT that centroid seeds a virtual
node whose only connection is its self-loop.
"""

from __future__ import annotations

import hashlib
import json
import zipfile
from dataclasses import dataclass, asdict

import numpy as np

from .autodiff import Tensor, concat, cross_entropy, dropout, matmul, relu, softmax
from .bilstm import BiLstm, LstmParams, bilstm_encode, MAX_TOKENS
from .embeddings import EmbeddingTable, centroid_fallback
from .gat import GatLayer, AttentionRecord
from .graph import SocialGraph
from .metrics import ConfusionMatrix
from .rng import Rng
from .text import LabeledExample, Vocab, TASK_LABELS

__all__ = [
    "VARIANTS",
    "ModelConfig",
    "Prediction",
    "fuse_and_classify",
    "FusionModel",
    "FrequencySampler",
    "frequency_baseline",
    "build_word_table",
    "save_checkpoint",
    "load_checkpoint",
]

VARIANTS = ("FREQUENCY", "LING", "LING_RANDOM", "LING_PV", "LING_N2V", "LING_GAT")

CHECKPOINT_SCHEMA = 1

# vocabulary entries that receive trainable vectors; <pad> stays frozen zero
TRAINABLE_SPECIALS = ("<unk>", "<url>", "<hashtag>", "<mention>")


@dataclass
class ModelConfig:
    variant: str
    task: str
    word_dim: int = 200
    text_hidden: int = 50
    author_dim: int = 200
    gat_hidden: int = 50
    gat_heads: int = 2
    classifier_hidden: int = 50
    max_tokens: int = MAX_TOKENS

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.task not in TASK_LABELS:
            raise ValueError(f"unknown task {self.task!r}")
        for name in ("word_dim", "text_hidden", "author_dim", "gat_hidden",
                     "gat_heads", "classifier_hidden", "max_tokens"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")

    @property
    def n_classes(self) -> int:
        return len(TASK_LABELS[self.task])

    @property
    def text_dim(self) -> int:
        return 2 * self.text_hidden

    @property
    def author_vec_dim(self) -> int:
        if self.variant in ("FREQUENCY", "LING"):
            return 0
        if self.variant == "LING_GAT":
            return self.gat_heads * self.gat_hidden
        return self.author_dim

    @property
    def classifier_in_dim(self) -> int:
        return self.text_dim + self.author_vec_dim

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Prediction:
    class_index: int
    probabilities: list[float]


def _prediction_from_probs(probs: np.ndarray) -> Prediction:
    # np.argmax breaks ties toward the lowest class index
    return Prediction(class_index=int(np.argmax(probs)), probabilities=[float(p) for p in probs])


def classifier_logits(
    l: Tensor,
    s: Tensor | None,
    w1: Tensor,
    w2: Tensor,
    dropout_rate: float = 0.0,
    training: bool = False,
    rng: Rng | None = None,
) -> Tensor:
    """W2 relu(W1 (l || s)) with dropout on the fused input and the hidden layer."""
    x = concat(l, s) if s is not None else l
    if x.data.shape[0] != w1.data.shape[0]:
        raise ValueError(
            f"classifier input has dim {x.data.shape[0]}, W1 expects {w1.data.shape[0]}"
        )
    x = dropout(x, dropout_rate, training, rng)
    h = relu(matmul(x, w1))
    h = dropout(h, dropout_rate, training, rng)
    return matmul(h, w2)


def fuse_and_classify(
    l: Tensor,
    s: Tensor | None,
    w1: Tensor,
    w2: Tensor,
    dropout_rate: float = 0.0,
    training: bool = False,
    rng: Rng | None = None,
) -> Prediction:
    logits = classifier_logits(l, s, w1, w2, dropout_rate, training, rng)
    return _prediction_from_probs(softmax(logits).data)


def build_word_table(
    vocab: Vocab,
    pretrained: EmbeddingTable | None,
    dim: int,
    rng: Rng,
) -> EmbeddingTable:
    """One vector per vocabulary token.

    Tokens found in ``pretrained`` keep their (frozen) vectors; missing
    tokens get seeded random frozen vectors.  The placeholder specials and
    <unk> are trainable and start at the mean of the available vectors;
    <pad> is a frozen zero (it is never consumed).
    """
    if pretrained is not None and pretrained.dim != dim:
        raise ValueError(f"word vectors have dim {pretrained.dim}, model expects {dim}")
    table = EmbeddingTable(dim, trainable=False)
    bound = 0.5 / dim
    acc = np.zeros(dim)
    count = 0
    for tok in vocab.tokens():
        if tok in Vocab.SPECIALS:
            continue
        src = pretrained.get(tok) if pretrained is not None else None
        vec = src.data.copy() if src is not None else rng.uniform(-bound, bound, dim)
        table.add(tok, vec, trainable=False)
        acc += vec
        count += 1
    mean = acc / count if count else np.zeros(dim)
    table.add("<pad>", np.zeros(dim), trainable=False)
    for tok in TRAINABLE_SPECIALS:
        table.add(tok, mean.copy(), trainable=True)
    return table


class FusionModel:
    """A variant's components plus the shared prediction path."""

    def __init__(
        self,
        cfg: ModelConfig,
        vocab: Vocab,
        word_table: EmbeddingTable,
        bilstm: BiLstm,
        w1: Tensor,
        w2: Tensor,
        author_table: EmbeddingTable | None = None,
        gat: GatLayer | None = None,
        graph: SocialGraph | None = None,
    ):
        cfg_in = cfg.classifier_in_dim
        if w1.data.shape != (cfg_in, cfg.classifier_hidden):
            raise ValueError(f"W1 has shape {w1.data.shape}, expected {(cfg_in, cfg.classifier_hidden)}")
        if w2.data.shape != (cfg.classifier_hidden, cfg.n_classes):
            raise ValueError(
                f"W2 has shape {w2.data.shape}, expected {(cfg.classifier_hidden, cfg.n_classes)}"
            )
        if cfg.variant in ("LING_RANDOM", "LING_PV", "LING_N2V", "LING_GAT") and author_table is None:
            raise ValueError(f"variant {cfg.variant} needs an author table")
        if cfg.variant == "LING_GAT" and (gat is None or graph is None):
            raise ValueError("variant LING_GAT needs a graph and a GAT layer")
        self.cfg = cfg
        self.vocab = vocab
        self.word_table = word_table
        self.bilstm = bilstm
        self.w1 = w1
        self.w2 = w2
        self.author_table = author_table
        self.gat = gat
        self.graph = graph

    @classmethod
    def build(
        cls,
        cfg: ModelConfig,
        vocab: Vocab,
        rng: Rng,
        word_vectors: EmbeddingTable | None = None,
        author_table: EmbeddingTable | None = None,
        graph: SocialGraph | None = None,
    ) -> "FusionModel":
        """Fresh parameters; pretrained tables pass through unchanged."""
        word_table = build_word_table(vocab, word_vectors, cfg.word_dim, rng.child("words"))
        bilstm = BiLstm.init(cfg.word_dim, cfg.text_hidden, rng.child("lstm"))
        cin, ch, co = cfg.classifier_in_dim, cfg.classifier_hidden, cfg.n_classes
        b1 = 1.0 / np.sqrt(cin)
        b2 = 1.0 / np.sqrt(ch)
        clf_rng = rng.child("clf")
        w1 = Tensor(clf_rng.uniform(-b1, b1, (cin, ch)), requires_grad=True)
        w2 = Tensor(clf_rng.uniform(-b2, b2, (ch, co)), requires_grad=True)
        gat = None
        if cfg.variant == "LING_GAT":
            if author_table is None:
                raise ValueError("LING_GAT needs pretrained node embeddings")
            gat = GatLayer(author_table.dim, cfg.gat_hidden, cfg.gat_heads, rng.child("gat"))
        if author_table is not None and cfg.variant in ("LING_RANDOM", "LING_PV", "LING_N2V"):
            if author_table.dim != cfg.author_dim:
                raise ValueError(
                    f"author table has dim {author_table.dim}, config expects {cfg.author_dim}"
                )
        return cls(cfg, vocab, word_table, bilstm, w1, w2, author_table, gat, graph)

    # ----------------------------------------------------------------- forward

    def text_vector(self, ex: LabeledExample) -> Tensor:
        return bilstm_encode(ex.tokens, self.bilstm, self.vocab, self.word_table,
                             max_tokens=self.cfg.max_tokens)

    def _fallback_vector(self) -> Tensor:
        return Tensor(centroid_fallback(self.author_table))

    def author_vector(self, author: str) -> Tensor | None:
        """The variant's author representation; None for LING/FREQUENCY."""
        variant = self.cfg.variant
        if variant in ("FREQUENCY", "LING"):
            return None
        if variant == "LING_GAT":
            if author in self.graph:
                return self.gat.forward(author, self.author_table, self.graph)[0]
            seed = self.author_table.get(author)
            if seed is None:
                seed = self._fallback_vector()
            return self.gat.forward_virtual(author, seed)[0]
        vec = self.author_table.get(author)
        return vec if vec is not None else self._fallback_vector()

    def author_attention(self, author: str) -> AttentionRecord:
        if self.cfg.variant != "LING_GAT":
            raise ValueError(f"attention records exist only for LING_GAT, not {self.cfg.variant}")
        if author in self.graph:
            return self.gat.forward(author, self.author_table, self.graph)[1]
        seed = self.author_table.get(author)
        if seed is None:
            seed = self._fallback_vector()
        return self.gat.forward_virtual(author, seed)[1]

    def logits(
        self,
        ex: LabeledExample,
        training: bool = False,
        rng: Rng | None = None,
        dropout_rate: float = 0.0,
    ) -> Tensor:
        if self.cfg.variant == "FREQUENCY":
            raise ValueError("the frequency baseline has no classifier; use FrequencySampler")
        l = self.text_vector(ex)
        s = self.author_vector(ex.author)
        return classifier_logits(l, s, self.w1, self.w2, dropout_rate, training, rng)

    def loss(self, ex, training=False, rng=None, dropout_rate=0.0) -> Tensor:
        return cross_entropy(self.logits(ex, training, rng, dropout_rate), ex.label)

    def predict(self, ex: LabeledExample) -> Prediction:
        return _prediction_from_probs(softmax(self.logits(ex)).data)

    def evaluate(self, examples) -> ConfusionMatrix:
        cm = ConfusionMatrix(self.cfg.n_classes)
        for ex in examples:
            cm.add(ex.label, self.predict(ex).class_index)
        return cm

    # -------------------------------------------------------------- parameters

    def parameters(self) -> dict[str, Tensor]:
        """All trainable tensors by stable name."""
        params: dict[str, Tensor] = {
            "lstm_fw.w": self.bilstm.forward.w,
            "lstm_fw.b": self.bilstm.forward.b,
            "lstm_bw.w": self.bilstm.backward.w,
            "lstm_bw.b": self.bilstm.backward.b,
            "clf.w1": self.w1,
            "clf.w2": self.w2,
        }
        for tok in TRAINABLE_SPECIALS:
            vec = self.word_table.get(tok)
            if vec is not None and vec.requires_grad:
                params[f"word.{tok}"] = vec
        if self.author_table is not None and self.author_table.trainable:
            for key in self.author_table.ids():
                params[f"author.{key}"] = self.author_table.vectors[key]
        if self.gat is not None:
            params.update(self.gat.parameters())
        return params

    def no_decay(self) -> frozenset[str]:
        """Bias vectors are exempt from L2."""
        names = {"lstm_fw.b", "lstm_bw.b"}
        if self.gat is not None:
            names.update(n for n in self.gat.parameters() if n.endswith(".bk"))
        return frozenset(names)


class FrequencySampler:
    """Draws class indices i.i.d. with the training label frequencies."""

    def __init__(self, probabilities: np.ndarray, rng: Rng):
        self.probabilities = probabilities
        self._cum = np.cumsum(probabilities)
        self._rng = rng

    def sample(self) -> int:
        j = int(np.searchsorted(self._cum, self._rng.random(), side="right"))
        return min(j, len(self.probabilities) - 1)

    def sample_many(self, n: int) -> list[int]:
        return [self.sample() for _ in range(n)]


def frequency_baseline(train_labels, rng: Rng, n_classes: int | None = None) -> FrequencySampler:
    """Label sampler with empirical training frequencies."""
    labels = list(train_labels)
    if not labels:
        raise ValueError("cannot fit the frequency baseline on an empty label multiset")
    k = n_classes if n_classes is not None else max(labels) + 1
    counts = np.bincount(np.asarray(labels, dtype=np.intp), minlength=k).astype(np.float64)
    return FrequencySampler(counts / counts.sum(), rng)


# ---------------------------------------------------------------------------
# checkpoints: a single zip with the config echo, every tensor in the
# embedding text format, and a manifest carrying shapes plus a content hash.


def _format_vector(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def _params_payload(model: FusionModel) -> tuple[str, dict]:
    lines = []
    shapes = {}
    for name, t in sorted(model.parameters().items()):
        shapes[name] = list(t.data.shape)
        lines.append(f"{name} {_format_vector(t.data.reshape(-1))}")
    return "\n".join(lines) + "\n", shapes


def _table_payload(table: EmbeddingTable) -> str:
    lines = []
    for key in table.ids():
        lines.append(f"{key} {_format_vector(table.vectors[key].data)}")
    return "\n".join(lines) + "\n"


def save_checkpoint(model: FusionModel, path, extra: dict | None = None) -> str:
    """Write the checkpoint archive; returns its content hash."""
    params_text, shapes = _params_payload(model)
    word_text = _table_payload(model.word_table)
    author_text = _table_payload(model.author_table) if model.author_table is not None else ""
    hasher = hashlib.sha256()
    for chunk in (params_text, word_text, author_text):
        hasher.update(chunk.encode("utf-8"))
    content_hash = hasher.hexdigest()
    manifest = {
        "schema_version": CHECKPOINT_SCHEMA,
        "variant": model.cfg.variant,
        "task": model.cfg.task,
        "config": model.cfg.to_dict(),
        "shapes": shapes,
        "author_table_dim": model.author_table.dim if model.author_table else None,
        "author_table_trainable": bool(model.author_table.trainable) if model.author_table else None,
        "content_hash": content_hash,
        "extra": extra or {},
    }
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        zf.writestr("manifest.json", json.dumps(manifest, sort_keys=True, indent=1))
        zf.writestr("vocab.txt", "\n".join(model.vocab.tokens()) + "\n")
        zf.writestr("params.txt", params_text)
        zf.writestr("word_table.txt", word_text)
        if author_text:
            zf.writestr("author_table.txt", author_text)
    return content_hash


def _parse_table_text(text: str, trainable: bool) -> EmbeddingTable:
    table = None
    for line in text.splitlines():
        if not line.strip():
            continue
        parts = line.split()
        key, values = parts[0], np.array([float(v) for v in parts[1:]])
        if table is None:
            table = EmbeddingTable(len(values), trainable=trainable)
        table.add(key, values)
    if table is None:
        raise ValueError("checkpoint table payload is empty")
    return table


def load_checkpoint(path, graph: SocialGraph | None = None) -> FusionModel:
    """Rebuild a model from its archive; LING_GAT additionally needs the graph."""
    with zipfile.ZipFile(path, "r") as zf:
        manifest = json.loads(zf.read("manifest.json"))
        vocab_tokens = zf.read("vocab.txt").decode("utf-8").splitlines()
        params_text = zf.read("params.txt").decode("utf-8")
        word_text = zf.read("word_table.txt").decode("utf-8")
        author_text = (
            zf.read("author_table.txt").decode("utf-8")
            if "author_table.txt" in zf.namelist()
            else ""
        )
    hasher = hashlib.sha256()
    for chunk in (params_text, word_text, author_text):
        hasher.update(chunk.encode("utf-8"))
    if hasher.hexdigest() != manifest["content_hash"]:
        raise ValueError(f"checkpoint {path}: content hash mismatch")

    cfg = ModelConfig(**manifest["config"])
    if cfg.variant == "LING_GAT" and graph is None:
        raise ValueError("a LING_GAT checkpoint needs the social graph to load")

    vocab = Vocab(t for t in vocab_tokens if t not in Vocab.SPECIALS)
    word_table = _parse_table_text(word_text, trainable=False)
    for tok in TRAINABLE_SPECIALS:
        vec = word_table.get(tok)
        if vec is not None:
            vec.requires_grad = True
    author_table = None
    if author_text:
        author_table = _parse_table_text(
            author_text, trainable=bool(manifest.get("author_table_trainable"))
        )

    values: dict[str, np.ndarray] = {}
    for line in params_text.splitlines():
        if not line.strip():
            continue
        parts = line.split()
        values[parts[0]] = np.array([float(v) for v in parts[1:]])
    shapes = manifest["shapes"]

    def tensor_of(name) -> Tensor:
        return Tensor(values[name].reshape(shapes[name]), requires_grad=True)

    bilstm = BiLstm(
        forward=LstmParams(tensor_of("lstm_fw.w"), tensor_of("lstm_fw.b"), cfg.text_hidden),
        backward=LstmParams(tensor_of("lstm_bw.w"), tensor_of("lstm_bw.b"), cfg.text_hidden),
    )
    w1 = tensor_of("clf.w1")
    w2 = tensor_of("clf.w2")
    gat = None
    if cfg.variant == "LING_GAT":
        gat = GatLayer(author_table.dim, cfg.gat_hidden, cfg.gat_heads, Rng(0))
        for k, head in enumerate(gat.heads):
            head.wa = tensor_of(f"gat.h{k}.wa")
            head.wk = tensor_of(f"gat.h{k}.wk")
            head.bk = tensor_of(f"gat.h{k}.bk")
    model = FusionModel(cfg, vocab, word_table, bilstm, w1, w2, author_table, gat, graph)
    # restore the trained special vectors on top of the table payload
    for name, arr in values.items():
        if name.startswith("word."):
            model.word_table.vectors[name[5:]].data = arr.reshape(shapes[name])
        elif name.startswith("author.") and author_table is not None:
            author_table.vectors[name[7:]].data = arr.reshape(shapes[name])
    return model
