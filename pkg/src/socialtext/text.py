"""Corpus ingestion, tweet preprocessing and the vocabulary.

Preprocessing lowercases, tokenizes on words / punctuation, and replaces
URLs, hashtags and mentions with the placeholder tokens <url>, <hashtag>
and <mention>.  The tokenizer is idempotent on its own output: the
placeholders are recognized as atomic tokens, so re-tokenizing the joined
token list reproduces it.

Corpus files are JSONL with fields id, author, label, text and an
optional split ("train" | "val" | "test").  When no record carries a
split, a seeded shuffle assigns 80/10/10.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

from .jsonl import JsonlError, read_jsonl
from .rng import Rng

__all__ = [
    "TASK_LABELS",
    "TASK_METRICS",
    "CorpusError",
    "preprocess",
    "LabeledExample",
    "Corpus",
    "load_corpus",
    "assign_splits",
    "Vocab",
    "oov_rate",
]

TASK_LABELS = {
    "sentiment": ("POSITIVE", "NEGATIVE", "NEUTRAL"),
    "stance": ("FAVOR", "AGAINST", "NEUTRAL"),
    "hate": ("NORMAL", "HATEFUL"),
}

TASK_METRICS = {
    "sentiment": "avg_rec",
    "stance": "f_avg",
    "hate": "f1_hateful",
}

SPLITS = ("train", "val", "test")


class CorpusError(ValueError):
    pass


_TOKEN_RE = re.compile(
    r"<url>|<hashtag>|<mention>"
    r"|(?:https?://|www\.)\S+"
    r"|#\w+"
    r"|@\w+"
    r"|[a-z0-9_']+"
    r"|[^\sa-z0-9_']"
)


def preprocess(raw: str) -> list[str]:
    """Lowercase, tokenize, and substitute the URL/hashtag/mention placeholders."""
    tokens = []
    for match in _TOKEN_RE.finditer(raw.lower()):
        tok = match.group()
        if tok in ("<url>", "<hashtag>", "<mention>"):
            tokens.append(tok)
        elif tok.startswith(("http://", "https://", "www.")):
            tokens.append("<url>")
        elif tok[0] == "#" and len(tok) > 1:
            tokens.append("<hashtag>")
        elif tok[0] == "@" and len(tok) > 1:
            tokens.append("<mention>")
        else:
            tokens.append(tok)
    return tokens


@dataclass
class LabeledExample:
    id: str
    author: str
    label: int
    raw_text: str
    tokens: list[str]
    split: str


@dataclass
class Corpus:
    task: str
    label_names: tuple[str, ...]
    examples: list[LabeledExample] = field(default_factory=list)

    @property
    def n_classes(self) -> int:
        return len(self.label_names)

    @property
    def metric_name(self) -> str:
        return TASK_METRICS[self.task]

    def split(self, name: str) -> list[LabeledExample]:
        if name not in SPLITS:
            raise ValueError(f"unknown split {name!r}")
        return [ex for ex in self.examples if ex.split == name]

    def authors(self) -> set[str]:
        return {ex.author for ex in self.examples}

    def author_labels(self) -> dict[str, list[str]]:
        """author -> multiset of her tweet labels (the graph metadata)."""
        out: dict[str, list[str]] = {}
        for ex in self.examples:
            out.setdefault(ex.author, []).append(self.label_names[ex.label])
        return out


def assign_splits(n: int, rng: Rng) -> list[str]:
    """Shuffled 80/10/10 assignment; exact 8:1:1 on multiples of ten."""
    n_val = n // 10
    n_test = n // 10
    n_train = n - n_val - n_test
    order = rng.permutation(n)
    out = [""] * n
    for rank, idx in enumerate(order):
        if rank < n_train:
            out[idx] = "train"
        elif rank < n_train + n_val:
            out[idx] = "val"
        else:
            out[idx] = "test"
    return out


def load_corpus(path, task: str, seed: int | None = None) -> Corpus:
    """Parse a JSONL corpus; honor split fields or shuffle 80/10/10 by seed."""
    if task not in TASK_LABELS:
        raise CorpusError(f"unknown task {task!r}; expected one of {sorted(TASK_LABELS)}")
    label_names = TASK_LABELS[task]
    label_index = {name: i for i, name in enumerate(label_names)}
    records = []
    seen_ids: set[str] = set()
    any_split = False
    for lineno, obj in read_jsonl(path):
        for fld in ("id", "author", "label", "text"):
            if not isinstance(obj.get(fld), str):
                raise JsonlError(path, lineno, f"missing or non-string field {fld!r}")
        label = obj["label"]
        if label not in label_index:
            raise JsonlError(
                path, lineno,
                f"unknown label {label!r} for task {task!r}; valid labels: {list(label_names)}",
            )
        if obj["id"] in seen_ids:
            raise JsonlError(path, lineno, f"duplicate id {obj['id']!r}")
        seen_ids.add(obj["id"])
        split = obj.get("split")
        if split is not None:
            if split not in SPLITS:
                raise JsonlError(path, lineno, f"unknown split {split!r}")
            any_split = True
        records.append((lineno, obj, split))

    if not records:
        raise CorpusError(f"{path}: empty corpus")

    if any_split:
        missing = [ln for ln, _, s in records if s is None]
        if missing:
            raise JsonlError(path, missing[0], "split given for some records but not this one")
        splits = [s for _, _, s in records]
    else:
        if seed is None:
            raise CorpusError(f"{path}: no split fields; a seed is required to assign 80/10/10")
        splits = assign_splits(len(records), Rng(seed).child("split"))

    corpus = Corpus(task=task, label_names=label_names)
    for (lineno, obj, _), split in zip(records, splits):
        corpus.examples.append(
            LabeledExample(
                id=obj["id"],
                author=obj["author"],
                label=label_index[obj["label"]],
                raw_text=obj["text"],
                tokens=preprocess(obj["text"]),
                split=split,
            )
        )
    return corpus


def load_timelines(path) -> dict[str, list[str]]:
    """JSONL of {author, text}: author -> concatenated preprocessed tokens."""
    docs: dict[str, list[str]] = {}
    for lineno, obj in read_jsonl(path):
        if not isinstance(obj.get("author"), str) or not isinstance(obj.get("text"), str):
            raise JsonlError(path, lineno, "expected string fields 'author' and 'text'")
        docs.setdefault(obj["author"], []).extend(preprocess(obj["text"]))
    if not docs:
        raise CorpusError(f"{path}: no timeline posts found")
    return docs


class Vocab:
    """Dense, stable token -> index map with the special tokens pinned first."""

    SPECIALS = ("<pad>", "<unk>", "<url>", "<hashtag>", "<mention>")
    PAD, UNK = 0, 1

    def __init__(self, tokens: Iterable[str] = ()):
        self._index: dict[str, int] = {}
        for tok in self.SPECIALS:
            self._index[tok] = len(self._index)
        for tok in tokens:
            if tok not in self._index:
                self._index[tok] = len(self._index)

    @classmethod
    def from_corpus(cls, corpus: Corpus, split: str = "train", min_count: int = 1) -> "Vocab":
        counts = Counter(tok for ex in corpus.split(split) for tok in ex.tokens)
        kept = sorted(
            (tok for tok, c in counts.items() if c >= min_count),
            key=lambda tok: (-counts[tok], tok),
        )
        return cls(kept)

    def __len__(self) -> int:
        return len(self._index)

    def __contains__(self, tok: str) -> bool:
        return tok in self._index

    def index(self, tok: str) -> int:
        return self._index.get(tok, self.UNK)

    def encode(self, tokens: Iterable[str]) -> list[int]:
        return [self.index(t) for t in tokens]

    def tokens(self) -> list[str]:
        """Tokens in index order."""
        return sorted(self._index, key=self._index.__getitem__)


def oov_rate(examples: Iterable[LabeledExample], vocab: Vocab) -> float:
    """Fraction of tokens mapping to <unk>; 0.0 on an empty token stream."""
    total = 0
    oov = 0
    for ex in examples:
        for tok in ex.tokens:
            total += 1
            if tok not in vocab:
                oov += 1
    return oov / total if total else 0.0
