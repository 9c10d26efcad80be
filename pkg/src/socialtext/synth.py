"""Synthetic dataset generators.

Real tweet corpora cannot be redistributed, so the engine's experiments
run on two generated fixtures:

``generate``: a planted-partition social graph.  Users belong to
communities, every community maps to a task class, and edges split into
intra-/inter-community pairs so that the measured label homophily lands
on the requested value.  Tweets carry class-vocabulary tokens with
probability ``text_signal`` per tweet; "muted" communities never receive
expressive text, which makes social information necessary for part of
the test set.  Texts use integer-token vocabularies; no natural language
is needed to exercise the architecture.

``generate_planted_signal``: an attention-recovery fixture.  Every target
user is connected to exactly one "signal" neighbor whose embedding
carries both a shared beacon direction and the target's class direction,
plus several distractors carrying random class directions.  A model must
attend to the signal neighbor to beat chance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np

from .rng import Rng
from .text import TASK_LABELS

__all__ = [
    "SynthSpec",
    "SynthSpecError",
    "SynthData",
    "generate",
    "PlantedSpec",
    "generate_planted_signal",
    "write_corpus_jsonl",
    "write_events_jsonl",
]


class SynthSpecError(ValueError):
    pass


def _task_for_classes(n_classes: int) -> str:
    for task, labels in TASK_LABELS.items():
        if len(labels) == n_classes:
            return task
    raise SynthSpecError(f"no task has {n_classes} classes; choose 2 or 3")


@dataclass
class SynthSpec:
    n_users: int = 2000
    n_classes: int = 3
    homophily: float = 0.9
    text_signal: float = 0.6
    author_signal: float = 0.9
    intra_rate: float = 0.02
    inter_rate: float = 0.004
    tweets_per_user: int = 2
    seed: int = 0
    communities_per_class: int = 2
    muted_communities: int = 1
    tokens_per_tweet: int = 8
    class_vocab_size: int = 50
    background_vocab_size: int = 200
    expressive_token_rate: float = 0.75
    timeline_posts_per_user: int = 2

    def __post_init__(self):
        for name in ("homophily", "text_signal", "author_signal", "expressive_token_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise SynthSpecError(f"{name} must lie in [0, 1], got {v}")
        if self.intra_rate <= 0 or self.inter_rate <= 0:
            raise SynthSpecError("edge rates must be positive")
        for name in ("n_users", "n_classes", "tweets_per_user", "communities_per_class",
                     "tokens_per_tweet", "class_vocab_size", "background_vocab_size"):
            if getattr(self, name) < 1:
                raise SynthSpecError(f"{name} must be positive")
        if self.muted_communities < 0:
            raise SynthSpecError("muted_communities must be nonnegative")
        if self.muted_communities >= self.n_communities:
            raise SynthSpecError(
                f"muted_communities must leave at least one expressive community "
                f"({self.muted_communities} of {self.n_communities})"
            )
        _task_for_classes(self.n_classes)

    @property
    def n_communities(self) -> int:
        return self.n_classes * self.communities_per_class

    @property
    def task(self) -> str:
        return _task_for_classes(self.n_classes)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SynthData:
    task: str
    corpus: list[dict]            # corpus JSONL records
    events: list[dict]            # retweet-event JSONL records
    timelines: list[dict]         # timeline JSONL records (for PV)
    truth: dict                   # communities, classes, muted set
    spec: dict = field(default_factory=dict)


def _sample_labels(spec: SynthSpec, community_class: int, count: int, rng: Rng) -> list[int]:
    """Tweet labels: the community class w.p. author_signal, else another class."""
    labels = []
    for _ in range(count):
        if rng.random() < spec.author_signal or spec.n_classes == 1:
            labels.append(community_class)
        else:
            shift = 1 + int(rng.random() * (spec.n_classes - 1))
            labels.append((community_class + shift) % spec.n_classes)
    return labels


def _pair_intersection_rates(spec: SynthSpec, rng: Rng, trials: int = 4000) -> tuple[float, float]:
    """Monte-Carlo P(label sets intersect) for same-class and cross-class pairs."""
    same = 0
    diff = 0
    for _ in range(trials):
        a = set(_sample_labels(spec, 0, spec.tweets_per_user, rng))
        b = set(_sample_labels(spec, 0, spec.tweets_per_user, rng))
        if a & b:
            same += 1
        c = set(_sample_labels(spec, 1 % spec.n_classes, spec.tweets_per_user, rng))
        if a & c:
            diff += 1
    return same / trials, diff / trials


def _solve_intra_fraction(spec: SynthSpec, rng: Rng) -> float:
    """Fraction of edges placed inside a community so measured homophily ~ target."""
    pi_same, pi_diff = _pair_intersection_rates(spec, rng)
    n_comms = spec.n_communities
    if n_comms > 1:
        p_same_class_inter = (spec.communities_per_class - 1) / (n_comms - 1)
    else:
        p_same_class_inter = 1.0
    pi_inter = p_same_class_inter * pi_same + (1.0 - p_same_class_inter) * pi_diff
    lo, hi = sorted((pi_inter, pi_same))
    slack = 0.02  # allow targets within MC noise of the boundary
    if not (lo - slack <= spec.homophily <= hi + slack):
        raise SynthSpecError(
            f"homophily {spec.homophily} infeasible for author_signal="
            f"{spec.author_signal}: feasible range is about [{lo:.3f}, {hi:.3f}]"
        )
    if pi_same == pi_inter:
        return 1.0
    rho = (spec.homophily - pi_inter) / (pi_same - pi_inter)
    return min(1.0, max(0.0, rho))


def _sample_distinct_pairs(members_a, members_b, count: int, rng: Rng, forbid: set) -> list:
    """``count`` distinct unordered pairs with endpoints from the two pools."""
    pairs = []
    attempts = 0
    limit = 200 * max(1, count)
    while len(pairs) < count and attempts < limit:
        attempts += 1
        u = members_a[int(rng.random() * len(members_a))]
        v = members_b[int(rng.random() * len(members_b))]
        if u == v:
            continue
        key = (u, v) if u < v else (v, u)
        if key in forbid:
            continue
        forbid.add(key)
        pairs.append(key)
    if len(pairs) < count:
        raise SynthSpecError("edge rate too high for the available distinct pairs")
    return pairs


def generate(spec: SynthSpec) -> SynthData:
    rng = Rng(spec.seed)
    task = spec.task
    label_names = TASK_LABELS[task]
    n_comms = spec.n_communities

    users = [f"u{i:05d}" for i in range(spec.n_users)]
    community = {u: i % n_comms for i, u in enumerate(users)}
    comm_class = {c: c % spec.n_classes for c in range(n_comms)}
    muted = set(range(spec.muted_communities))
    members: dict[int, list[str]] = {c: [] for c in range(n_comms)}
    for u in users:
        members[community[u]].append(u)

    # --- edges ---------------------------------------------------------
    intra_pairs = sum(len(m) * (len(m) - 1) // 2 for m in members.values())
    total_pairs = spec.n_users * (spec.n_users - 1) // 2
    inter_pairs = total_pairs - intra_pairs
    budget = spec.intra_rate * intra_pairs + spec.inter_rate * inter_pairs
    rho = _solve_intra_fraction(spec, rng.child("solve"))
    n_intra = int(round(budget * rho))
    n_inter = int(round(budget)) - n_intra

    edge_rng = rng.child("edges")
    forbid: set = set()
    edges: list[tuple[str, str]] = []
    # intra edges, allocated to communities by pair count
    weights = np.array([len(m) * (len(m) - 1) // 2 for m in members.values()], dtype=np.float64)
    alloc = np.floor(weights / weights.sum() * n_intra).astype(int)
    for c in np.argsort(-weights)[: n_intra - int(alloc.sum())]:
        alloc[c] += 1
    for c in range(n_comms):
        edges.extend(_sample_distinct_pairs(members[c], members[c], int(alloc[c]), edge_rng, forbid))
    # inter edges: rejection sample across different communities
    placed = 0
    attempts = 0
    limit = 200 * max(1, n_inter)
    while placed < n_inter and attempts < limit:
        attempts += 1
        u = users[int(edge_rng.random() * len(users))]
        v = users[int(edge_rng.random() * len(users))]
        if u == v or community[u] == community[v]:
            continue
        key = (u, v) if u < v else (v, u)
        if key in forbid:
            continue
        forbid.add(key)
        edges.append(key)
        placed += 1
    if placed < n_inter:
        raise SynthSpecError("inter-community edge budget could not be placed")

    event_rng = rng.child("events")
    events = []
    for u, v in sorted(edges):
        if event_rng.random() < 0.5:
            u, v = v, u
        events.append({"retweeter": u, "retweeted": v})

    # --- tweets ----------------------------------------------------------
    def make_text(label: int, expressive: bool, rng_: Rng) -> str:
        toks = []
        for _ in range(spec.tokens_per_tweet):
            if expressive and rng_.random() < spec.expressive_token_rate:
                base = 1000 * (label + 1)
                toks.append(str(base + int(rng_.random() * spec.class_vocab_size)))
            else:
                toks.append(str(int(rng_.random() * spec.background_vocab_size)))
        return " ".join(toks)

    text_rng = rng.child("text")
    label_rng = rng.child("labels")
    corpus: list[dict] = []
    tid = 0
    for u in users:
        c = community[u]
        is_muted = c in muted
        for lab in _sample_labels(spec, comm_class[c], spec.tweets_per_user, label_rng):
            expressive = (not is_muted) and (text_rng.random() < spec.text_signal)
            corpus.append(
                {
                    "id": f"t{tid:06d}",
                    "author": u,
                    "label": label_names[lab],
                    "text": make_text(lab, expressive, text_rng),
                }
            )
            tid += 1
    split_rng = rng.child("split")
    n = len(corpus)
    n_val = n // 10
    n_test = n // 10
    order = split_rng.permutation(n)
    for rank, idx in enumerate(order):
        if rank < n - n_val - n_test:
            corpus[idx]["split"] = "train"
        elif rank < n - n_test:
            corpus[idx]["split"] = "val"
        else:
            corpus[idx]["split"] = "test"

    # --- timelines (past posts, same text model) -------------------------
    tl_rng = rng.child("timeline")
    timelines: list[dict] = []
    for u in users:
        c = community[u]
        is_muted = c in muted
        for lab in _sample_labels(spec, comm_class[c], spec.timeline_posts_per_user, tl_rng):
            expressive = (not is_muted) and (tl_rng.random() < spec.text_signal)
            timelines.append({"author": u, "text": make_text(lab, expressive, tl_rng)})

    truth = {
        "communities": community,
        "community_class": {str(c): comm_class[c] for c in range(n_comms)},
        "muted_communities": sorted(muted),
    }
    return SynthData(task=task, corpus=corpus, events=events, timelines=timelines,
                     truth=truth, spec=spec.to_dict())


# ---------------------------------------------------------------------------
# the attention-recovery fixture


@dataclass
class PlantedSpec:
    n_targets: int = 300
    n_distractors: int = 6
    n_classes: int = 2
    dim: int = 16
    beacon_scale: float = 1.5
    class_scale: float = 1.0
    noise_scale: float = 0.15
    tokens_per_tweet: int = 3
    background_vocab_size: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.n_targets < 10:
            raise SynthSpecError("need at least 10 targets")
        if self.n_distractors < 1:
            raise SynthSpecError("need at least one distractor")
        if self.dim < self.n_classes + 2:
            raise SynthSpecError("dim must be at least n_classes + 2")
        _task_for_classes(self.n_classes)

    @property
    def task(self) -> str:
        return _task_for_classes(self.n_classes)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class PlantedData:
    task: str
    corpus: list[dict]
    events: list[dict]
    embeddings: dict            # user id -> vector (list of floats)
    truth: dict                 # target -> its signal neighbor
    spec: dict = field(default_factory=dict)


def generate_planted_signal(spec: PlantedSpec) -> PlantedData:
    rng = Rng(spec.seed)
    label_names = TASK_LABELS[spec.task]
    beacon_axis = spec.n_classes  # axes 0..C-1 carry class, axis C the beacon

    def noisy(base: np.ndarray, rng_: Rng) -> list[float]:
        return list(base + spec.noise_scale * rng_.normal(size=spec.dim))

    vec_rng = rng.child("vectors")
    cls_rng = rng.child("classes")
    corpus: list[dict] = []
    events: list[dict] = []
    embeddings: dict = {}
    signal_of: dict = {}
    for t in range(spec.n_targets):
        target = f"t{t:04d}"
        y = int(cls_rng.random() * spec.n_classes)
        embeddings[target] = noisy(np.zeros(spec.dim), vec_rng)
        signal = f"s{t:04d}"
        base = np.zeros(spec.dim)
        base[beacon_axis] = spec.beacon_scale
        base[y] = spec.class_scale
        embeddings[signal] = noisy(base, vec_rng)
        events.append({"retweeter": target, "retweeted": signal})
        signal_of[target] = signal
        for d in range(spec.n_distractors):
            distractor = f"d{t:04d}x{d}"
            base = np.zeros(spec.dim)
            base[int(vec_rng.random() * spec.n_classes)] = spec.class_scale
            embeddings[distractor] = noisy(base, vec_rng)
            events.append({"retweeter": target, "retweeted": distractor})
        text = " ".join(
            str(int(vec_rng.random() * spec.background_vocab_size))
            for _ in range(spec.tokens_per_tweet)
        )
        corpus.append({"id": f"p{t:05d}", "author": target, "label": label_names[y], "text": text})

    split_rng = rng.child("split")
    n = len(corpus)
    n_val = n // 10
    n_test = n // 10
    order = split_rng.permutation(n)
    for rank, idx in enumerate(order):
        if rank < n - n_val - n_test:
            corpus[idx]["split"] = "train"
        elif rank < n - n_test:
            corpus[idx]["split"] = "val"
        else:
            corpus[idx]["split"] = "test"
    return PlantedData(
        task=spec.task,
        corpus=corpus,
        events=events,
        embeddings=embeddings,
        truth={"signal_neighbor": signal_of},
        spec=spec.to_dict(),
    )


# ---------------------------------------------------------------------------
# writers (formats shared with the rest of the pipeline)


def write_corpus_jsonl(records: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def write_events_jsonl(records: list[dict], path) -> None:
    write_corpus_jsonl(records, path)
