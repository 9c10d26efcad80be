"""The undirected retweet graph and its summary statistics.

Nodes are dataset authors plus "external" users retweeted by authors at
least ``external_threshold`` times (default 100).  An undirected,
unweighted edge joins two retained users whenever at least one retweet
event links them in either direction; repeated events collapse into one
edge.  Self-loops are never stored: the graph-attention adapter injects
the (v, v) loop at forward time, so statistics stay loop-free.

Homophily is the fraction of edges, among edges whose endpoints both have
at least one tweet label, whose label sets intersect.  Authors with
several differently-labeled tweets are rare; set intersection is the
conservative reading of "same label" for them.
"""

from __future__ import annotations

import json
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .jsonl import JsonlError, read_jsonl

__all__ = [
    "NodeMeta",
    "SocialGraph",
    "GraphStats",
    "GraphError",
    "UndefinedStatisticError",
    "build_social_graph",
    "density",
    "density_from_counts",
    "connected_components",
    "homophily",
    "stats",
    "load_retweet_events",
    "save_graph",
    "load_graph",
]


class GraphError(ValueError):
    pass


class UndefinedStatisticError(GraphError):
    """A statistic has no value for this graph (for example density on < 2 nodes)."""


@dataclass
class NodeMeta:
    """Per-node metadata: external flag and the multiset of tweet labels."""

    is_external: bool = False
    tweet_labels: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        self.tweet_labels = tuple(sorted(self.tweet_labels))
        if self.is_external and self.tweet_labels:
            raise GraphError("external users cannot carry tweet labels")


class SocialGraph:
    """Immutable simple undirected graph with per-node metadata."""

    def __init__(self, nodes: Mapping[str, NodeMeta], edges: Iterable[tuple[str, str]]):
        self._meta = dict(nodes)
        adj: dict[str, set[str]] = {u: set() for u in self._meta}
        edge_set: set[tuple[str, str]] = set()
        for u, v in edges:
            if u not in self._meta or v not in self._meta:
                raise GraphError(f"edge ({u!r}, {v!r}) references an unknown node")
            if u == v:
                raise GraphError(f"self-loop on {u!r}: self-loops are not stored")
            adj[u].add(v)
            adj[v].add(u)
            edge_set.add((u, v) if u < v else (v, u))
        self._adj = {u: tuple(sorted(nbrs)) for u, nbrs in adj.items()}
        self._adj_set = {u: frozenset(nbrs) for u, nbrs in adj.items()}
        self._edges = tuple(sorted(edge_set))
        self._node_ids = tuple(sorted(self._meta))
        self._index = {u: i for i, u in enumerate(self._node_ids)}

    @property
    def node_ids(self) -> tuple[str, ...]:
        return self._node_ids

    @property
    def n_nodes(self) -> int:
        return len(self._node_ids)

    @property
    def n_edges(self) -> int:
        return len(self._edges)

    def edges(self) -> tuple[tuple[str, str], ...]:
        return self._edges

    def meta(self, u: str) -> NodeMeta:
        return self._meta[u]

    def __contains__(self, u: str) -> bool:
        return u in self._meta

    def neighbors(self, u: str) -> tuple[str, ...]:
        return self._adj[u]

    def degree(self, u: str) -> int:
        return len(self._adj[u])

    def has_edge(self, u: str, v: str) -> bool:
        return v in self._adj_set[u]

    def index_of(self, u: str) -> int:
        """Dense integer index assigned by sorted node order."""
        return self._index[u]

    def validate_symmetry(self) -> None:
        """Full-scan check of adjacency symmetry (used by the test suite)."""
        for u, nbrs in self._adj.items():
            for v in nbrs:
                if u not in self._adj_set[v]:
                    raise GraphError(f"asymmetric adjacency: {u!r} -> {v!r}")


def build_social_graph(
    authors,
    retweet_events: Iterable[tuple[str, str]],
    external_threshold: int = 100,
) -> SocialGraph:
    """Assemble the retweet graph from author ids and (retweeter, retweeted) events.

    ``authors`` may be a set of user ids or a mapping id -> iterable of
    tweet labels.  Events whose retweeter is not a dataset author are
    ignored (events come from authors' timelines, so each has an author on
    one side); external users enter the node set only after being
    retweeted ``external_threshold`` times by authors.
    """
    if isinstance(authors, Mapping):
        labels = {str(a): tuple(ls) for a, ls in authors.items()}
    else:
        labels = {str(a): () for a in authors}
    if not labels:
        raise GraphError("empty author set")
    if external_threshold < 1:
        raise GraphError(f"external_threshold must be >= 1, got {external_threshold}")

    events = [(str(r), str(rd)) for r, rd in retweet_events]
    external_counts: Counter = Counter()
    for retweeter, retweeted in events:
        if retweeter not in labels or retweeted == retweeter:
            continue
        if retweeted not in labels:
            external_counts[retweeted] += 1

    nodes: dict[str, NodeMeta] = {
        a: NodeMeta(is_external=False, tweet_labels=ls) for a, ls in labels.items()
    }
    for ext, count in external_counts.items():
        if count >= external_threshold:
            nodes[ext] = NodeMeta(is_external=True)

    edges = set()
    for retweeter, retweeted in events:
        if retweeter not in labels or retweeted == retweeter:
            continue
        if retweeted in nodes:
            edges.add((retweeter, retweeted) if retweeter < retweeted else (retweeted, retweeter))
    return SocialGraph(nodes, edges)


def load_retweet_events(path) -> tuple[list[tuple[str, str]], list[str]]:
    """Parse a JSONL retweet-event file.

    Malformed records are reported (with line numbers) but do not abort
    the load; the second return value lists the per-record errors.
    """
    events: list[tuple[str, str]] = []
    errors: list[str] = []
    for lineno, obj in read_jsonl(path):
        retweeter = obj.get("retweeter")
        retweeted = obj.get("retweeted")
        if not isinstance(retweeter, str) or not isinstance(retweeted, str):
            errors.append(f"{path}:{lineno}: expected string fields 'retweeter' and 'retweeted'")
            continue
        events.append((retweeter, retweeted))
    return events, errors


def density_from_counts(node_count: int, edge_count: int) -> float:
    """2|E| / (|V| (|V|-1)); the fraction of possible edges present."""
    if node_count < 2:
        raise UndefinedStatisticError(f"density undefined for {node_count} node(s)")
    return 2.0 * edge_count / (node_count * (node_count - 1))


def density(g: SocialGraph) -> float:
    return density_from_counts(g.n_nodes, g.n_edges)


def connected_components(g: SocialGraph) -> int:
    """Number of maximal connected subgraphs (iterative BFS)."""
    seen: set[str] = set()
    count = 0
    for start in g.node_ids:
        if start in seen:
            continue
        count += 1
        queue = deque((start,))
        seen.add(start)
        while queue:
            u = queue.popleft()
            for v in g.neighbors(u):
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
    return count


def homophily(g: SocialGraph):
    """Fraction of label-carrying edges whose endpoint label sets intersect.

    Edges with an unlabeled endpoint (external users, authors without
    labels) are excluded.  Returns None when no edge is eligible.
    """
    eligible = 0
    matching = 0
    for u, v in g.edges():
        lu = g.meta(u).tweet_labels
        lv = g.meta(v).tweet_labels
        if not lu or not lv:
            continue
        eligible += 1
        if set(lu) & set(lv):
            matching += 1
    if eligible == 0:
        return None
    return matching / eligible


@dataclass
class GraphStats:
    node_count: int
    edge_count: int
    density: float | None
    component_count: int
    homophily: float | None

    def to_dict(self) -> dict:
        return {
            "node_count": self.node_count,
            "edge_count": self.edge_count,
            "density": self.density,
            "component_count": self.component_count,
            "homophily": self.homophily,
        }


def stats(g: SocialGraph) -> GraphStats:
    """All summary statistics; density/homophily are None when undefined."""
    try:
        dens = density(g)
    except UndefinedStatisticError:
        dens = None
    return GraphStats(
        node_count=g.n_nodes,
        edge_count=g.n_edges,
        density=dens,
        component_count=connected_components(g),
        homophily=homophily(g),
    )


def save_graph(g: SocialGraph, edges_path, meta_path) -> None:
    """Write the sorted "u v" edge list and the node-metadata sidecar."""
    with open(edges_path, "w", encoding="utf-8") as fh:
        for u, v in g.edges():
            fh.write(f"{u} {v}\n")
    meta = {
        u: {
            "is_external": g.meta(u).is_external,
            "tweet_labels": list(g.meta(u).tweet_labels),
        }
        for u in g.node_ids
    }
    with open(meta_path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, sort_keys=True, indent=0, separators=(",", ":"))
        fh.write("\n")


def load_graph(edges_path, meta_path) -> SocialGraph:
    with open(meta_path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    nodes = {
        u: NodeMeta(is_external=m["is_external"], tweet_labels=tuple(m["tweet_labels"]))
        for u, m in raw.items()
    }
    edges = []
    with open(edges_path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise JsonlError(edges_path, lineno, "expected 'u v'")
            edges.append((parts[0], parts[1]))
    return SocialGraph(nodes, edges)
