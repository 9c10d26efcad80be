"""Graph attention: hand values, invariants, and gradient checks."""

import numpy as np
import pytest

from socialtext.autodiff import Tensor, check_gradients, mul, tsum
from socialtext.embeddings import EmbeddingTable
from socialtext.gat import (
    GAT_HEAD_GRID,
    GAT_HIDDEN_GRID,
    GatLayer,
    attention_weights,
    extract_attention,
    node_update,
)
from socialtext.graph import NodeMeta, SocialGraph
from socialtext.rng import Rng


def star_graph(center, leaves):
    nodes = {center: NodeMeta()}
    nodes.update({l: NodeMeta() for l in leaves})
    return SocialGraph(nodes, [(center, l) for l in leaves])


def table_for(graph_nodes, dim, rng, trainable=False):
    table = EmbeddingTable(dim, trainable=trainable)
    for u in graph_nodes:
        table.add(u, rng.normal(size=dim))
    return table


class TestAttentionWeights:
    def test_isolated_node_self_loop_only(self):
        g = SocialGraph({"v": NodeMeta()}, [])
        table = table_for(["v"], 4, Rng(0))
        layer = GatLayer(4, 3, 1, Rng(1))
        w = attention_weights(layer, 0, "v", table, g)
        assert w == {"v": 1.0}

    def test_zero_attention_vector_uniform(self):
        g = star_graph("v", ["a", "b", "c"])
        table = table_for(g.node_ids, 4, Rng(2))
        layer = GatLayer(4, 3, 1, Rng(3))
        layer.heads[0].wa.data[:] = 0.0
        w = attention_weights(layer, 0, "v", table, g)
        assert len(w) == 4
        for val in w.values():
            assert abs(val - 0.25) < 1e-12

    def test_hand_computed_two_neighbor_example(self):
        # d'=1 projection picks coordinate 0; attention scores become
        # leaky(w1*hv0 + w2*hu0) and the softmax is computed by hand
        g = star_graph("v", ["a", "b"])
        table = EmbeddingTable(2)
        table.add("v", [0.5, 9.0])
        table.add("a", [1.0, -3.0])
        table.add("b", [-2.0, 7.0])
        layer = GatLayer(2, 1, 1, Rng(4))
        head = layer.heads[0]
        head.wk.data[:] = np.array([[1.0], [0.0]])
        head.bk.data[:] = 0.0
        head.wa.data[:] = np.array([0.3, 1.1])

        def score(hu0):
            raw = 0.3 * 0.5 + 1.1 * hu0
            return raw if raw > 0 else 0.2 * raw

        scores = {u: score(h) for u, h in (("a", 1.0), ("b", -2.0), ("v", 0.5))}
        exps = {u: np.exp(s - max(scores.values())) for u, s in scores.items()}
        z = sum(exps.values())
        expected = {u: e / z for u, e in exps.items()}
        got = attention_weights(layer, 0, "v", table, g)
        for u in expected:
            assert abs(got[u] - expected[u]) < 1e-9

    def test_missing_embedding_hard_error(self):
        g = star_graph("v", ["a"])
        table = EmbeddingTable(4)
        table.add("v", np.zeros(4))
        layer = GatLayer(4, 2, 1, Rng(5))
        with pytest.raises(KeyError):
            attention_weights(layer, 0, "v", table, g)


class TestNodeUpdate:
    def test_self_loop_identity_projection(self):
        g = SocialGraph({"v": NodeMeta()}, [])
        table = EmbeddingTable(2)
        table.add("v", [1.0, -2.0])
        layer = GatLayer(2, 2, 1, Rng(6))
        head = layer.heads[0]
        head.wk.data[:] = np.eye(2)
        head.bk.data[:] = 0.0
        out = node_update(layer, "v", table, g)
        assert np.allclose(out.data, [1.0, 0.0], atol=1e-12)

    def test_two_node_uniform_hand_value(self):
        nodes = {"u": NodeMeta(), "v": NodeMeta()}
        g = SocialGraph(nodes, [("u", "v")])
        table = EmbeddingTable(2)
        table.add("v", [1.0, 0.0])
        table.add("u", [0.0, 1.0])
        layer = GatLayer(2, 2, 1, Rng(7))
        head = layer.heads[0]
        head.wk.data[:] = np.eye(2)
        head.bk.data[:] = 0.0
        head.wa.data[:] = 0.0
        out = node_update(layer, "v", table, g)
        assert np.allclose(out.data, [0.5, 0.5], atol=1e-12)

    def test_output_dim_across_grid(self):
        g = star_graph("v", ["a", "b"])
        rng = Rng(8)
        table = table_for(g.node_ids, 8, rng)
        for hidden in GAT_HIDDEN_GRID:
            for heads in GAT_HEAD_GRID:
                layer = GatLayer(8, hidden, heads, rng.child(hidden, heads))
                out = node_update(layer, "v", table, g)
                assert out.data.shape == (heads * hidden,)

    def test_neighbor_permutation_invariance_exact(self):
        rng = Rng(9)
        leaves = [f"n{i}" for i in range(6)]
        table = table_for(["v"] + leaves, 5, rng)
        layer = GatLayer(5, 4, 2, rng.child("layer"))
        edges = [("v", l) for l in leaves]
        out1 = node_update(layer, "v", table, SocialGraph(
            {u: NodeMeta() for u in ["v"] + leaves}, edges))
        out2 = node_update(layer, "v", table, SocialGraph(
            {u: NodeMeta() for u in ["v"] + leaves}, list(reversed(edges))))
        assert np.array_equal(out1.data, out2.data)

    def test_gradients_vs_finite_differences(self):
        rng = Rng(10)
        g = star_graph("v", ["a", "b", "c"])
        table = table_for(g.node_ids, 4, rng, trainable=True)
        layer = GatLayer(4, 3, 2, rng.child("layer"))
        head_vec = Tensor(rng.normal(size=layer.out_dim))

        def loss_fn(_):
            return tsum(mul(node_update(layer, "v", table, g), head_vec))

        # eps=1e-4 keeps finite-difference roundoff below the tolerance on
        # coordinates whose true gradient is ~0
        for head in layer.heads:
            for param in (head.wa, head.wk, head.bk):
                assert check_gradients(lambda t: loss_fn(t), param, eps=1e-4) < 1e-4
        for node in g.node_ids:
            assert check_gradients(lambda t: loss_fn(t), table.get(node), eps=1e-4) < 1e-4


class TestExtractAttention:
    def test_isolated_single_entry(self):
        g = SocialGraph({"v": NodeMeta()}, [])
        table = table_for(["v"], 4, Rng(11))
        layer = GatLayer(4, 3, 2, Rng(12))
        rec = extract_attention(layer, "v", table, g)
        assert rec.target == "v"
        assert rec.heads == [[("v", 1.0)], [("v", 1.0)]]

    def test_weights_sum_to_one_on_random_instances(self):
        rng = Rng(13)
        for trial in range(20):
            n_leaves = 1 + int(rng.random() * 6)
            leaves = [f"u{i}" for i in range(n_leaves)]
            g = star_graph("v", leaves)
            table = table_for(g.node_ids, 6, rng.child("t", trial))
            layer = GatLayer(6, 3, 3, rng.child("l", trial))
            rec = extract_attention(layer, "v", table, g)
            for head in rec.heads:
                total = sum(w for _, w in head)
                assert abs(total - 1.0) <= 1e-9
                assert all(w > 0 for _, w in head)
                assert [w for _, w in head] == sorted((w for _, w in head), reverse=True)

    def test_matches_node_update_weights(self):
        rng = Rng(14)
        g = star_graph("v", ["a", "b", "c"])
        table = table_for(g.node_ids, 5, rng)
        layer = GatLayer(5, 4, 2, rng.child("l"))
        rec = extract_attention(layer, "v", table, g)
        for k in range(2):
            direct = attention_weights(layer, k, "v", table, g)
            for node, w in rec.heads[k]:
                assert w == direct[node]

    def test_to_dict_schema(self):
        g = SocialGraph({"v": NodeMeta()}, [])
        table = table_for(["v"], 4, Rng(15))
        layer = GatLayer(4, 2, 1, Rng(16))
        d = extract_attention(layer, "v", table, g).to_dict()
        assert d["target"] == "v"
        assert d["heads"][0][0] == {"neighbor": "v", "weight": 1.0}


class TestVirtualNode:
    def test_virtual_self_loop_weight_one(self):
        layer = GatLayer(4, 3, 2, Rng(17))
        vec = Tensor(Rng(18).normal(size=4))
        out, rec = layer.forward_virtual("ghost", vec)
        assert out.data.shape == (6,)
        assert rec.heads[0] == [("ghost", 1.0)]
