"""Model variants, fusion classifier, frequency baseline, checkpoints."""

import numpy as np
import pytest

from conftest import separable_corpus, tiny_model

from socialtext.autodiff import Tensor
from socialtext.model import (
    FusionModel,
    ModelConfig,
    Prediction,
    frequency_baseline,
    fuse_and_classify,
    load_checkpoint,
    save_checkpoint,
)
from socialtext.rng import Rng


class TestFuseAndClassify:
    def test_zero_weights_uniform(self):
        w1 = Tensor(np.zeros((5, 4)), requires_grad=True)
        w2 = Tensor(np.zeros((4, 3)), requires_grad=True)
        pred = fuse_and_classify(Tensor(np.ones(3)), Tensor(np.ones(2)), w1, w2)
        assert np.allclose(pred.probabilities, [1 / 3] * 3, atol=1e-12)
        assert pred.class_index == 0  # tie breaks to the lowest index

    def test_reference_shapes(self):
        cfg = ModelConfig(variant="LING_N2V", task="sentiment")
        assert cfg.classifier_in_dim == 300
        model = tiny_model(
            separable_corpus("sentiment"), "LING_N2V",
            word_dim=8, text_hidden=50, author_dim=200, classifier_hidden=50,
        )
        assert model.w1.data.shape == (300, 50)
        assert model.w2.data.shape == (50, 3)

    def test_hand_computed_probabilities(self):
        # 1-dim text vector, no author part, hand-set 2x2-ish weights
        w1 = Tensor(np.array([[2.0, -1.0]]))
        w2 = Tensor(np.array([[1.0, 0.0], [0.5, 0.25]]))
        l = Tensor(np.array([3.0]))
        hidden = np.maximum(l.data @ w1.data, 0)
        logits = hidden @ w2.data
        expect = np.exp(logits - logits.max())
        expect /= expect.sum()
        pred = fuse_and_classify(l, None, w1, w2)
        assert np.allclose(pred.probabilities, expect, atol=1e-12)

    def test_dim_mismatch(self):
        w1 = Tensor(np.zeros((5, 4)))
        w2 = Tensor(np.zeros((4, 3)))
        with pytest.raises(ValueError):
            fuse_and_classify(Tensor(np.ones(3)), None, w1, w2)


class TestVariants:
    def test_ling_invariant_to_author_permutation(self, hate_corpus):
        model = tiny_model(hate_corpus, "LING")
        test = hate_corpus.split("test")
        preds = [model.predict(ex).class_index for ex in test]
        for ex in test:
            ex.author = "someone_else"
        assert [model.predict(ex).class_index for ex in test] == preds

    def test_probabilities_sum_to_one(self, hate_corpus):
        for variant in ("LING", "LING_RANDOM", "LING_PV", "LING_N2V", "LING_GAT"):
            model = tiny_model(hate_corpus, variant)
            pred = model.predict(hate_corpus.examples[0])
            assert abs(sum(pred.probabilities) - 1.0) < 1e-9
            assert pred.class_index == int(np.argmax(pred.probabilities))

    def test_unknown_author_fallback_path(self, hate_corpus):
        for variant in ("LING_N2V", "LING_GAT"):
            model = tiny_model(hate_corpus, variant)
            ex = hate_corpus.examples[0]
            ex_ghost = type(ex)(
                id="ghost", author="never_seen", label=ex.label,
                raw_text=ex.raw_text, tokens=ex.tokens, split="test",
            )
            pred = model.predict(ex_ghost)
            assert abs(sum(pred.probabilities) - 1.0) < 1e-9

    def test_gat_virtual_node_attention(self, hate_corpus):
        model = tiny_model(hate_corpus, "LING_GAT")
        rec = model.author_attention("not_in_graph")
        assert rec.heads[0] == [("not_in_graph", 1.0)]

    def test_author_vector_dims(self, hate_corpus):
        model = tiny_model(hate_corpus, "LING_GAT", gat_hidden=4, gat_heads=3)
        s = model.author_vector(hate_corpus.examples[0].author)
        assert s.data.shape == (12,)

    def test_classifier_input_dim_follows_formula(self, hate_corpus):
        for variant, expected in (
            ("LING", 12),            # 2 * text_hidden(6)
            ("LING_N2V", 22),        # + author_dim(10)
            ("LING_GAT", 20),        # + heads(2) * gat_hidden(4)
        ):
            model = tiny_model(hate_corpus, variant)
            assert model.cfg.classifier_in_dim == expected
            assert model.w1.data.shape[0] == expected


class TestFrequencyBaseline:
    def test_single_class(self):
        sampler = frequency_baseline([1, 1, 1], Rng(0), n_classes=2)
        assert all(s == 1 for s in sampler.sample_many(50))

    def test_empirical_frequencies(self):
        rng = Rng(1)
        labels = [0] * 356 + [1] * 188 + [2] * 456
        sampler = frequency_baseline(labels, rng, n_classes=3)
        draws = np.array(sampler.sample_many(100_000))
        for k, target in enumerate((0.356, 0.188, 0.456)):
            assert abs(np.mean(draws == k) - target) <= 0.01

    def test_expected_avg_rec_of_frequency_sampler(self):
        # random predictions give per-class recall == class frequency, so
        # the expected mean recall over three classes is 1/3
        probs = np.array([0.356, 0.188, 0.456])
        expected_avg_rec = probs.mean()
        assert abs(expected_avg_rec - 0.332) <= 0.01

    def test_empty_labels_error(self):
        with pytest.raises(ValueError):
            frequency_baseline([], Rng(0))


class TestCheckpoints:
    @pytest.mark.parametrize("variant", ["LING", "LING_RANDOM", "LING_N2V", "LING_GAT"])
    def test_round_trip_predictions(self, tmp_path, variant, hate_corpus):
        model = tiny_model(hate_corpus, variant)
        path = tmp_path / "model.zip"
        save_checkpoint(model, path)
        loaded = load_checkpoint(path, graph=model.graph)
        for ex in hate_corpus.split("test"):
            a = model.predict(ex)
            b = loaded.predict(ex)
            assert a.class_index == b.class_index
            assert np.allclose(a.probabilities, b.probabilities, atol=0)

    def test_gat_checkpoint_needs_graph(self, tmp_path, hate_corpus):
        model = tiny_model(hate_corpus, "LING_GAT")
        path = tmp_path / "model.zip"
        save_checkpoint(model, path)
        with pytest.raises(ValueError, match="graph"):
            load_checkpoint(path)

    def test_hash_verified(self, tmp_path, hate_corpus):
        import zipfile

        model = tiny_model(hate_corpus, "LING")
        path = tmp_path / "model.zip"
        save_checkpoint(model, path)
        # tamper with a payload member
        with zipfile.ZipFile(path) as zf:
            members = {n: zf.read(n) for n in zf.namelist()}
        members["params.txt"] = members["params.txt"].replace(b"0.", b"1.", 1)
        with zipfile.ZipFile(path, "w") as zf:
            for name, payload in members.items():
                zf.writestr(name, payload)
        with pytest.raises(ValueError, match="hash"):
            load_checkpoint(path)


class TestModelConfig:
    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            ModelConfig(variant="LSTM", task="hate")

    def test_unknown_task(self):
        with pytest.raises(ValueError):
            ModelConfig(variant="LING", task="emotion")

    def test_n_classes_by_task(self):
        assert ModelConfig(variant="LING", task="sentiment").n_classes == 3
        assert ModelConfig(variant="LING", task="hate").n_classes == 2
