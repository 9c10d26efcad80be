"""Adam, the training loop, grid expansion and the multi-seed protocol."""

import numpy as np
import pytest

from conftest import separable_corpus, tiny_model

from socialtext.autodiff import Tensor
from socialtext.train import (
    AdamState,
    GridPoint,
    TrainConfig,
    adam_step,
    expand_grid,
    grid_search,
    multi_run,
    train_model,
)


class TestAdam:
    def test_zero_gradient_keeps_theta(self):
        p = Tensor([1.0, -2.0], requires_grad=True)
        p.grad = np.zeros(2)
        state = AdamState()
        adam_step({"p": p}, state)
        assert np.array_equal(p.data, [1.0, -2.0])
        assert state.t == 1

    def test_missing_gradient_skipped(self):
        p = Tensor([1.0], requires_grad=True)
        state = AdamState()
        adam_step({"p": p}, state)
        assert p.data.tolist() == [1.0] and state.t == 1

    def test_first_step_closed_form(self):
        p = Tensor([1.0], requires_grad=True)
        p.grad = np.array([1.0])
        adam_step({"p": p}, AdamState())
        # bias-corrected first step is lr * g / (|g| + eps)
        assert abs(p.data[0] - (1.0 - 0.001 * (1.0 / (1.0 + 1e-8)))) < 1e-12
        assert abs(p.data[0] - 0.9990) < 1e-6

    def test_quadratic_convergence(self):
        theta = Tensor([5.0], requires_grad=True)
        state = AdamState()
        for _ in range(2000):
            theta.grad = 2.0 * theta.data
            adam_step({"t": theta}, state, lr=0.01)
        assert abs(theta.data[0]) < 0.01

    def test_pure_l2_shrinks_magnitudes(self):
        theta = Tensor([1.0, -1.5], requires_grad=True)
        state = AdamState()
        prev = np.abs(theta.data).copy()
        for _ in range(50):
            theta.grad = np.zeros(2)
            adam_step({"t": theta}, state, l2=1e-2)
            mags = np.abs(theta.data)
            assert (mags <= prev + 1e-12).all()
            prev = mags.copy()

    def test_no_decay_set_respected(self):
        b = Tensor([1.0], requires_grad=True)
        b.grad = np.zeros(1)
        adam_step({"bias": b}, AdamState(), l2=0.1, no_decay=frozenset({"bias"}))
        assert b.data.tolist() == [1.0]

    def test_shape_mismatch(self):
        p = Tensor([1.0, 2.0], requires_grad=True)
        p.grad = np.zeros(3)
        with pytest.raises(ValueError):
            adam_step({"p": p}, AdamState())


class TestTrainConfig:
    def test_grid_membership_enforced(self):
        with pytest.raises(ValueError):
            TrainConfig(batch_size=7)
        with pytest.raises(ValueError):
            TrainConfig(dropout=0.35)
        with pytest.raises(ValueError):
            TrainConfig(l2=0.5)

    def test_valid_values(self):
        cfg = TrainConfig(batch_size=8, dropout=0.2, l2=1e-5, seed=3)
        assert cfg.dropout == 0.2


class FakeModelForTrace:
    """Scripted validation metrics to exercise the early-stopping rule."""

    def __init__(self, metrics):
        self.metrics = list(metrics)
        self.calls = 0
        self.cfg = type("C", (), {"n_classes": 2})()
        self._param = Tensor([0.0], requires_grad=True)

    def parameters(self):
        return {"p": self._param}

    def no_decay(self):
        return frozenset()

    def logits(self, ex, training=False, rng=None, dropout_rate=0.0):
        from socialtext.autodiff import matmul

        return matmul(Tensor(np.zeros((2, 1))), self._param)

    def evaluate(self, examples):
        from socialtext.metrics import ConfusionMatrix

        # encode the scripted metric as a 2x2 matrix with that recall ratio
        value = self.metrics[min(self.calls, len(self.metrics) - 1)]
        self.calls += 1
        cm = ConfusionMatrix(2)
        cm.add(1, 1, round(value * 1000))
        cm.add(1, 0, 1000 - round(value * 1000))
        cm.add(0, 0, 1000)
        return cm


class TestEarlyStopping:
    def test_rule_trace(self, hate_corpus):
        # metric sequence .5 .6 .55 .58 with patience 2: stop after epoch 4,
        # best checkpoint from epoch 2
        fake = FakeModelForTrace([0.5, 0.6, 0.55, 0.58, 0.99])
        cfg = TrainConfig(batch_size=64, patience=2, max_epochs=50, seed=0)
        result = train_model(fake, hate_corpus, cfg)
        assert result.epochs_trained == 4
        assert result.best_epoch == 2
        assert len(result.val_history) == 4

    def test_never_returns_worse_than_seen(self, hate_corpus):
        fake = FakeModelForTrace([0.9, 0.1, 0.1, 0.1])
        cfg = TrainConfig(batch_size=64, patience=3, max_epochs=10, seed=0)
        result = train_model(fake, hate_corpus, cfg)
        assert result.best_val_metric == max(result.val_history)


class TestTrainModel:
    def test_bitwise_deterministic(self, hate_corpus):
        def run():
            model = tiny_model(hate_corpus, "LING", seed=11)
            cfg = TrainConfig(batch_size=16, max_epochs=3, patience=5, seed=11)
            return train_model(model, hate_corpus, cfg)

        a, b = run(), run()
        assert a.test_metric == b.test_metric
        assert a.val_history == b.val_history

    def test_separable_task_learnable(self):
        corpus = separable_corpus("hate", n_per_class=60)
        model = tiny_model(corpus, "LING", seed=1, word_dim=12, text_hidden=10)
        cfg = TrainConfig(batch_size=4, max_epochs=10, patience=10, seed=1)
        result = train_model(model, corpus, cfg)
        assert result.test_metric > 0.95

    def test_n2v_vectors_frozen_and_random_vectors_update(self):
        corpus = separable_corpus("hate", n_per_class=20)
        n2v = tiny_model(corpus, "LING_N2V", seed=2)
        before = {k: v.data.copy() for k, v in n2v.author_table.vectors.items()}
        cfg = TrainConfig(batch_size=16, max_epochs=1, patience=5, seed=2)
        train_model(n2v, corpus, cfg)
        for k, v in n2v.author_table.vectors.items():
            assert np.array_equal(v.data, before[k])

        rnd = tiny_model(corpus, "LING_RANDOM", seed=2)
        before = {k: v.data.copy() for k, v in rnd.author_table.vectors.items()}
        train_model(rnd, corpus, cfg)
        changed = sum(
            0 if np.array_equal(v.data, before[k]) else 1
            for k, v in rnd.author_table.vectors.items()
        )
        assert changed >= 1

    def test_empty_split_errors(self, hate_corpus):
        for ex in hate_corpus.examples:
            if ex.split == "val":
                ex.split = "train"
        model = tiny_model(hate_corpus, "LING")
        with pytest.raises(ValueError):
            train_model(model, hate_corpus, TrainConfig())


class TestGrid:
    def test_single_point(self):
        pts = expand_grid("LING", batch_sizes=[8], dropouts=[0.0], l2s=[0.0])
        assert pts == [GridPoint(8, 0.0, 0.0)]

    def test_grid_sizes(self):
        assert len(expand_grid("LING")) == 5 * 10 * 3
        assert len(expand_grid("LING_GAT")) == 5 * 10 * 3 * 6 * 4

    def test_leaderboard_sorted_and_tie_break(self):
        from socialtext.train import RunResult

        def run_point(point):
            # two tied winners; the smaller point in sort order must win
            val = 0.9 if point.dropout in (0.0, 0.1) else 0.5
            return RunResult(
                seed=0, best_val_metric=val, test_metric=val, best_epoch=1,
                epochs_trained=1, val_history=[val], per_class={}, confusion=[],
            )

        best, _, board = grid_search(
            run_point, "LING", batch_sizes=[8], dropouts=[0.0, 0.1, 0.2], l2s=[0.0]
        )
        assert best == GridPoint(8, 0.0, 0.0)
        assert [r["val_metric"] for r in board] == sorted(
            (r["val_metric"] for r in board), reverse=True
        )


class TestMultiRun:
    def test_identical_runs_zero_std(self):
        from socialtext.train import RunResult

        def run_seed(_):
            return RunResult(
                seed=0, best_val_metric=0.7, test_metric=0.7, best_epoch=1,
                epochs_trained=1, val_history=[0.7], per_class={}, confusion=[],
            )

        res = multi_run(run_seed, [1, 1, 1])
        assert res.std == 0.0

    def test_hand_arithmetic(self):
        from socialtext.train import RunResult

        vals = iter([0.60, 0.62])

        def run_seed(_):
            v = next(vals)
            return RunResult(
                seed=0, best_val_metric=v, test_metric=v, best_epoch=1,
                epochs_trained=1, val_history=[v], per_class={}, confusion=[],
            )

        res = multi_run(run_seed, [0, 1])
        assert abs(res.mean - 0.61) < 1e-12
        assert abs(res.std - 0.014142135623730963) < 1e-9

    def test_needs_two_seeds(self):
        with pytest.raises(ValueError):
            multi_run(lambda s: None, [0])
