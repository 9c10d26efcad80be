"""Adam optimization, early stopping, grid search and the multi-seed protocol.

Mini-batches run per-example forward/backward with gradient accumulation
(no padding of variable-size neighborhoods), then one Adam step.  After
every epoch the task metric is evaluated on the validation split; the
best parameter snapshot is kept and training stops after ``patience``
epochs without improvement.  L2 regularisation enters as the gradient
contribution 2*lambda*theta (a loss-term penalty, not decoupled weight
decay) and skips bias vectors.

A (seed, config, corpus) triple fully determines the result: shuffling,
dropout and initialisation all draw from named substreams of the run
seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import Callable, Sequence

import numpy as np

from .autodiff import Tape, Tensor, backward, cross_entropy, scale
from .metrics import METRIC_FUNCS, ConfusionMatrix, per_class_report
from .model import FusionModel
from .rng import Rng
from .text import Corpus

__all__ = [
    "BATCH_GRID",
    "DROPOUT_GRID",
    "L2_GRID",
    "AdamState",
    "adam_step",
    "TrainConfig",
    "RunResult",
    "train_model",
    "TrainingDiverged",
    "GridPoint",
    "expand_grid",
    "grid_search",
    "MultiRunResult",
    "multi_run",
]

BATCH_GRID = (4, 8, 16, 32, 64)
DROPOUT_GRID = tuple(round(0.1 * k, 1) for k in range(10))
L2_GRID = (0.0, 1e-5, 1e-4)


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class AdamState:
    """First/second moments per parameter name plus the step counter."""

    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    t: int = 0


def adam_step(
    params: dict[str, Tensor],
    state: AdamState,
    lr: float = 0.001,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    l2: float = 0.0,
    no_decay: frozenset = frozenset(),
) -> None:
    """Bias-corrected Adam update in place; consumed gradients are cleared.

    Parameters without a gradient this step are skipped (lazy updates for
    embedding rows that were never touched).
    """
    state.t += 1
    t = state.t
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    for name, p in params.items():
        g = p.grad
        if g is None:
            continue
        if g.shape != p.data.shape:
            raise ValueError(f"gradient shape {g.shape} does not match {name} {p.data.shape}")
        if l2 and name not in no_decay:
            g = g + 2.0 * l2 * p.data
        m = state.m.get(name)
        if m is None:
            m = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        v = state.v[name]
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * (g * g)
        state.m[name] = m
        state.v[name] = v
        p.data -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
        p.grad = None


@dataclass
class TrainConfig:
    """One grid point plus run bookkeeping.

    batch_size, dropout and l2 are restricted to the declared search
    grids; epochs, patience and the learning rate are fixed protocol
    settings.
    """

    batch_size: int = 16
    dropout: float = 0.0
    l2: float = 0.0
    max_epochs: int = 50
    patience: int = 5
    seed: int = 0
    lr: float = 0.001

    def __post_init__(self):
        if self.batch_size not in BATCH_GRID:
            raise ValueError(f"batch_size must be one of {BATCH_GRID}, got {self.batch_size}")
        if not any(abs(self.dropout - d) < 1e-9 for d in DROPOUT_GRID):
            raise ValueError(f"dropout must be one of {DROPOUT_GRID}, got {self.dropout}")
        if not any(math.isclose(self.l2, l, rel_tol=1e-9, abs_tol=1e-12) for l in L2_GRID):
            raise ValueError(f"l2 must be one of {L2_GRID}, got {self.l2}")
        if self.max_epochs < 1 or self.patience < 1:
            raise ValueError("max_epochs and patience must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RunResult:
    seed: int
    best_val_metric: float
    test_metric: float
    best_epoch: int
    epochs_trained: int
    val_history: list[float]
    per_class: dict
    confusion: list[list[int]]
    checkpoint_hash: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunResult":
        return cls(**d)


def _snapshot(params: dict[str, Tensor]) -> dict[str, np.ndarray]:
    return {name: p.data.copy() for name, p in params.items()}


def _restore(params: dict[str, Tensor], snap: dict[str, np.ndarray]) -> None:
    for name, p in params.items():
        p.data = snap[name].copy()


def train_model(
    model: FusionModel,
    corpus: Corpus,
    cfg: TrainConfig,
    verbose: bool = False,
) -> RunResult:
    """Epoch loop with early stopping on the task validation metric."""
    train = corpus.split("train")
    val = corpus.split("val")
    test = corpus.split("test")
    if not train or not val:
        raise ValueError("training needs nonempty train and val splits")
    metric = METRIC_FUNCS[corpus.metric_name]
    params = model.parameters()
    no_decay = model.no_decay()
    state = AdamState()
    rng = Rng(cfg.seed)
    drop_rng = rng.child("dropout")

    best_val = -math.inf
    best_snap = _snapshot(params)
    best_epoch = 0
    strikes = 0
    history: list[float] = []
    epoch = 0
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.child("shuffle", epoch).permuted(range(len(train)))
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            inv = 1.0 / len(batch)
            for idx in batch:
                ex = train[idx]
                with Tape() as tape:
                    logits = model.logits(
                        ex, training=True, rng=drop_rng, dropout_rate=cfg.dropout
                    )
                    loss = scale(cross_entropy(logits, ex.label), inv)
                    if not np.isfinite(loss.data):
                        raise TrainingDiverged(
                            f"non-finite loss at epoch {epoch}, example {ex.id!r} "
                            f"(seed={cfg.seed}, dropout={cfg.dropout}, l2={cfg.l2})"
                        )
                    backward(tape, loss)
            adam_step(params, state, lr=cfg.lr, l2=cfg.l2, no_decay=no_decay)
        cm = model.evaluate(val)
        val_metric = metric(cm)
        history.append(val_metric)
        if verbose:
            print(f"epoch {epoch}: val {corpus.metric_name} = {val_metric:.4f}")
        if val_metric > best_val:
            best_val = val_metric
            best_snap = _snapshot(params)
            best_epoch = epoch
            strikes = 0
        else:
            strikes += 1
            if strikes >= cfg.patience:
                break

    _restore(params, best_snap)
    test_cm = model.evaluate(test) if test else ConfusionMatrix(model.cfg.n_classes)
    test_metric = metric(test_cm) if test else 0.0
    return RunResult(
        seed=cfg.seed,
        best_val_metric=best_val if best_epoch else 0.0,
        test_metric=test_metric,
        best_epoch=best_epoch,
        epochs_trained=epoch,
        val_history=history,
        per_class=per_class_report(test_cm, list(corpus.label_names)),
        confusion=test_cm.counts.tolist(),
    )


# ---------------------------------------------------------------------------
# grid search


@dataclass(frozen=True)
class GridPoint:
    batch_size: int
    dropout: float
    l2: float
    gat_hidden: int | None = None
    gat_heads: int | None = None

    def sort_key(self):
        return (
            self.batch_size,
            self.dropout,
            self.l2,
            self.gat_hidden if self.gat_hidden is not None else -1,
            self.gat_heads if self.gat_heads is not None else -1,
        )

    def to_dict(self) -> dict:
        d = {"batch_size": self.batch_size, "dropout": self.dropout, "l2": self.l2}
        if self.gat_hidden is not None:
            d["gat_hidden"] = self.gat_hidden
            d["gat_heads"] = self.gat_heads
        return d


def expand_grid(
    variant: str,
    batch_sizes: Sequence[int] = BATCH_GRID,
    dropouts: Sequence[float] = DROPOUT_GRID,
    l2s: Sequence[float] = L2_GRID,
    gat_hiddens: Sequence[int] = (10, 15, 20, 25, 30, 50),
    gat_heads: Sequence[int] = (1, 2, 3, 4),
) -> list[GridPoint]:
    """The full Cartesian grid, sorted; the GAT axes apply only to LING_GAT."""
    points = []
    for b in batch_sizes:
        for d in dropouts:
            for l in l2s:
                if variant == "LING_GAT":
                    for gh in gat_hiddens:
                        for hd in gat_heads:
                            points.append(GridPoint(b, d, l, gh, hd))
                else:
                    points.append(GridPoint(b, d, l))
    return sorted(points, key=GridPoint.sort_key)


def grid_search(
    run_point: Callable[[GridPoint], RunResult],
    variant: str,
    **grid_kwargs,
) -> tuple[GridPoint, RunResult, list[dict]]:
    """Exhaustive search; ties resolve to the smaller point in sort order.

    ``run_point`` trains one configuration and returns its RunResult.
    Returns (best point, its result, leaderboard sorted by val metric).
    """
    points = expand_grid(variant, **grid_kwargs)
    if not points:
        raise ValueError("empty hyperparameter grid")
    best_point = None
    best_result = None
    rows = []
    for point in points:
        result = run_point(point)
        rows.append(
            {
                "config": point.to_dict(),
                "val_metric": result.best_val_metric,
                "test_metric": result.test_metric,
            }
        )
        if best_result is None or result.best_val_metric > best_result.best_val_metric:
            best_point = point
            best_result = result
    leaderboard = sorted(rows, key=lambda r: -r["val_metric"])
    return best_point, best_result, leaderboard


# ---------------------------------------------------------------------------
# the ten-run protocol


@dataclass
class MultiRunResult:
    mean: float
    std: float
    runs: list[RunResult]

    @property
    def test_metrics(self) -> list[float]:
        return [r.test_metric for r in self.runs]

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "std": self.std,
            "test_metrics": self.test_metrics,
            "runs": [r.to_dict() for r in self.runs],
        }


def multi_run(run_seed: Callable[[int], RunResult], seeds: Sequence[int]) -> MultiRunResult:
    """Repeat training across seeds; sample mean and (n-1) std of the test metric."""
    seeds = list(seeds)
    if len(seeds) < 2:
        raise ValueError("multi_run needs at least 2 seeds")
    runs = [run_seed(s) for s in seeds]
    metrics = np.array([r.test_metric for r in runs])
    std = 0.0 if metrics.max() == metrics.min() else float(metrics.std(ddof=1))
    return MultiRunResult(mean=float(metrics.mean()), std=std, runs=runs)
