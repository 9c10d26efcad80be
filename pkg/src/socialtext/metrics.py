"""Classification metrics and the unequal-variance two-sample t-test.

Per-task headline metrics:

* sentiment: mean of the three per-class recalls (``avg_rec``)
* stance:    mean of the FAVOR and AGAINST F-scores (``f_avg``);
             NEUTRAL is trained on but never enters the metric
* hate:      F-score of the HATEFUL class (``f1_hateful``)

The two-sided p-value of the t statistic is computed here from the
regularized incomplete beta function (Lentz continued fraction) instead
of relying on an external statistics package; the test suite validates it
against an independent reference implementation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

__all__ = [
    "ConfusionMatrix",
    "precision_recall_f1",
    "per_class_report",
    "avg_rec",
    "f_avg",
    "f1_hateful",
    "METRIC_FUNCS",
    "WelchResult",
    "welch_t_test",
    "significance_matrix",
]


class ConfusionMatrix:
    """o x o integer counts; rows are gold labels, columns predictions."""

    __slots__ = ("counts",)

    def __init__(self, n_classes: int):
        if n_classes < 2:
            raise ValueError("a confusion matrix needs at least 2 classes")
        self.counts = np.zeros((n_classes, n_classes), dtype=np.int64)

    @classmethod
    def from_counts(cls, counts) -> "ConfusionMatrix":
        arr = np.asarray(counts, dtype=np.int64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"confusion counts must be square, got {arr.shape}")
        if (arr < 0).any():
            raise ValueError("confusion counts must be nonnegative")
        cm = cls(arr.shape[0])
        cm.counts = arr.copy()
        return cm

    @classmethod
    def from_pairs(cls, gold, pred, n_classes: int) -> "ConfusionMatrix":
        cm = cls(n_classes)
        for g, p in zip(gold, pred, strict=True):
            cm.add(int(g), int(p))
        return cm

    def add(self, gold: int, pred: int, count: int = 1) -> None:
        self.counts[gold, pred] += count

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __repr__(self):
        return f"ConfusionMatrix({self.counts.tolist()})"


def precision_recall_f1(cm: ConfusionMatrix, cls: int) -> tuple[float, float, float]:
    """(precision, recall, f1) for one class; 0/0 counts as 0."""
    c = cm.counts
    tp = float(c[cls, cls])
    pred = float(c[:, cls].sum())
    gold = float(c[cls, :].sum())
    p = tp / pred if pred > 0 else 0.0
    r = tp / gold if gold > 0 else 0.0
    f1 = 2.0 * p * r / (p + r) if (p + r) > 0 else 0.0
    return p, r, f1


def per_class_report(cm: ConfusionMatrix, labels: Sequence[str]) -> dict:
    """{label: {precision, recall, f1, support}} in label order."""
    if len(labels) != cm.n_classes:
        raise ValueError("label count does not match matrix size")
    report = {}
    for i, name in enumerate(labels):
        p, r, f1 = precision_recall_f1(cm, i)
        report[name] = {
            "precision": p,
            "recall": r,
            "f1": f1,
            "support": int(cm.counts[i, :].sum()),
        }
    return report


def avg_rec(cm: ConfusionMatrix) -> float:
    """Mean per-class recall over the three sentiment classes."""
    if cm.n_classes != 3:
        raise ValueError(f"avg_rec needs a 3x3 matrix, got {cm.n_classes}x{cm.n_classes}")
    return sum(precision_recall_f1(cm, k)[1] for k in range(3)) / 3.0


def f_avg(cm: ConfusionMatrix) -> float:
    """Mean of the FAVOR (class 0) and AGAINST (class 1) F-scores."""
    if cm.n_classes != 3:
        raise ValueError(f"f_avg needs a 3x3 matrix, got {cm.n_classes}x{cm.n_classes}")
    f_favor = precision_recall_f1(cm, 0)[2]
    f_against = precision_recall_f1(cm, 1)[2]
    return (f_favor + f_against) / 2.0


def f1_hateful(cm: ConfusionMatrix) -> float:
    """F-score of the HATEFUL class (class 1 of a 2x2 matrix)."""
    if cm.n_classes != 2:
        raise ValueError(f"f1_hateful needs a 2x2 matrix, got {cm.n_classes}x{cm.n_classes}")
    return precision_recall_f1(cm, 1)[2]


METRIC_FUNCS = {
    "avg_rec": avg_rec,
    "f_avg": f_avg,
    "f1_hateful": f1_hateful,
}


# ---------------------------------------------------------------------------
# Welch's t-test


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    MAXIT = 300
    EPS = 3e-16
    FPMIN = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < FPMIN:
        d = FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < FPMIN:
            d = FPMIN
        c = 1.0 + aa / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < FPMIN:
            d = FPMIN
        c = 1.0 + aa / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            return h
    raise RuntimeError("incomplete beta continued fraction failed to converge")


def _betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_two_sided_p(t: float, df: float) -> float:
    """P(|T_df| >= |t|) via I_{df/(df+t^2)}(df/2, 1/2)."""
    if df <= 0:
        raise ValueError(f"degrees of freedom must be positive, got {df}")
    if t == 0.0:
        return 1.0
    if math.isinf(t):
        return 0.0
    return _betainc_reg(df / 2.0, 0.5, df / (df + t * t))


class WelchResult(NamedTuple):
    t: float
    df: float
    p: float


def welch_t_test(a: Sequence[float], b: Sequence[float]) -> WelchResult:
    """Unpaired two-sample t-test without the equal-variance assumption.

    Returns (t, Welch-Satterthwaite df, two-sided p).  Two degenerate
    samples with equal means give (0, n_a+n_b-2, 1) by convention; equal
    variances of zero with different means give p = 0.
    """
    xa = np.asarray(list(a), dtype=np.float64)
    xb = np.asarray(list(b), dtype=np.float64)
    na, nb = xa.size, xb.size
    if na < 2 or nb < 2:
        raise ValueError("welch_t_test needs at least 2 observations per sample")
    ma, mb = xa.mean(), xb.mean()
    sa = xa.var(ddof=1) / na
    sb = xb.var(ddof=1) / nb
    denom_sq = sa + sb
    if denom_sq == 0.0:
        df = float(na + nb - 2)
        if ma == mb:
            return WelchResult(0.0, df, 1.0)
        return WelchResult(math.copysign(math.inf, ma - mb), df, 0.0)
    t = (ma - mb) / math.sqrt(denom_sq)
    # normalized Welch-Satterthwaite form; robust to underflow of sa^2/sb^2
    ra = sa / denom_sq
    rb = sb / denom_sq
    df = 1.0 / (ra * ra / (na - 1) + rb * rb / (nb - 1))
    return WelchResult(float(t), float(df), student_t_two_sided_p(float(t), float(df)))


@dataclass
class PairVerdict:
    t: float
    df: float
    p: float
    significant: bool


def significance_matrix(runsets: dict, alpha: float = 0.05) -> dict:
    """Pairwise Welch verdicts over named metric samples.

    ``runsets`` maps a model name to its per-seed metric values.  Returns
    a JSON-ready dict with the full pairwise table and, per model, the set
    of models it significantly improves over (higher mean and p < alpha).
    """
    names = sorted(runsets)
    pairs: dict = {n: {} for n in names}
    improves: dict = {n: [] for n in names}
    for i, x in enumerate(names):
        for y in names:
            if x == y:
                continue
            res = welch_t_test(runsets[x], runsets[y])
            pairs[x][y] = {
                "t": res.t,
                "df": res.df,
                "p": res.p,
                "significant": bool(res.p < alpha),
            }
            if res.p < alpha and np.mean(runsets[x]) > np.mean(runsets[y]):
                improves[x].append(y)
    return {"alpha": alpha, "pairs": pairs, "improves_over": improves}
