"""Confusion-matrix metrics, ROC curve and trapezoidal AUC.

Class 1 (malicious) is the positive class. Any 0/0 ratio evaluates to 0.0
and raises the matching entry in ``zero_division_flags``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ConfigError, DataError, ShapeError


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self):
        return self.tp + self.tn + self.fp + self.fn

    def support(self):
        return {0: self.tn + self.fp, 1: self.tp + self.fn}


def confusion(y_true, y_pred):
    y_true = np.asarray(y_true).astype(np.int64)
    y_pred = np.asarray(y_pred).astype(np.int64)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise ShapeError(f"label arrays differ in shape: {y_true.shape} vs {y_pred.shape}")
    if y_true.size == 0:
        raise ShapeError("cannot build a confusion matrix from zero rows")
    return ConfusionMatrix(
        tp=int(np.sum((y_true == 1) & (y_pred == 1))),
        tn=int(np.sum((y_true == 0) & (y_pred == 0))),
        fp=int(np.sum((y_true == 0) & (y_pred == 1))),
        fn=int(np.sum((y_true == 1) & (y_pred == 0))),
    )


def _ratio(num, den):
    return (Fraction(num, den), False) if den else (Fraction(0), True)


@dataclass
class ScalarMetrics:
    accuracy: float
    precision: dict
    recall: dict
    f1: dict
    precision_weighted: float
    recall_weighted: float
    f1_weighted: float
    zero_division_flags: dict = field(default_factory=dict)


def scalar_metrics(cm, support=None):
    """Accuracy plus per-class and support-weighted precision, recall and F1.

    For class ``c`` the counts are read with ``c`` as the positive class:
    class 0 swaps TP<->TN and FP<->FN. Everything is computed in exact
    rational arithmetic and rounded once, so results are the correctly
    rounded values of the defining ratios.
    """
    support = cm.support() if support is None else support
    acc, acc_flag = _ratio(cm.tp + cm.tn, cm.tp + cm.fn + cm.tn + cm.fp)
    flags = {"accuracy": acc_flag}
    per = {"precision": {}, "recall": {}, "f1": {}}
    views = {1: (cm.tp, cm.fp, cm.fn), 0: (cm.tn, cm.fn, cm.fp)}
    for c, (tp, fp, fn) in views.items():
        p, fp_flag = _ratio(tp, tp + fp)
        r, fr_flag = _ratio(tp, tp + fn)
        f, ff_flag = (2 * p * r / (p + r), False) if p + r else (Fraction(0), True)
        per["precision"][c], per["recall"][c], per["f1"][c] = p, r, f
        flags[f"precision_{c}"], flags[f"recall_{c}"], flags[f"f1_{c}"] = fp_flag, fr_flag, ff_flag
    total = support[0] + support[1]
    weighted = {}
    for name, vals in per.items():
        num = support[0] * vals[0] + support[1] * vals[1]
        weighted[name], flags[f"{name}_weighted"] = (num / total, False) if total else (Fraction(0), True)
    as_float = lambda d: {c: float(v) for c, v in d.items()}
    return ScalarMetrics(
        accuracy=float(acc),
        precision=as_float(per["precision"]),
        recall=as_float(per["recall"]),
        f1=as_float(per["f1"]),
        precision_weighted=float(weighted["precision"]),
        recall_weighted=float(weighted["recall"]),
        f1_weighted=float(weighted["f1"]),
        zero_division_flags=flags,
    )


@dataclass(frozen=True, eq=False)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray


def roc_curve(y_true, scores):
    """One ROC point per distinct score, thresholds descending.

    A row counts as predicted positive at threshold ``t`` when its score is
    ``>= t``. ``(0, 0)`` is prepended with threshold ``+inf``; the lowest
    distinct score yields ``(1, 1)``.
    """
    y = np.asarray(y_true).astype(np.int64)
    s = np.asarray(scores, dtype=np.float64)
    if y.shape != s.shape or y.ndim != 1:
        raise ShapeError("labels and scores differ in shape")
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("ROC curve undefined: y_true contains a single class")
    order = np.argsort(-s, kind="stable")
    s_sorted, y_sorted = s[order], y[order]
    last_of_group = np.r_[np.flatnonzero(np.diff(s_sorted) != 0), s_sorted.size - 1]
    tps = np.cumsum(y_sorted)[last_of_group]
    fps = (last_of_group + 1) - tps
    return RocCurve(
        fpr=np.r_[0.0, fps / n_neg],
        tpr=np.r_[0.0, tps / n_pos],
        thresholds=np.r_[np.inf, s_sorted[last_of_group]],
    )


def auc(curve):
    """Trapezoidal area under the curve."""
    x, y = curve.fpr, curve.tpr
    return float(np.sum((x[1:] - x[:-1]) * (y[1:] + y[:-1]) / 2.0))


def roc_auc(y_true, scores):
    return auc(roc_curve(y_true, scores))


@dataclass
class EvalReport:
    confusion: ConfusionMatrix
    metrics: ScalarMetrics
    auc: float
    n_rows: int

    def to_dict(self):
        m = self.metrics
        return {
            "accuracy": m.accuracy,
            "precision_weighted": m.precision_weighted,
            "recall_weighted": m.recall_weighted,
            "f1_weighted": m.f1_weighted,
            "auc": self.auc,
            "per_class": {
                str(c): {"precision": m.precision[c], "recall": m.recall[c], "f1": m.f1[c],
                         "support": self.confusion.support()[c]}
                for c in (0, 1)
            },
            "confusion": {"tp": self.confusion.tp, "tn": self.confusion.tn,
                          "fp": self.confusion.fp, "fn": self.confusion.fn},
            "n_rows": self.n_rows,
            "zero_division_flags": m.zero_division_flags,
        }

    def table(self):
        m = self.metrics
        sup = self.confusion.support()
        lines = [
            f"{'class':<14}{'precision':>10}{'recall':>10}{'f1':>10}{'support':>10}",
            *(f"{name:<14}{m.precision[c]:>10.4f}{m.recall[c]:>10.4f}{m.f1[c]:>10.4f}{sup[c]:>10d}"
              for c, name in ((0, "0 benign"), (1, "1 malicious"))),
            f"{'weighted avg':<14}{m.precision_weighted:>10.4f}{m.recall_weighted:>10.4f}"
            f"{m.f1_weighted:>10.4f}{self.n_rows:>10d}",
            "",
            f"accuracy  {m.accuracy:.4f}",
            f"auc       {self.auc:.4f}",
            f"confusion TP={self.confusion.tp} TN={self.confusion.tn} FP={self.confusion.fp} FN={self.confusion.fn}",
        ]
        return "\n".join(lines) + "\n"


def evaluate(y_true, proba, threshold=0.5):
    """Full report from class-1 probabilities; predictions are ``proba >= threshold``."""
    y_true = np.asarray(y_true).astype(np.int64)
    proba = np.asarray(proba, dtype=np.float64)
    cm = confusion(y_true, (proba >= threshold).astype(np.int64))
    return EvalReport(cm, scalar_metrics(cm), roc_auc(y_true, proba), int(y_true.size))


SCORERS = ("accuracy", "precision_weighted", "recall_weighted", "f1_weighted", "auc")


def score(metric, y_true, proba):
    """Single scalar used for model selection and permutation importance."""
    if metric not in SCORERS:
        raise ConfigError(f"unknown metric {metric!r}; choose from {SCORERS}")
    if metric == "auc":
        return roc_auc(y_true, proba)
    cm = confusion(y_true, (np.asarray(proba) >= 0.5).astype(np.int64))
    return float(getattr(scalar_metrics(cm), metric))
