from fractions import Fraction

import numpy as np
import pytest

from malurl.errors import ConfigError, DataError, ShapeError
from malurl.metrics import ConfusionMatrix, auc, confusion, evaluate, roc_auc, roc_curve, scalar_metrics, score


def concordance(y, s):
    """Brute-force Mann-Whitney statistic over all (positive, negative) pairs."""
    pos = [si for yi, si in zip(y, s) if yi == 1]
    neg = [si for yi, si in zip(y, s) if yi == 0]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p in pos for n in neg)
    return wins / (len(pos) * len(neg))


def rational_metrics(y_true, y_pred):
    """Exact metrics recomputed from the label arrays, F1 via 2TP/(2TP+FP+FN)."""
    out = {"accuracy": Fraction(sum(int(a == b) for a, b in zip(y_true, y_pred)), len(y_true))}
    n = len(y_true)
    for name in ("precision", "recall", "f1"):
        out[name] = {}
    for c in (0, 1):
        tp = sum(1 for a, b in zip(y_true, y_pred) if a == c and b == c)
        pred_c = sum(1 for b in y_pred if b == c)
        true_c = sum(1 for a in y_true if a == c)
        out["precision"][c] = Fraction(tp, pred_c) if pred_c else Fraction(0)
        out["recall"][c] = Fraction(tp, true_c) if true_c else Fraction(0)
        out["f1"][c] = Fraction(2 * tp, pred_c + true_c) if tp else Fraction(0)
    sup = {c: sum(1 for a in y_true if a == c) for c in (0, 1)}
    for name in ("precision", "recall", "f1"):
        out[name + "_weighted"] = sum(sup[c] * out[name][c] for c in (0, 1)) / n
    return out


def test_confusion_examples():
    assert confusion([1, 0, 1], [1, 1, 1]) == ConfusionMatrix(tp=2, tn=0, fp=1, fn=0)
    y = np.array([0, 1, 1, 0, 1])
    cm = confusion(y, y)
    assert cm.fp == cm.fn == 0
    cm = confusion(y, 1 - y)
    assert cm.tp == cm.tn == 0


def test_confusion_shape_error():
    with pytest.raises(ShapeError):
        confusion([1, 0], [1])


def test_scalar_example():
    m = scalar_metrics(ConfusionMatrix(tp=50, tn=40, fp=5, fn=5))
    assert m.accuracy == 0.9
    assert m.precision[1] == 50 / 55 and m.recall[1] == 50 / 55


def test_zero_division_flagged():
    m = scalar_metrics(ConfusionMatrix(tp=0, tn=8, fp=0, fn=2))
    assert m.precision[1] == 0.0 and m.zero_division_flags["precision_1"]
    assert not m.zero_division_flags["precision_0"]


def test_perfect_predictions():
    m = scalar_metrics(confusion([0, 1, 1, 0], [0, 1, 1, 0]))
    vals = [m.accuracy, m.precision_weighted, m.recall_weighted, m.f1_weighted, *m.f1.values()]
    assert all(v == 1.0 for v in vals)


def test_metrics_exact_against_rational_recomputation():
    rng = np.random.default_rng(0)
    for _ in range(200):
        n = int(rng.integers(1, 60))
        y = rng.integers(0, 2, n)
        pred = np.where(rng.random(n) < rng.random(), y, rng.integers(0, 2, n))
        m = scalar_metrics(confusion(y, pred))
        ref = rational_metrics(y.tolist(), pred.tolist())
        assert m.accuracy == float(ref["accuracy"]) == float(np.mean(y == pred))
        for name in ("precision", "recall", "f1"):
            assert m.__dict__[name] == {c: float(v) for c, v in ref[name].items()}
            assert m.__dict__[name + "_weighted"] == float(ref[name + "_weighted"])


def test_weighted_f1_between_class_values():
    rng = np.random.default_rng(1)
    for _ in range(100):
        y = rng.integers(0, 2, 30)
        m = scalar_metrics(confusion(y, rng.integers(0, 2, 30)))
        assert min(m.f1.values()) <= m.f1_weighted <= max(m.f1.values())


def test_roc_worked_example():
    c = roc_curve([0, 0, 1, 1], [0.1, 0.4, 0.35, 0.8])
    pts = list(zip(c.fpr.tolist(), c.tpr.tolist()))
    assert pts == [(0.0, 0.0), (0.0, 0.5), (0.5, 0.5), (0.5, 1.0), (1.0, 1.0)]
    assert c.thresholds[2] == 0.4
    assert auc(c) == 0.75


def test_roc_perfect_and_constant():
    y = [0, 1, 0, 1]
    c = roc_curve(y, y)
    assert list(zip(c.fpr, c.tpr)) == [(0, 0), (0, 1), (1, 1)]
    assert auc(c) == 1.0
    c = roc_curve(y, [0.3] * 4)
    assert list(zip(c.fpr, c.tpr)) == [(0, 0), (1, 1)]
    assert auc(c) == 0.5


def test_roc_single_class():
    with pytest.raises(DataError):
        roc_curve([1, 1], [0.2, 0.4])


def test_auc_equals_concordance():
    rng = np.random.default_rng(2)
    for i in range(200):
        n = int(rng.integers(2, 51))
        y = rng.integers(0, 2, n)
        y[0], y[1] = 0, 1
        # every other instance draws from a coarse grid to exercise ties
        s = rng.random(n) if i % 2 else rng.integers(0, 5, n) / 4
        assert abs(roc_auc(y, s) - concordance(y, s)) <= 1e-12


def test_auc_invariant_under_monotone_transform():
    rng = np.random.default_rng(3)
    y = rng.integers(0, 2, 40)
    s = rng.normal(size=40)
    assert roc_auc(y, s) == roc_auc(y, np.exp(3 * s) + 7)


def test_evaluate_and_score():
    y = np.array([0, 0, 1, 1])
    p = np.array([0.1, 0.6, 0.35, 0.8])
    r = evaluate(y, p)
    assert r.confusion == ConfusionMatrix(tp=1, tn=1, fp=1, fn=1)
    assert r.to_dict()["auc"] == 0.75
    assert score("accuracy", y, p) == 0.5
    assert score("auc", y, p) == 0.75
    with pytest.raises(ConfigError):
        score("mcc", y, p)
    assert "weighted avg" in r.table()
