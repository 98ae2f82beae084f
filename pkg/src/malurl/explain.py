"""Feature attribution: permutation importance and HGBC split-gain importance.

These approximate a SHAP-style ranking; they are not SHAP values.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data_io import FEATURE_NAMES
from .metrics import score
from .parallel import ordered_map

METHOD_NOTE = "permutation/gain importance, not SHAP"


@dataclass
class ImportanceReport:
    feature_names: tuple
    importances: np.ndarray
    method: str
    repeats: int | None = None
    seed: int | None = None
    metric: str | None = None

    @property
    def ranking(self):
        """Feature indices by decreasing importance; ties keep column order."""
        return np.argsort(-self.importances, kind="stable")

    def ranks(self):
        r = np.empty(len(self.importances), dtype=np.int64)
        r[self.ranking] = np.arange(1, len(self.importances) + 1)
        return r

    def top(self, n=3):
        return [self.feature_names[i] for i in self.ranking[:n]]

    def csv_rows(self):
        ranks = self.ranks()
        return [(name, repr(float(v)), str(int(ranks[i])))
                for i, (name, v) in enumerate(zip(self.feature_names, self.importances))]


def permutation_importance(model, X, y, metric="accuracy", repeats=10, seed=0, feature_names=FEATURE_NAMES):
    """Drop in ``metric`` when one column is shuffled, averaged over repeats.

    Column ``j`` is shuffled with ``default_rng(seed + j)``, so each feature's
    draws are independent of evaluation order.
    """
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    X = np.asarray(X, dtype=np.float64)
    baseline = score(metric, y, model.predict_proba(X))

    def one(j):
        rng = np.random.default_rng(seed + j)
        Xp = X.copy()
        scores = []
        for _ in range(repeats):
            Xp[:, j] = X[rng.permutation(X.shape[0]), j]
            scores.append(score(metric, y, model.predict_proba(Xp)))
        return baseline - float(np.mean(scores))

    imp = np.array(ordered_map(one, range(X.shape[1])))
    return ImportanceReport(tuple(feature_names), imp, "permutation", repeats, seed, metric)


def gain_importance(model, feature_names=FEATURE_NAMES):
    """Total split gain per feature over every tree, normalised to sum 1."""
    n = model.bin_mapper.n_features
    total = np.zeros(n)
    for tree in model.trees:
        internal = tree.left != -1
        np.add.at(total, tree.feature[internal], tree.gain[internal])
    s = total.sum()
    if s > 0:
        total = total / s
    return ImportanceReport(tuple(feature_names), total, "gain")
