"""Stratified k-fold cross-validation and exhaustive grid search."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import ConfigError, FoldError, MalurlError, SearchError
from .metrics import score
from .models import make_estimator
from .parallel import ordered_map
from .preprocess import fit_transform
from .resample import SmoteConfig, smote_balance


@dataclass(frozen=True, eq=False)
class FoldPlan:
    k: int
    assignments: np.ndarray

    def fold(self, i):
        """(train_rows, held_out_rows) for fold ``i``."""
        return np.flatnonzero(self.assignments != i), np.flatnonzero(self.assignments == i)


def make_folds(y, k=5, seed=0):
    """Seeded per-class shuffle, then round-robin fold assignment.

    The round-robin counter carries over from class 0 to class 1, so fold
    sizes differ by at most one overall as well as within each class.
    """
    y = np.asarray(y)
    if k < 2:
        raise FoldError("k must be at least 2")
    rng = np.random.default_rng(seed)
    assign = np.empty(y.size, dtype=np.int64)
    offset = 0
    for c in np.unique(y):
        members = np.flatnonzero(y == c)
        if members.size < k:
            raise FoldError(f"class {c} has {members.size} rows, fewer than k={k} folds")
        members = members[rng.permutation(members.size)]
        assign[members] = (offset + np.arange(members.size)) % k
        offset = (offset + members.size) % k
    return FoldPlan(k, assign)


def expand_grid(grid):
    """Combinations in lexicographic parameter-name order, values in listed order."""
    if not grid:
        raise ConfigError("empty hyperparameter grid")
    names = sorted(grid)
    for n in names:
        if not isinstance(grid[n], (list, tuple)) or not grid[n]:
            raise ConfigError(f"grid entry {n!r} must be a non-empty list")
    return [dict(zip(names, values)) for values in itertools.product(*(grid[n] for n in names))]


def load_default_grid(kind):
    path = resources.files("malurl") / "grids" / f"{kind}.json"
    if not path.is_file():
        raise ConfigError(f"no default grid for model kind {kind!r}")
    return json.loads(path.read_text())


@dataclass(frozen=True)
class FoldPipeline:
    """What is refitted inside each fold.

    ``preprocess`` refits the imputer and scaler on the fold's training rows;
    ``smote`` (when set) balances the fold's training rows. Held-out rows
    are transformed but never resampled.
    """

    preprocess: bool = False
    smote: SmoteConfig | None = None

    @property
    def smote_mode(self):
        return "inside" if self.smote is not None else "outside"


def fold_datasets(train, plan, i, pipeline):
    tr_rows, te_rows = plan.fold(i)
    fit_part, held_out = train.take(tr_rows), train.take(te_rows)
    if pipeline.preprocess:
        transform, fit_part = fit_transform(fit_part)
        held_out = transform.apply(held_out)
    if pipeline.smote is not None:
        fit_part = smote_balance(fit_part, pipeline.smote)
    return fit_part, held_out


@dataclass
class SearchResult:
    kind: str
    metric: str
    k: int
    table: list = field(default_factory=list)
    best_combination: dict | None = None
    best_mean_score: float | None = None
    best_combo_id: int | None = None
    smote_mode: str = "outside"

    def csv_rows(self):
        """Rows of ``combo_id,params,fold,score``; fold ``mean`` closes each combination."""
        rows = []
        for entry in self.table:
            params = json.dumps(entry["params"], sort_keys=True)
            if entry["failed"]:
                rows.append((entry["combo_id"], params, "mean", "failed"))
                continue
            for f, s in enumerate(entry["fold_scores"]):
                rows.append((entry["combo_id"], params, str(f), repr(float(s))))
            rows.append((entry["combo_id"], params, "mean", repr(float(entry["mean"]))))
        return rows

    def to_dict(self):
        return {
            "kind": self.kind,
            "metric": self.metric,
            "k": self.k,
            "smote_mode": self.smote_mode,
            "best_combo_id": self.best_combo_id,
            "best_combination": self.best_combination,
            "best_mean_score": self.best_mean_score,
            "table": self.table,
        }


def cross_val_scores(kind, params, train, plan, metric="accuracy", seed=0, pipeline=FoldPipeline()):
    def run(i):
        fit_part, held_out = fold_datasets(train, plan, i, pipeline)
        est = make_estimator(kind, params, seed).fit(fit_part.X, fit_part.y)
        return score(metric, held_out.y, est.predict_proba(held_out.X))

    return [run(i) for i in range(plan.k)]


def grid_search(kind, grid, train, k=5, metric="accuracy", seed=0, pipeline=FoldPipeline()):
    """Score every combination by k-fold CV and keep the first best mean.

    A combination whose fit raises on any fold is recorded as failed and
    excluded from selection. Results are ordered by enumeration index
    regardless of how tasks are scheduled.
    """
    combos = expand_grid(grid)
    plan = make_folds(train.y, k, seed)
    folds = ordered_map(lambda i: fold_datasets(train, plan, i, pipeline), range(k))

    def run(task):
        ci, fi = task
        fit_part, held_out = folds[fi]
        try:
            est = make_estimator(kind, combos[ci], seed).fit(fit_part.X, fit_part.y)
            return score(metric, held_out.y, est.predict_proba(held_out.X)), None
        except (MalurlError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            return None, f"{type(exc).__name__}: {exc}"

    tasks = [(ci, fi) for ci in range(len(combos)) for fi in range(k)]
    outcomes = ordered_map(run, tasks)

    result = SearchResult(kind, metric, k, smote_mode=pipeline.smote_mode)
    for ci, params in enumerate(combos):
        fold_out = outcomes[ci * k:(ci + 1) * k]
        errors = [e for _, e in fold_out if e is not None]
        if errors:
            result.table.append({"combo_id": ci, "params": params, "fold_scores": None, "mean": None,
                                 "failed": True, "error": errors[0]})
            continue
        scores = [s for s, _ in fold_out]
        mean = float(np.mean(scores))
        result.table.append({"combo_id": ci, "params": params, "fold_scores": scores, "mean": mean,
                             "failed": False})
        if result.best_mean_score is None or mean > result.best_mean_score:
            result.best_mean_score, result.best_combination, result.best_combo_id = mean, params, ci
    if result.best_combination is None:
        raise SearchError(f"every combination failed for {kind}; first error: {result.table[0]['error']}")
    return result
