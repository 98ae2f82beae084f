"""Comparison classifiers: KNN, L2 logistic regression, entropy tree, forest.

All share the estimator contract ``fit(X, y) -> self``,
``predict_proba(X) -> P(y=1)``, ``predict(X)`` (threshold 0.5) and
``to_dict``/``from_dict`` for the model file.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

from .errors import ConfigError, FitError, ShapeError
from .parallel import ordered_map


class _Classifier:
    def predict(self, X):
        return (self.predict_proba(X) >= 0.5).astype(np.int64)


def _check_X(X, n_features):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != n_features:
        raise ShapeError(f"expected {n_features} columns, got shape {X.shape}")
    return X


# KNN -------------------------------------------------------------------------

@dataclass(frozen=True)
class KnnConfig:
    n_neighbors: int = 7
    weights: str = "distance"


def knn_proba(train_X, train_y, query_X, cfg=KnnConfig(), chunk=256):
    """Class-1 vote share among the ``k`` nearest training rows.

    Inverse-distance weights; if any of the ``k`` neighbours sits at
    distance zero the vote is restricted to those, equally weighted.
    Equidistant rows at the k-th rank are taken in index order.
    """
    n = train_X.shape[0]
    k = cfg.n_neighbors
    if not 1 <= k <= n:
        raise ConfigError(f"n_neighbors={k} outside [1, {n}]")
    if cfg.weights not in ("distance", "uniform"):
        raise ConfigError(f"unknown KNN weighting {cfg.weights!r}")
    out = np.empty(query_X.shape[0])
    for start in range(0, query_X.shape[0], chunk):
        q = query_X[start:start + chunk]
        dist = np.sqrt(((q[:, None, :] - train_X[None, :, :]) ** 2).sum(axis=2))
        nn = np.argsort(dist, axis=1, kind="stable")[:, :k]
        d = np.take_along_axis(dist, nn, axis=1)
        labels = train_y[nn].astype(np.float64)
        if cfg.weights == "uniform":
            w = np.ones_like(d)
        else:
            zero = d == 0.0
            with np.errstate(divide="ignore"):
                w = np.where(zero.any(axis=1, keepdims=True), zero.astype(np.float64), 1.0 / d)
        out[start:start + chunk] = (w * labels).sum(axis=1) / w.sum(axis=1)
    return out


def knn_predict_proba(train, query_X, cfg=KnnConfig()):
    return knn_proba(train.X, train.y, np.asarray(query_X, dtype=np.float64), cfg)


class KnnClassifier(_Classifier):
    kind = "knn"

    def __init__(self, n_neighbors=7, weights="distance"):
        self.config = KnnConfig(int(n_neighbors), weights)

    def fit(self, X, y):
        self.X_ = np.asarray(X, dtype=np.float64)
        self.y_ = np.asarray(y, dtype=np.int64)
        if not 1 <= self.config.n_neighbors <= self.X_.shape[0]:
            raise ConfigError(f"n_neighbors={self.config.n_neighbors} exceeds {self.X_.shape[0]} training rows")
        return self

    def predict_proba(self, X):
        return knn_proba(self.X_, self.y_, _check_X(X, self.X_.shape[1]), self.config)

    def to_dict(self):
        return {"config": asdict(self.config), "X": self.X_.tolist(), "y": self.y_.tolist()}

    @classmethod
    def from_dict(cls, d):
        est = cls(**d["config"])
        est.X_ = np.array(d["X"], dtype=np.float64)
        est.y_ = np.array(d["y"], dtype=np.int64)
        return est


# Logistic regression -----------------------------------------------------------

@dataclass(frozen=True)
class LrConfig:
    C: float = 10.0
    tol: float = 0.1
    max_iter: int = 1000


def lr_objective(params, X, y, C):
    """``0.5 * |w|^2 + C * sum log(1 + exp(-t * (w.x + b)))`` and its gradient.

    ``params`` is ``[w..., b]``; ``t = 2y - 1``; the bias is not penalised.
    """
    w, b = params[:-1], params[-1]
    t = 2.0 * y - 1.0
    margin = t * (X @ w + b)
    value = 0.5 * float(w @ w) + C * float(np.logaddexp(0.0, -margin).sum())
    coef = -C * t * expit(-margin)
    grad = np.empty_like(params)
    grad[:-1] = w + X.T @ coef
    grad[-1] = coef.sum()
    return value, grad


def lr_fit(X, y, cfg=LrConfig()):
    """L-BFGS with Wolfe line search from ``w = 0, b = 0``.

    Stops once the max-norm of the gradient is at most ``cfg.tol`` or after
    ``cfg.max_iter`` iterations. Returns ``(w, b, objective_trace)``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if np.unique(y).size < 2:
        raise FitError("logistic regression needs both classes")
    if cfg.C <= 0 or cfg.tol <= 0:
        raise ConfigError("C and tol must be positive")
    x0 = np.zeros(X.shape[1] + 1)
    trace = [lr_objective(x0, X, y, cfg.C)[0]]
    res = minimize(
        lr_objective, x0, args=(X, y, cfg.C), jac=True, method="L-BFGS-B",
        callback=lambda xk: trace.append(lr_objective(xk, X, y, cfg.C)[0]),
        options={"maxiter": cfg.max_iter, "gtol": cfg.tol, "ftol": 0.0, "maxcor": 10},
    )
    return res.x[:-1].copy(), float(res.x[-1]), trace


class LogisticRegressionL2(_Classifier):
    kind = "lr"

    def __init__(self, C=10.0, tol=0.1, max_iter=1000):
        self.config = LrConfig(float(C), float(tol), int(max_iter))

    def fit(self, X, y):
        self.coef_, self.intercept_, self.objective_trace_ = lr_fit(X, y, self.config)
        return self

    def predict_proba(self, X):
        return expit(_check_X(X, self.coef_.size) @ self.coef_ + self.intercept_)

    def to_dict(self):
        return {"config": asdict(self.config), "coef": [float(v) for v in self.coef_],
                "intercept": float(self.intercept_)}

    @classmethod
    def from_dict(cls, d):
        est = cls(**d["config"])
        est.coef_ = np.array(d["coef"], dtype=np.float64)
        est.intercept_ = float(d["intercept"])
        return est


# Decision tree -----------------------------------------------------------------

_MIN_GAIN = 1e-12


def entropy(n_pos, n):
    """Binary entropy in bits of a node with ``n_pos`` positives out of ``n``."""
    n_pos = np.asarray(n_pos, dtype=np.float64)
    n = np.asarray(n, dtype=np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = np.where(n > 0, n_pos / n, 0.0)
        terms = [np.where(q > 0, -q * np.log2(np.where(q > 0, q, 1.0)), 0.0) for q in (p, 1.0 - p)]
    return terms[0] + terms[1]


def information_gain(y_parent, y_left, y_right):
    n, nl, nr = len(y_parent), len(y_left), len(y_right)
    return float(entropy(np.sum(y_parent), n) - nl / n * entropy(np.sum(y_left), nl)
                 - nr / n * entropy(np.sum(y_right), nr))


def n_max_features(rule, n_features):
    if rule in (None, "all"):
        return n_features
    if rule == "sqrt":
        return max(1, int(math.sqrt(n_features)))
    if rule == "log2":
        return max(1, int(math.log2(n_features)))
    if isinstance(rule, int) and 1 <= rule <= n_features:
        return rule
    raise ConfigError(f"unknown max_features rule {rule!r}")


@dataclass(frozen=True)
class TreeConfig:
    max_features: object = "log2"
    min_samples_leaf: int = 15
    min_samples_split: int = 15
    seed: int = 0
    criterion: str = "entropy"

    def __post_init__(self):
        if self.criterion != "entropy":
            raise ConfigError("only the entropy criterion is supported")
        if self.min_samples_split < 2 or self.min_samples_leaf < 1:
            raise ConfigError("min_samples_split must be >= 2 and min_samples_leaf >= 1")


def _best_threshold(x, y, msl, parent_h):
    """Best midpoint split of one feature: (gain, threshold) or None."""
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    n = xs.size
    left_n = np.arange(msl, n - msl + 1)
    if left_n.size == 0:
        return None
    left_n = left_n[xs[left_n - 1] < xs[left_n]]
    if left_n.size == 0:
        return None
    cum = np.cumsum(ys)
    pos_l = cum[left_n - 1]
    pos_r = cum[-1] - pos_l
    gains = parent_h - (left_n / n) * entropy(pos_l, left_n) - ((n - left_n) / n) * entropy(pos_r, n - left_n)
    i = int(np.argmax(gains))
    lo, hi = xs[left_n[i] - 1], xs[left_n[i]]
    thr = (lo + hi) / 2.0
    if thr >= hi:
        thr = lo
    return float(gains[i]), float(thr)


def grow_entropy_tree(X, y, cfg, rng):
    """Depth-first greedy growth; returns flat node arrays as a dict."""
    n_feat = X.shape[1]
    m = n_max_features(cfg.max_features, n_feat)
    feature, threshold, left, right, value, gain, count = [], [], [], [], [], [], []
    stack = [(np.arange(X.shape[0]), None, False)]
    while stack:
        idx, parent, is_left = stack.pop()
        nid = len(feature)
        if parent is not None:
            (left if is_left else right)[parent] = nid
        yi = y[idx]
        n, n_pos = idx.size, int(yi.sum())
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(n_pos / n)
        gain.append(0.0)
        count.append(n)
        if n < cfg.min_samples_split or n_pos in (0, n):
            continue
        feats = np.sort(rng.choice(n_feat, size=m, replace=False)) if m < n_feat else np.arange(n_feat)
        parent_h = float(entropy(n_pos, n))
        best = None
        for f in feats:
            cand = _best_threshold(X[idx, f], yi, cfg.min_samples_leaf, parent_h)
            if cand is not None and cand[0] > _MIN_GAIN and (best is None or cand[0] > best[0]):
                best = (cand[0], cand[1], int(f))
        if best is None:
            continue
        g, thr, f = best
        feature[nid], threshold[nid], gain[nid] = f, thr, g
        go_left = X[idx, f] <= thr
        # right pushed first so the left subtree is numbered first
        stack.append((idx[~go_left], nid, False))
        stack.append((idx[go_left], nid, True))
    return {
        "feature": np.array(feature, dtype=np.int64),
        "threshold": np.array(threshold, dtype=np.float64),
        "left": np.array(left, dtype=np.int64),
        "right": np.array(right, dtype=np.int64),
        "value": np.array(value, dtype=np.float64),
        "gain": np.array(gain, dtype=np.float64),
        "count": np.array(count, dtype=np.int64),
    }


def _predict_nodes(nodes, X):
    node = np.zeros(X.shape[0], dtype=np.int64)
    active = nodes["left"][node] != -1
    while active.any():
        cur = node[active]
        go_left = X[active, nodes["feature"][cur]] <= nodes["threshold"][cur]
        node[active] = np.where(go_left, nodes["left"][cur], nodes["right"][cur])
        active = nodes["left"][node] != -1
    return nodes["value"][node]


def _nodes_to_dict(nodes):
    return {k: [float(x) for x in v] if v.dtype.kind == "f" else v.tolist() for k, v in nodes.items()}


def _nodes_from_dict(d):
    return {k: np.array(v, dtype=np.float64 if k in ("threshold", "value", "gain") else np.int64)
            for k, v in d.items()}


class DecisionTreeEntropy(_Classifier):
    kind = "dt"

    def __init__(self, max_features="log2", min_samples_leaf=15, min_samples_split=15, seed=0,
                 criterion="entropy"):
        self.config = TreeConfig(max_features, int(min_samples_leaf), int(min_samples_split), int(seed),
                                 criterion)

    def fit(self, X, y, rng=None):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        rng = np.random.default_rng(self.config.seed) if rng is None else rng
        self.n_features_ = X.shape[1]
        self.nodes_ = grow_entropy_tree(X, y, self.config, rng)
        return self

    def predict_proba(self, X):
        return _predict_nodes(self.nodes_, _check_X(X, self.n_features_))

    def to_dict(self):
        return {"config": asdict(self.config), "n_features": self.n_features_,
                "nodes": _nodes_to_dict(self.nodes_)}

    @classmethod
    def from_dict(cls, d):
        est = cls(**d["config"])
        est.n_features_ = int(d["n_features"])
        est.nodes_ = _nodes_from_dict(d["nodes"])
        return est


def tree_fit(train, cfg=TreeConfig()):
    return DecisionTreeEntropy(cfg.max_features, cfg.min_samples_leaf, cfg.min_samples_split, cfg.seed,
                               cfg.criterion).fit(train.X, train.y)


# Random forest -------------------------------------------------------------------

@dataclass(frozen=True)
class ForestConfig:
    n_estimators: int = 100
    max_features: object = "sqrt"
    min_samples_leaf: int = 1
    min_samples_split: int = 2
    seed: int = 0
    bootstrap: bool = True


class RandomForestEntropy(_Classifier):
    """Bagged entropy trees; tree ``t`` draws everything from ``default_rng(seed + t)``."""

    kind = "rf"

    def __init__(self, n_estimators=100, max_features="sqrt", min_samples_leaf=1, min_samples_split=2,
                 seed=0, bootstrap=True):
        if n_estimators < 1:
            raise ConfigError("n_estimators must be at least 1")
        self.config = ForestConfig(int(n_estimators), max_features, int(min_samples_leaf),
                                   int(min_samples_split), int(seed), bool(bootstrap))

    def _fit_one(self, t, X, y):
        cfg = self.config
        rng = np.random.default_rng(cfg.seed + t)
        if cfg.bootstrap:
            rows = rng.integers(0, X.shape[0], size=X.shape[0])
            X, y = X[rows], y[rows]
        tree = DecisionTreeEntropy(cfg.max_features, cfg.min_samples_leaf, cfg.min_samples_split,
                                   cfg.seed + t)
        return tree.fit(X, y, rng=rng)

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        self.n_features_ = X.shape[1]
        self.trees_ = ordered_map(lambda t: self._fit_one(t, X, y), range(self.config.n_estimators))
        return self

    def tree_probas(self, X):
        X = _check_X(X, self.n_features_)
        return np.vstack([t.predict_proba(X) for t in self.trees_])

    def predict_proba(self, X):
        return self.tree_probas(X).mean(axis=0)

    def to_dict(self):
        return {"config": asdict(self.config), "n_features": self.n_features_,
                "trees": [t.to_dict() for t in self.trees_]}

    @classmethod
    def from_dict(cls, d):
        est = cls(**d["config"])
        est.n_features_ = int(d["n_features"])
        est.trees_ = [DecisionTreeEntropy.from_dict(t) for t in d["trees"]]
        return est


def forest_fit(train, cfg=ForestConfig()):
    return RandomForestEntropy(cfg.n_estimators, cfg.max_features, cfg.min_samples_leaf,
                               cfg.min_samples_split, cfg.seed, cfg.bootstrap).fit(train.X, train.y)


def lr_model_fit(train, cfg=LrConfig()):
    return LogisticRegressionL2(cfg.C, cfg.tol, cfg.max_iter).fit(train.X, train.y)
