"""Histogram gradient boosting for binary log-loss."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import ConfigError, FitError, ShapeError
from .binning import BinMapper, bin_apply, bin_fit
from .grower import Tree, grow_tree


@dataclass(frozen=True)
class HgbcConfig:
    learning_rate: float = 0.1
    max_iter: int = 200
    min_samples_leaf: int = 10
    max_bins: int = 256
    max_leaf_nodes: int = 31
    l2_regularization: float = 0.0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be positive")
        if self.max_iter < 0 or self.min_samples_leaf < 1:
            raise ConfigError("max_iter must be >= 0 and min_samples_leaf >= 1")
        if not 2 <= self.max_bins <= 256:
            raise ConfigError("max_bins must lie in [2, 256]")
        if self.max_leaf_nodes < 2:
            raise ConfigError("max_leaf_nodes must be at least 2")
        if self.l2_regularization < 0:
            raise ConfigError("l2_regularization must be non-negative")


def sigmoid(raw):
    raw = np.asarray(raw, dtype=np.float64)
    out = np.empty_like(raw)
    pos = raw >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-raw[pos]))
    e = np.exp(raw[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def logloss_grad_hess(raw, y):
    """Gradient and hessian of the binary log-loss w.r.t. the raw score."""
    p = sigmoid(raw)
    return p - y, p * (1.0 - p)


def logloss(raw, y):
    """Mean binary log-loss of raw scores, computed without overflow."""
    raw = np.asarray(raw, dtype=np.float64)
    return float(np.mean(np.logaddexp(0.0, raw) - y * raw))


@dataclass(frozen=True, eq=False)
class HgbcModel:
    base_score: float
    trees: list
    bin_mapper: BinMapper
    config: HgbcConfig
    metadata: dict = field(default_factory=dict)

    def raw_score(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.bin_mapper.n_features:
            raise ShapeError(f"expected {self.bin_mapper.n_features} columns, got shape {X.shape}")
        raw = np.full(X.shape[0], self.base_score)
        if not self.trees:
            return raw
        binned = bin_apply(self.bin_mapper, X)
        total = np.zeros(X.shape[0])
        for tree in self.trees:
            total += tree.predict_binned(binned)
        return raw + self.config.learning_rate * total

    def predict_proba(self, X):
        return sigmoid(self.raw_score(X))

    def predict(self, X):
        return (self.predict_proba(X) >= 0.5).astype(np.int64)

    def to_dict(self):
        return {
            "base_score": float(self.base_score),
            "config": asdict(self.config),
            "bin_mapper": self.bin_mapper.to_dict(),
            "trees": [t.to_dict() for t in self.trees],
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            float(d["base_score"]),
            [Tree.from_dict(t) for t in d["trees"]],
            BinMapper.from_dict(d["bin_mapper"]),
            HgbcConfig(**d["config"]),
            dict(d.get("metadata", {})),
        )


def fit_arrays(X, y, cfg=HgbcConfig(), seed=0, subtraction_log=None):
    """Boost ``cfg.max_iter`` trees on complete data ``X`` with labels ``y``.

    The model starts from the log-odds of the positive fraction. A
    single-class ``y`` yields a tree-less model whose base score is the
    log-odds capped at ``±ln((n - 0.5) / 0.5)``; ``metadata['degenerate']``
    is set.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[0] == 0:
        raise ShapeError(f"X {X.shape} and y {y.shape} do not describe the same non-empty rows")
    if np.isnan(X).any():
        raise FitError("HGBC requires complete data; impute first")
    n = X.shape[0]
    mapper = bin_fit(X, cfg.max_bins)
    n_pos = float(y.sum())
    meta = {"seed": int(seed), "n_train": int(n), "degenerate": False}
    if n_pos == 0 or n_pos == n:
        cap = math.log((n - 0.5) / 0.5) if n > 1 else math.log(3.0)
        meta["degenerate"] = True
        meta["loss_trace"] = []
        return HgbcModel(cap if n_pos else -cap, [], mapper, cfg, meta)

    base = math.log(n_pos / (n - n_pos))
    binned = bin_apply(mapper, X)
    n_bins = mapper.n_bins
    raw = np.full(n, base)
    trace = [logloss(raw, y)]
    trees = []
    for _ in range(cfg.max_iter):
        g, h = logloss_grad_hess(raw, y)
        tree, leaves = grow_tree(binned, n_bins, g, h, cfg.min_samples_leaf, cfg.max_leaf_nodes,
                                 cfg.l2_regularization, subtraction_log)
        for idx, v in leaves:
            raw[idx] += cfg.learning_rate * v
        trees.append(tree)
        trace.append(logloss(raw, y))
    meta["loss_trace"] = trace
    return HgbcModel(base, trees, mapper, cfg, meta)


def hgbc_fit(train, cfg=HgbcConfig(), seed=0, subtraction_log=None):
    """Fit on a preprocessed :class:`~malurl.data_io.Dataset`."""
    if train.missing_mask.any():
        raise FitError("HGBC requires complete data; impute first")
    return fit_arrays(train.X, train.y, cfg, seed, subtraction_log)


def hgbc_predict_proba(model, X):
    return model.predict_proba(X)


class HgbcClassifier:
    """Estimator wrapper used by grid search and the pipeline."""

    kind = "hgbc"

    def __init__(self, learning_rate=0.1, max_iter=200, min_samples_leaf=10, max_bins=256,
                 max_leaf_nodes=31, l2_regularization=0.0, seed=0):
        self.config = HgbcConfig(learning_rate, max_iter, min_samples_leaf, max_bins, max_leaf_nodes,
                                 l2_regularization)
        self.seed = seed
        self.model_ = None

    def fit(self, X, y):
        self.model_ = fit_arrays(X, y, self.config, self.seed)
        return self

    def predict_proba(self, X):
        return self.model_.predict_proba(X)

    def predict(self, X):
        return self.model_.predict(X)

    def to_dict(self):
        return self.model_.to_dict()

    @classmethod
    def from_dict(cls, d):
        model = HgbcModel.from_dict(d)
        est = cls(**asdict(model.config), seed=model.metadata.get("seed", 0))
        est.model_ = model
        return est
