"""SMOTE oversampling of the minority class.

Random draws come from ``numpy.random.default_rng(seed)`` (PCG64) in a fixed
order: all base-row indices, then all neighbour picks, then all
interpolation coefficients. Neighbour search is exact and brute force;
equidistant neighbours are ordered by row index.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ResampleError


@dataclass(frozen=True)
class SmoteConfig:
    k_neighbors: int = 5
    seed: int = 0


def minority_neighbors(X_min, k):
    """Indices of the ``k`` nearest other minority rows, shape (m, k)."""
    m = X_min.shape[0]
    out = np.empty((m, k), dtype=np.int64)
    for i in range(m):
        dist = np.sqrt(((X_min - X_min[i]) ** 2).sum(axis=1))
        dist[i] = np.inf
        out[i] = np.argsort(dist, kind="stable")[:k]
    return out


def interpolate(X_min, neighbors, bases, picks, lambdas):
    """Synthetic rows ``x_b + lam * (x_nn - x_b)``."""
    base = X_min[bases]
    nn = X_min[neighbors[bases, picks]]
    return base + lambdas[:, None] * (nn - base)


def smote_balance(train, cfg=SmoteConfig(), return_provenance=False):
    """Append synthetic minority rows until both classes have equal counts.

    Parameters
    ----------
    train : Dataset
        Imputed and scaled training rows.
    cfg : SmoteConfig
    return_provenance : bool
        Also return ``(base_rows, neighbor_rows, lambdas)`` as indices into
        ``train`` for every synthetic row.

    Returns
    -------
    Dataset
        Original rows in their original order followed by the synthetic ones.
    """
    if train.missing_mask.any():
        raise ResampleError("SMOTE requires imputed data")
    counts = train.class_counts()
    if min(counts.values()) == 0:
        raise ResampleError("SMOTE needs both classes present")
    if counts[0] == counts[1]:
        empty = np.empty(0, dtype=np.int64)
        return (train, (empty, empty, np.empty(0))) if return_provenance else train
    minority = 0 if counts[0] < counts[1] else 1
    m, deficit = counts[minority], abs(counts[1] - counts[0])
    if m < 2:
        raise ResampleError(f"minority class has {m} row(s); SMOTE needs at least 2")
    k = cfg.k_neighbors
    if not 1 <= k <= m - 1:
        raise ConfigError(f"k_neighbors={k} outside [1, {m - 1}] for {m} minority rows")

    min_rows = np.flatnonzero(train.y == minority)
    X_min = train.X[min_rows]
    neighbors = minority_neighbors(X_min, k)

    rng = np.random.default_rng(cfg.seed)
    bases = rng.integers(0, m, size=deficit)
    picks = rng.integers(0, k, size=deficit)
    lambdas = rng.random(deficit)
    synth = interpolate(X_min, neighbors, bases, picks, lambdas)

    out = train.replace(
        X=np.vstack([train.X, synth]),
        missing_mask=np.zeros((train.n_rows + deficit, train.X.shape[1]), dtype=bool),
        y=np.concatenate([train.y, np.full(deficit, minority, dtype=np.int64)]),
    )
    if return_provenance:
        return out, (min_rows[bases], min_rows[neighbors[bases, picks]], lambdas)
    return out
