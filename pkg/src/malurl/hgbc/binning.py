"""Feature discretisation for the boosting core."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import FitError, ShapeError


@dataclass(frozen=True, eq=False)
class BinMapper:
    """Per-feature strictly increasing bin edges.

    A value ``x`` falls in bin ``#{edges <= x}``: a value exactly on an edge
    goes to the upper of the two adjacent bins, and values outside the
    training range clamp to the first or last bin.
    """

    edges: tuple

    @property
    def n_features(self):
        return len(self.edges)

    @property
    def n_bins(self):
        return np.array([e.size + 1 for e in self.edges], dtype=np.int64)

    def to_dict(self):
        return {"edges": [[float(v) for v in e] for e in self.edges]}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(np.array(e, dtype=np.float64) for e in d["edges"]))


def _feature_edges(col, max_bins):
    distinct = np.unique(col)
    if distinct.size <= max_bins:
        return (distinct[:-1] + distinct[1:]) / 2.0
    qs = np.arange(1, max_bins) / max_bins
    return np.unique(np.quantile(col, qs, method="linear"))


def bin_fit(X, max_bins=256):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise FitError("cannot fit bins on an empty matrix")
    if not 2 <= max_bins <= 256:
        raise FitError(f"max_bins must lie in [2, 256], got {max_bins}")
    if np.isnan(X).any():
        raise FitError("binning requires complete data; impute first")
    return BinMapper(tuple(_feature_edges(X[:, j], max_bins) for j in range(X.shape[1])))


def bin_apply(mapper, X):
    """Map ``X`` to a column-major uint8 matrix of bin indices."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != mapper.n_features:
        raise ShapeError(f"expected {mapper.n_features} columns, got shape {X.shape}")
    out = np.empty(X.shape, dtype=np.uint8, order="F")
    for j, edges in enumerate(mapper.edges):
        out[:, j] = np.searchsorted(edges, X[:, j], side="right")
    return out
