"""Mean imputation followed by median/IQR scaling.

Both transforms are fitted on training rows only and then applied to any
split. Order matters: :func:`scale_fit` refuses data that still carries
missing cells.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FitError


@dataclass(frozen=True, eq=False)
class ImputerModel:
    column_means: np.ndarray

    def to_dict(self, feature_names):
        return {"column_means": dict(zip(feature_names, map(float, self.column_means)))}

    @classmethod
    def from_dict(cls, d, feature_names):
        return cls(np.array([d["column_means"][n] for n in feature_names], dtype=np.float64))


@dataclass(frozen=True, eq=False)
class ScalerModel:
    medians: np.ndarray
    iqrs: np.ndarray

    @property
    def divisors(self):
        return np.where(self.iqrs > 0, self.iqrs, 1.0)

    def to_dict(self, feature_names):
        return {
            "medians": dict(zip(feature_names, map(float, self.medians))),
            "iqrs": dict(zip(feature_names, map(float, self.iqrs))),
        }

    @classmethod
    def from_dict(cls, d, feature_names):
        return cls(
            np.array([d["medians"][n] for n in feature_names], dtype=np.float64),
            np.array([d["iqrs"][n] for n in feature_names], dtype=np.float64),
        )


def impute_fit(train):
    present = ~train.missing_mask
    counts = present.sum(axis=0)
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        raise FitError(f"cannot impute column {train.feature_names[empty[0]]!r}: no non-missing training values")
    sums = np.where(present, train.X, 0.0).sum(axis=0)
    return ImputerModel(sums / counts)


def impute_apply(model, ds):
    X = np.where(ds.missing_mask, model.column_means[None, :], ds.X)
    return ds.replace(X=X, missing_mask=np.zeros_like(ds.missing_mask))


def scale_fit(train):
    """Per-column median and interquartile range.

    Quantiles interpolate linearly between order statistics at position
    ``p * (n - 1)``.
    """
    if train.missing_mask.any():
        raise FitError("scaler fitted on data with missing cells; impute before scale")
    if train.n_rows == 0:
        raise FitError("scaler fitted on an empty dataset")
    q1, med, q3 = np.quantile(train.X, [0.25, 0.5, 0.75], axis=0, method="linear")
    return ScalerModel(med, np.maximum(q3 - q1, 0.0))


def scale_apply(model, ds):
    return ds.replace(X=(ds.X - model.medians) / model.divisors)


def scale_inverse(model, X):
    return X * model.divisors + model.medians


@dataclass(frozen=True, eq=False)
class TransformModel:
    """Fitted imputer + scaler, applied in that order."""

    imputer: ImputerModel
    scaler: ScalerModel

    def apply(self, ds):
        return scale_apply(self.scaler, impute_apply(self.imputer, ds))

    def to_dict(self, feature_names):
        return {"imputer": self.imputer.to_dict(feature_names), "scaler": self.scaler.to_dict(feature_names)}

    @classmethod
    def from_dict(cls, d, feature_names):
        return cls(ImputerModel.from_dict(d["imputer"], feature_names), ScalerModel.from_dict(d["scaler"], feature_names))


def fit_transform(train):
    """Fit both stages on ``train``; return the model and transformed train."""
    imputer = impute_fit(train)
    imputed = impute_apply(imputer, train)
    scaler = scale_fit(imputed)
    return TransformModel(imputer, scaler), scale_apply(scaler, imputed)
