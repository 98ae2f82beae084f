"""Model-kind registry and the grid-search-selected settings for each kind."""
from .baselines import DecisionTreeEntropy, KnnClassifier, LogisticRegressionL2, RandomForestEntropy
from .errors import ConfigError
from .hgbc import HgbcClassifier

ESTIMATORS = {
    "hgbc": HgbcClassifier,
    "knn": KnnClassifier,
    "lr": LogisticRegressionL2,
    "dt": DecisionTreeEntropy,
    "rf": RandomForestEntropy,
}

TUNED_PARAMS = {
    "hgbc": {"learning_rate": 0.1, "max_iter": 200, "min_samples_leaf": 10},
    "knn": {"n_neighbors": 7, "weights": "distance"},
    "lr": {"C": 10.0, "tol": 0.1, "max_iter": 1000},
    "dt": {"max_features": "log2", "min_samples_leaf": 15, "min_samples_split": 15},
    "rf": {"max_features": "sqrt", "min_samples_leaf": 1, "min_samples_split": 2, "n_estimators": 100},
}

_SEEDED = {"hgbc", "dt", "rf"}


def make_estimator(kind, params=None, seed=0):
    if kind not in ESTIMATORS:
        raise ConfigError(f"unknown model kind {kind!r}; choose from {sorted(ESTIMATORS)}")
    params = dict(params or {})
    if kind in ("dt", "rf") and params.pop("criterion", "entropy") != "entropy":
        raise ConfigError("trees support only criterion='entropy'")
    if kind in _SEEDED:
        params.setdefault("seed", seed)
    try:
        return ESTIMATORS[kind](**params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {kind}: {exc}") from None


def estimator_from_dict(kind, payload):
    if kind not in ESTIMATORS:
        raise ConfigError(f"unknown model kind {kind!r}")
    return ESTIMATORS[kind].from_dict(payload)
