"""Persisted model format (JSON text).

Layout::

    {
      "format_version": 1,
      "kind": "hgbc" | "knn" | "lr" | "dt" | "rf",
      "feature_names": [...13 names...],
      "transform": {"imputer": {...}, "scaler": {...}},
      "model": {...kind-specific payload...},
      "metadata": {"seed": ..., "config": {...}, "config_hash": ..., "dataset_fingerprint": ...}
    }

Floats are written with ``repr`` precision, so a reloaded model predicts
bit-identically.
"""
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .data_io import FEATURE_NAMES
from .errors import SchemaError
from .models import estimator_from_dict
from .preprocess import TransformModel

FORMAT_VERSION = 1


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(obj):
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()[:16]


def dump_json(obj, path):
    path = Path(path)
    path.write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    return path


@dataclass
class ModelFile:
    kind: str
    transform: TransformModel
    estimator: object
    metadata: dict = field(default_factory=dict)
    feature_names: tuple = FEATURE_NAMES

    def predict_proba(self, ds):
        """Class-1 probabilities for a raw (untransformed) dataset."""
        return self.estimator.predict_proba(self.transform.apply(ds).X)

    def to_dict(self):
        return {
            "format_version": FORMAT_VERSION,
            "kind": self.kind,
            "feature_names": list(self.feature_names),
            "transform": self.transform.to_dict(self.feature_names),
            "model": self.estimator.to_dict(),
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("format_version") != FORMAT_VERSION:
            raise SchemaError(f"unsupported model file version {d.get('format_version')!r}")
        names = tuple(d["feature_names"])
        return cls(
            d["kind"],
            TransformModel.from_dict(d["transform"], names),
            estimator_from_dict(d["kind"], d["model"]),
            dict(d.get("metadata", {})),
            names,
        )

    def save(self, path):
        return dump_json(self.to_dict(), path)

    @classmethod
    def load(cls, path):
        try:
            d = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise SchemaError(f"cannot read model file {path}: {exc}") from None
        return cls.from_dict(d)
