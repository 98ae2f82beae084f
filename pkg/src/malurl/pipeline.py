"""End-to-end run: ingest, split, preprocess, SMOTE, tune/train, evaluate, explain."""
from __future__ import annotations

import csv
import json
import logging
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import plotting
from .data_io import SplitSpec, generate_synthetic, load_csv, stratified_split, DEFAULT_MISSING_TOKENS
from .errors import ConfigError, DataError, MalurlError, TrainingError
from .explain import METHOD_NOTE, gain_importance, permutation_importance
from .metrics import SCORERS, evaluate, roc_curve
from .model_select import FoldPipeline, grid_search
from .modelfile import ModelFile, config_hash, dump_json
from .models import ESTIMATORS, TUNED_PARAMS, make_estimator
from .preprocess import fit_transform
from .resample import SmoteConfig, smote_balance

log = logging.getLogger(__name__)

CONFIG_VERSION = 1


@dataclass
class PipelineConfig:
    """Experiment definition; JSON form documented in the README.

    ``out`` and thread count are run settings and stay out of the hash.
    """

    model: str = "hgbc"
    data: str | None = None
    synthetic: dict | None = None
    seed: int = 0
    train_fraction: float = 0.75
    smote_k: int = 5
    smote_mode: str = "inside"
    params: dict | None = None
    grid: dict | None = None
    metric: str = "accuracy"
    folds: int = 5
    importance_repeats: int = 10
    compare: list = field(default_factory=list)
    has_header: bool = True
    missing_tokens: list = field(default_factory=lambda: list(DEFAULT_MISSING_TOKENS))
    out: str = "out"

    def validate(self):
        if (self.data is None) == (self.synthetic is None):
            raise ConfigError("give exactly one of 'data' and 'synthetic'")
        if (self.params is None) == (self.grid is None):
            raise ConfigError("give exactly one of 'params' (model config) and 'grid' (hypergrid)")
        for kind in [self.model, *self.compare]:
            if kind not in ESTIMATORS:
                raise ConfigError(f"unknown model kind {kind!r}; choose from {sorted(ESTIMATORS)}")
        if self.metric not in SCORERS:
            raise ConfigError(f"unknown metric {self.metric!r}; choose from {SCORERS}")
        if self.smote_mode not in ("inside", "outside"):
            raise ConfigError("smote_mode must be 'inside' or 'outside'")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError("train_fraction must lie in (0, 1)")
        if self.synthetic is not None:
            missing = {"n_rows", "imbalance_ratio"} - set(self.synthetic)
            if missing:
                raise ConfigError(f"synthetic spec lacks {sorted(missing)}")
        if self.data is not None and not Path(self.data).is_file():
            raise DataError(f"data file not found: {self.data}")
        return self

    def experiment(self):
        d = asdict(self)
        d.pop("out")
        d["version"] = CONFIG_VERSION
        return d

    @property
    def hash(self):
        return config_hash(self.experiment())

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        version = d.pop("version", CONFIG_VERSION)
        if version != CONFIG_VERSION:
            raise ConfigError(f"unsupported config version {version!r}")
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        return cls(**d).validate()

    @classmethod
    def from_file(cls, path):
        try:
            return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None


@contextmanager
def stage(name):
    try:
        yield
    except MalurlError as exc:
        raise type(exc)(f"[{name}] {exc}") from exc
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        raise TrainingError(f"[{name}] {type(exc).__name__}: {exc}") from exc


def write_csv_rows(path, header, rows, stamp):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# {stamp}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return Path(path)


def roc_rows(curve):
    return [(repr(float(f)), repr(float(t)), repr(float(th)) if np.isfinite(th) else "inf")
            for f, t, th in zip(curve.fpr, curve.tpr, curve.thresholds)]


@dataclass
class PipelineResult:
    report: object
    model_file: ModelFile
    search: object
    importance: object
    comparison: dict
    artifacts: list


def load_dataset(cfg):
    if cfg.data is not None:
        return load_csv(cfg.data, cfg.has_header, cfg.missing_tokens)
    syn = cfg.synthetic
    return generate_synthetic(int(syn["n_rows"]), float(syn["imbalance_ratio"]), int(syn.get("seed", cfg.seed)))


def train_model(kind, params, train, cfg, seed):
    """Fit transform on ``train``, balance with SMOTE, fit the estimator."""
    transform, train_t = fit_transform(train)
    balanced = smote_balance(train_t, SmoteConfig(cfg.smote_k, seed))
    est = make_estimator(kind, params, seed).fit(balanced.X, balanced.y)
    return transform, train_t, balanced, est


def tune(kind, grid, train, cfg):
    if cfg.smote_mode == "inside":
        return grid_search(kind, grid, train, cfg.folds, cfg.metric, cfg.seed,
                           FoldPipeline(preprocess=True, smote=SmoteConfig(cfg.smote_k, cfg.seed)))
    _, train_t = fit_transform(train)
    balanced = smote_balance(train_t, SmoteConfig(cfg.smote_k, cfg.seed))
    return grid_search(kind, grid, balanced, cfg.folds, cfg.metric, cfg.seed, FoldPipeline())


def run_pipeline(cfg, figures=True):
    """Run the whole experiment and write every artifact into ``cfg.out``.

    On failure the files written so far are removed and the error is
    re-raised with the stage name prefixed.
    """
    cfg.validate()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    chash = cfg.hash
    stamp = f"seed={cfg.seed} config_hash={chash}"
    written = []

    def keep(path):
        written.append(Path(path))
        return path

    try:
        with stage("ingest"):
            ds = load_dataset(cfg)
        with stage("split"):
            train, test = stratified_split(ds, SplitSpec(cfg.train_fraction, cfg.seed))
        search = None
        params = cfg.params
        if cfg.grid is not None:
            with stage("tune"):
                search = tune(cfg.model, cfg.grid, train, cfg)
                params = search.best_combination
            keep(write_csv_rows(out / "cv_table.csv", ("combo_id", "params", "fold", "score"),
                                search.csv_rows(), stamp))
            keep(dump_json({**search.to_dict(), "seed": cfg.seed, "config_hash": chash}, out / "search.json"))
        with stage("train"):
            transform, train_t, balanced, est = train_model(cfg.model, params, train, cfg, cfg.seed)
        keep(write_csv_rows(out / "class_counts.csv", ("stage", "class", "count"),
                            [(s, str(c), str(n)) for s, counts in
                             (("before_smote", train_t.class_counts()), ("after_smote", balanced.class_counts()))
                             for c, n in sorted(counts.items())], stamp))
        meta = {
            "seed": cfg.seed,
            "config": cfg.experiment(),
            "config_hash": chash,
            "dataset_fingerprint": ds.fingerprint(),
            "params": params,
            "smote": {"k_neighbors": cfg.smote_k, "seed": cfg.seed, "mode": cfg.smote_mode},
        }
        mf = ModelFile(cfg.model, transform, est, meta)
        keep(mf.save(out / "model.json"))

        with stage("evaluate"):
            test_t = transform.apply(test)
            proba = est.predict_proba(test_t.X)
            report = evaluate(test.y, proba)
            curve = roc_curve(test.y, proba)
        report_doc = {
            **report.to_dict(),
            "model": cfg.model,
            "params": params,
            "smote_mode": cfg.smote_mode,
            "seed": cfg.seed,
            "config_hash": chash,
            "dataset_fingerprint": ds.fingerprint(),
            "n_train": train.n_rows,
            "n_test": test.n_rows,
        }
        keep(dump_json(report_doc, out / "eval_report.json"))
        (out / "eval_table.txt").write_text(f"# {stamp}\n" + report.table(), encoding="utf-8")
        keep(out / "eval_table.txt")
        keep(write_csv_rows(out / "roc.csv", ("fpr", "tpr", "threshold"), roc_rows(curve), stamp))

        comparison = {}
        if cfg.compare:
            rows = []
            for kind in [cfg.model, *[k for k in cfg.compare if k != cfg.model]]:
                with stage(f"compare:{kind}"):
                    if kind == cfg.model:
                        r = report
                    else:
                        tf_k, _, _, est_k = train_model(kind, TUNED_PARAMS[kind], train, cfg, cfg.seed)
                        r = evaluate(test.y, est_k.predict_proba(tf_k.apply(test).X))
                comparison[kind] = r
                d = r.to_dict()
                rows.append((kind, *(repr(float(d[m])) for m in SCORERS)))
            keep(write_csv_rows(out / "comparison.csv", ("model", *SCORERS), rows, stamp))

        with stage("importance"):
            imp = permutation_importance(est, test_t.X, test.y, cfg.metric, cfg.importance_repeats, cfg.seed,
                                         ds.feature_names)
            gain = gain_importance(est.model_, ds.feature_names) if cfg.model == "hgbc" else None
        keep(write_csv_rows(out / "importance.csv", ("feature", "importance", "rank"), imp.csv_rows(),
                            f"{stamp} method=permutation repeats={imp.repeats} ({METHOD_NOTE})"))
        if gain is not None:
            keep(write_csv_rows(out / "gain_importance.csv", ("feature", "importance", "rank"), gain.csv_rows(),
                                f"{stamp} method=gain ({METHOD_NOTE})"))

        if figures:
            footer = f"config {chash}"
            keep(plotting.class_balance(train_t.class_counts(), balanced.class_counts(),
                                        out / "smote_counts.svg", footer))
            keep(plotting.roc(curve, report.auc, out / "roc.svg", cfg.model.upper(), footer))
            keep(plotting.importance(imp, out / "importance.svg", footer))
    except BaseException:
        for p in written:
            p.unlink(missing_ok=True)
        raise
    log.info("wrote %d artifacts to %s", len(written), out)
    return PipelineResult(report, mf, search, imp, comparison, written)
