"""Command-line front end.

Exit codes: 0 success, 2 config/schema error, 3 data error, 4 training error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import plotting
from .data_io import DEFAULT_MISSING_TOKENS, SplitSpec, generate_synthetic, load_csv, stratified_split, write_csv
from .errors import ConfigError, MalurlError
from .explain import METHOD_NOTE, gain_importance, permutation_importance
from .metrics import SCORERS, evaluate, roc_curve
from .model_select import load_default_grid
from .modelfile import ModelFile, config_hash, dump_json
from .models import ESTIMATORS, TUNED_PARAMS
from .parallel import set_threads
from .pipeline import PipelineConfig, roc_rows, run_pipeline, train_model, tune, write_csv_rows
from .preprocess import fit_transform
from .resample import SmoteConfig, smote_balance

log = logging.getLogger("malurl")


def _json_arg(value):
    """Inline JSON or a path to a JSON file."""
    p = Path(value)
    text = p.read_text(encoding="utf-8") if p.is_file() else value
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"not valid JSON (or a JSON file): {value!r}: {exc}") from None


def _grid_arg(value, kind):
    return load_default_grid(kind) if value == "default" else _json_arg(value)


def _load(args):
    tokens = args.missing_tokens.split(",") if args.missing_tokens is not None else DEFAULT_MISSING_TOKENS
    return load_csv(args.data, not args.no_header, tokens)


def _stamp(args, extra=None):
    settings = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out", "threads", "verbose")}
    if extra:
        settings.update(extra)
    return args.seed, config_hash(settings)


def _data_flags(p):
    p.add_argument("--data", required=True, help="input CSV")
    p.add_argument("--no-header", action="store_true", help="CSV has no header row")
    p.add_argument("--missing-tokens", default=None,
                   help="comma-separated missing-value tokens (default: empty,NA,NaN,None)")


def cmd_synth(args):
    ds = generate_synthetic(args.rows, args.ratio, args.seed)
    seed, h = _stamp(args)
    write_csv(ds, args.out, comment=f"seed={seed} config_hash={h}")
    print(json.dumps({"rows": ds.n_rows, "class_counts": ds.class_counts(), "out": str(args.out)}))


def cmd_ingest(args):
    ds = _load(args)
    summary = {
        "rows": ds.n_rows,
        "features": list(ds.feature_names),
        "class_counts": ds.class_counts(),
        "missing_cells": {n: int(c) for n, c in zip(ds.feature_names, ds.missing_mask.sum(axis=0)) if c},
        "fingerprint": ds.fingerprint(),
    }
    if args.out:
        write_csv(ds, args.out)
    print(json.dumps(summary, indent=1))


def cmd_split(args):
    ds = _load(args)
    train, test = stratified_split(ds, SplitSpec(args.train_fraction, args.seed))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seed, h = _stamp(args)
    write_csv(train, out / "train.csv", comment=f"seed={seed} config_hash={h}")
    write_csv(test, out / "test.csv", comment=f"seed={seed} config_hash={h}")
    print(json.dumps({"train": train.class_counts(), "test": test.class_counts()}))


def cmd_resample(args):
    ds = _load(args)
    before = ds
    if args.preprocess:
        _, ds = fit_transform(ds)
        before = ds
    out = smote_balance(ds, SmoteConfig(args.k_neighbors, args.seed))
    seed, h = _stamp(args)
    write_csv(out, args.out, comment=f"seed={seed} config_hash={h}")
    if args.figure:
        plotting.class_balance(before.class_counts(), out.class_counts(), args.figure, f"config {h}")
    print(json.dumps({"before": before.class_counts(), "after": out.class_counts()}))


def cmd_tune(args):
    train = _load(args)
    grid = _grid_arg(args.grid, args.model)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = PipelineConfig(model=args.model, data=args.data, seed=args.seed, smote_k=args.smote_k,
                         smote_mode=args.smote_mode, grid=grid, metric=args.metric, folds=args.folds)
    search = tune(args.model, grid, train, cfg)
    seed, h = _stamp(args, {"grid": grid})
    write_csv_rows(out / "cv_table.csv", ("combo_id", "params", "fold", "score"), search.csv_rows(),
                   f"seed={seed} config_hash={h}")
    dump_json({**search.to_dict(), "seed": seed, "config_hash": h}, out / "search.json")
    print(json.dumps({"best_combination": search.best_combination, "best_mean_score": search.best_mean_score}))


def cmd_train(args):
    train = _load(args)
    params = _json_arg(args.params) if args.params else dict(TUNED_PARAMS[args.model])
    cfg = PipelineConfig(model=args.model, data=args.data, seed=args.seed, smote_k=args.smote_k, params=params)
    transform, _, _, est = train_model(args.model, params, train, cfg, args.seed)
    seed, h = _stamp(args, {"params": params})
    meta = {"seed": seed, "config": {"model": args.model, "params": params, "smote_k": args.smote_k},
            "config_hash": h, "dataset_fingerprint": train.fingerprint(), "params": params}
    ModelFile(args.model, transform, est, meta).save(args.out)
    print(json.dumps({"model": args.model, "params": params, "out": str(args.out)}))


def _scored(args):
    mf = ModelFile.load(args.model_file)
    ds = _load(args)
    return mf, ds, mf.predict_proba(ds)


def cmd_evaluate(args):
    mf, ds, proba = _scored(args)
    report = evaluate(ds.y, proba)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    meta = mf.metadata
    dump_json({**report.to_dict(), "model": mf.kind, "seed": meta.get("seed"),
               "config_hash": meta.get("config_hash"), "dataset_fingerprint": ds.fingerprint()},
              out / "eval_report.json")
    table = report.table()
    (out / "eval_table.txt").write_text(f"# seed={meta.get('seed')} config_hash={meta.get('config_hash')}\n"
                                        + table, encoding="utf-8")
    print(table, end="")


def cmd_roc(args):
    mf, ds, proba = _scored(args)
    curve = roc_curve(ds.y, proba)
    report = evaluate(ds.y, proba)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stamp = f"seed={mf.metadata.get('seed')} config_hash={mf.metadata.get('config_hash')}"
    write_csv_rows(out / "roc.csv", ("fpr", "tpr", "threshold"), roc_rows(curve), stamp)
    if not args.no_figure:
        plotting.roc(curve, report.auc, out / "roc.svg", mf.kind.upper(), stamp)
    print(json.dumps({"auc": report.auc, "points": int(curve.fpr.size)}))


def cmd_importance(args):
    mf = ModelFile.load(args.model_file)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.method == "gain":
        if mf.kind != "hgbc":
            raise ConfigError("gain importance is only defined for hgbc models")
        rep = gain_importance(mf.estimator.model_, mf.feature_names)
    else:
        if not args.data:
            raise ConfigError("permutation importance needs --data")
        ds = _load(args)
        X = mf.transform.apply(ds).X
        rep = permutation_importance(mf.estimator, X, ds.y, args.metric, args.repeats, args.seed, mf.feature_names)
    stamp = (f"seed={mf.metadata.get('seed')} config_hash={mf.metadata.get('config_hash')} "
             f"method={rep.method} ({METHOD_NOTE})")
    write_csv_rows(out / "importance.csv", ("feature", "importance", "rank"), rep.csv_rows(), stamp)
    if not args.no_figure:
        plotting.importance(rep, out / "importance.svg", f"config {mf.metadata.get('config_hash')}")
    print(json.dumps({"method": rep.method, "top3": rep.top(3)}))


def cmd_pipeline(args):
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"cannot parse config {args.config}: {exc}") from None
        if args.out:
            d["out"] = args.out
        cfg = PipelineConfig.from_dict(d)
    else:
        if args.params and args.grid:
            raise ConfigError("give at most one of --params and --grid")
        synthetic = None
        if args.synthetic:
            try:
                n, r = args.synthetic.split(",")[:2]
                synthetic = {"n_rows": int(n), "imbalance_ratio": float(r), "seed": args.seed}
            except ValueError:
                raise ConfigError("--synthetic expects ROWS,RATIO") from None
        grid = _grid_arg(args.grid, args.model) if args.grid else None
        params = _json_arg(args.params) if args.params else (None if grid else dict(TUNED_PARAMS[args.model]))
        cfg = PipelineConfig(
            model=args.model, data=args.data, synthetic=synthetic, seed=args.seed,
            train_fraction=args.train_fraction, smote_k=args.smote_k, smote_mode=args.smote_mode,
            params=params, grid=grid, metric=args.metric, folds=args.folds,
            importance_repeats=args.repeats, compare=[c for c in (args.compare or "").split(",") if c],
            out=args.out or "out",
        ).validate()
    t0 = time.perf_counter()
    res = run_pipeline(cfg, figures=not args.no_figures)
    log.info("pipeline finished in %.1f s", time.perf_counter() - t0)
    print(res.report.table(), end="")
    if res.comparison:
        print()
        print(f"{'model':<6}" + "".join(f"{m:>20}" for m in SCORERS))
        for kind, r in res.comparison.items():
            d = r.to_dict()
            print(f"{kind:<6}" + "".join(f"{d[m]:>20.4f}" for m in SCORERS))
    print(f"\nartifacts in {cfg.out} (config_hash={cfg.hash})")


def build_parser():
    parser = argparse.ArgumentParser(prog="malurl", description=__doc__.splitlines()[0])
    parser.add_argument("--threads", type=int, default=1, help="worker threads (outputs do not depend on it)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    kinds = sorted(ESTIMATORS)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=argparse.SUPPRESS)
        return p

    p = add("synth", cmd_synth, "write a synthetic stand-in dataset")
    p.add_argument("--rows", type=int, default=1781)
    p.add_argument("--ratio", type=float, default=0.25, help="minority/majority ratio")
    p.add_argument("--out", required=True)

    p = add("ingest", cmd_ingest, "validate a CSV and summarise it")
    _data_flags(p)
    p.add_argument("--out", help="optional canonical CSV copy")

    p = add("split", cmd_split, "stratified train/test split")
    _data_flags(p)
    p.add_argument("--train-fraction", type=float, default=0.75)
    p.add_argument("--out", required=True, help="directory for train.csv and test.csv")

    p = add("resample", cmd_resample, "SMOTE-balance a training CSV")
    _data_flags(p)
    p.add_argument("--k-neighbors", type=int, default=5)
    p.add_argument("--preprocess", action="store_true", help="impute and scale before resampling")
    p.add_argument("--figure", help="write a before/after class-count figure here")
    p.add_argument("--out", required=True)

    p = add("tune", cmd_tune, "grid search with stratified k-fold CV")
    _data_flags(p)
    p.add_argument("--model", choices=kinds, default="hgbc")
    p.add_argument("--grid", default="default", help="JSON grid (inline or file) or 'default'")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--metric", choices=SCORERS, default="accuracy")
    p.add_argument("--smote-k", type=int, default=5)
    p.add_argument("--smote-mode", choices=("inside", "outside"), default="inside")
    p.add_argument("--out", required=True)

    p = add("train", cmd_train, "fit transform, SMOTE and a model; write the model file")
    _data_flags(p)
    p.add_argument("--model", choices=kinds, default="hgbc")
    p.add_argument("--params", help="JSON params (inline or file); default: grid-search settings")
    p.add_argument("--smote-k", type=int, default=5)
    p.add_argument("--out", required=True, help="model file path")

    for name, func, help_ in (("evaluate", cmd_evaluate, "metrics report for a model on a CSV"),
                              ("roc", cmd_roc, "ROC points (CSV) and figure")):
        p = add(name, func, help_)
        _data_flags(p)
        p.add_argument("--model-file", required=True)
        p.add_argument("--out", required=True)
        if name == "roc":
            p.add_argument("--no-figure", action="store_true")

    p = add("importance", cmd_importance, "feature attribution (permutation or gain)")
    p.add_argument("--data", help="input CSV (permutation method)")
    p.add_argument("--no-header", action="store_true")
    p.add_argument("--missing-tokens", default=None)
    p.add_argument("--model-file", required=True)
    p.add_argument("--method", choices=("permutation", "gain"), default="permutation")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--metric", choices=SCORERS, default="accuracy")
    p.add_argument("--no-figure", action="store_true")
    p.add_argument("--out", required=True)

    p = add("pipeline", cmd_pipeline, "run the full experiment")
    p.add_argument("--config", help="JSON pipeline config; other experiment flags are ignored")
    p.add_argument("--data")
    p.add_argument("--synthetic", help="ROWS,RATIO for a generated dataset instead of --data")
    p.add_argument("--model", choices=kinds, default="hgbc")
    p.add_argument("--params", help="JSON params (inline or file)")
    p.add_argument("--grid", help="JSON grid (inline or file) or 'default'")
    p.add_argument("--train-fraction", type=float, default=0.75)
    p.add_argument("--smote-k", type=int, default=5)
    p.add_argument("--smote-mode", choices=("inside", "outside"), default="inside")
    p.add_argument("--metric", choices=SCORERS, default="accuracy")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--repeats", type=int, default=10, help="permutation-importance repeats")
    p.add_argument("--compare", help="comma-separated extra model kinds trained with default settings")
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--out")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    set_threads(args.threads)
    try:
        args.func(args)
    except MalurlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
