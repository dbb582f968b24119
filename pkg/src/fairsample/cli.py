"""Command-line frontend: metrics, sweep, decompose, and synth subcommands.

Each run is driven by a single JSON config file; --seed, --out, and
--threads override the corresponding config entries.  Exit codes: 0
success, 2 configuration error, 3 data error, 4 internal invariant
violation.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import os
import sys
from datetime import datetime, timezone

from . import __version__
from .dataset import Schema, holdout_split, load_csv, population_ratio
from .errors import ConfigError, DataError, FairsampleError
from .experiments import (SweepSpec, run_collect_sim, run_decomposition_sweep,
                          run_ssb_sweep, run_urb_sweep)
from .group_metrics import disc_vector
from .learners import Learner, fit
from .synth import SynthSpec, generate, write_csv


def _take(raw, allowed, context):
    unknown = set(raw) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown {context} keys: {sorted(unknown)}")
    return raw


def _load_config(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc


_TOP_KEYS = ("dataset", "learner", "metrics", "sweep", "seed", "threads",
             "output_dir", "test_fraction")


def _build_learner(raw):
    raw = dict(raw or {})
    fields = {f.name for f in dataclasses.fields(Learner)}
    _take(raw, fields, "learner")
    return Learner(**raw)


def _build_dataset(raw, seed):
    """Returns (dataset, sha256 of the source, descriptor)."""
    if raw is None:
        raise ConfigError("config requires a 'dataset' section")
    _take(raw, ("csv", "schema", "synth"), "dataset")
    if "synth" in raw:
        if "csv" in raw or "schema" in raw:
            raise ConfigError("dataset: give either csv+schema or synth")
        sraw = dict(raw["synth"])
        fields = {f.name for f in dataclasses.fields(SynthSpec)}
        _take(sraw, fields, "dataset.synth")
        for key in ("mean_shift", "coef"):
            if key in sraw:
                sraw[key] = tuple(sraw[key])
        sraw.setdefault("seed", seed)
        ds = generate(SynthSpec(**sraw))
        return ds, ds.fingerprint(), "synth"
    if "csv" not in raw or "schema" not in raw:
        raise ConfigError("dataset requires both 'csv' and 'schema' paths")
    try:
        schema = Schema.from_json(raw["schema"])
    except OSError as exc:
        raise ConfigError(f"cannot read schema {raw['schema']}: {exc}") \
            from exc
    if not os.path.exists(raw["csv"]):
        raise DataError(f"dataset file not found: {raw['csv']}")
    ds = load_csv(raw["csv"], schema)
    with open(raw["csv"], "rb") as fh:
        sha = hashlib.sha256(fh.read()).hexdigest()
    return ds, sha, raw["csv"]


def _build_sweep_spec(raw, learner, metrics, seed, threads, family=None):
    raw = dict(raw or {})
    fields = {f.name for f in dataclasses.fields(SweepSpec)}
    _take(raw, fields - {"learner", "metrics", "threads"}, "sweep")
    if family is not None:
        raw["family"] = family
    if "family" not in raw:
        raise ConfigError("sweep config requires 'family'")
    if "grid" in raw:
        raw["grid"] = tuple(raw["grid"])
    raw.setdefault("seed", seed)
    return SweepSpec(learner=learner, metrics=tuple(metrics or ()),
                     threads=threads, **raw)


def _write_manifest(path, config, seed, dataset_sha, pop_ratio,
                    rows_written):
    manifest = {
        "config": config,
        "seed": seed,
        "dataset_sha256": dataset_sha,
        "version": __version__,
        "started_at": datetime.now(timezone.utc).isoformat(),
        "population_ratio": pop_ratio,
        "rows_written": rows_written,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _prepare(args):
    config = _load_config(args.config)
    _take(config, _TOP_KEYS, "config")
    seed = args.seed if args.seed is not None else int(config.get("seed", 0))
    threads = args.threads if args.threads is not None \
        else int(config.get("threads", 1))
    out_dir = args.out or config.get("output_dir", ".")
    os.makedirs(out_dir, exist_ok=True)
    return config, seed, threads, out_dir


_RUNNERS = {
    "ssb_size": run_ssb_sweep,
    "urb_ratio": run_urb_sweep,
    "decomposition": run_decomposition_sweep,
    "collect": run_collect_sim,
}


def cmd_metrics(args):
    config, seed, _threads, out_dir = _prepare(args)
    ds, sha, _src = _build_dataset(config.get("dataset"), seed)
    learner = _build_learner(config.get("learner"))
    metrics = config.get("metrics") or (
        ["MSE"] if ds.task == "regression"
        else ["FPR", "FNR", "EO", "ZOL", "SD", "AUC"])
    test_fraction = float(config.get("test_fraction", 0.3))
    pool, test = holdout_split(ds, test_fraction, seed)
    model = fit(learner, pool)
    scores, labels = model.predict(test.X)
    reports = disc_vector(test.y, labels, scores, test.a, metrics)
    csv_path = os.path.join(out_dir, "metrics.csv")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["metric", "value_a0", "value_a1", "disc"])
        for rep in reports:
            v0, v1, d = rep.as_floats()
            fmt = lambda v: "" if v is None else repr(v)
            w.writerow([rep.metric, fmt(v0), fmt(v1), fmt(d)])
    _write_manifest(os.path.join(out_dir, "manifest.json"), config, seed,
                    sha, population_ratio(ds), len(reports))
    return 0


def _run_sweep_family(args, family=None):
    config, seed, threads, out_dir = _prepare(args)
    ds, sha, _src = _build_dataset(config.get("dataset"), seed)
    learner = _build_learner(config.get("learner"))
    spec = _build_sweep_spec(config.get("sweep"), learner,
                             config.get("metrics"), seed, threads, family)
    result = _RUNNERS[spec.family](ds, spec)
    rows = result.write_csv(os.path.join(out_dir, "sweep.csv"))
    if result.bias_rows:
        result.write_bias_csv(os.path.join(out_dir, "bias_estimates.csv"))
    _write_manifest(os.path.join(out_dir, "manifest.json"), config, seed,
                    sha, result.population_ratio, rows)
    return 0


def cmd_sweep(args):
    return _run_sweep_family(args)


def cmd_decompose(args):
    return _run_sweep_family(args, family="decomposition")


def cmd_synth(args):
    config, seed, _threads, out_dir = _prepare(args)
    raw = config.get("dataset") or {}
    _take(raw, ("synth",), "dataset")
    if "synth" not in raw:
        raise ConfigError("synth command requires dataset.synth")
    ds, sha, _src = _build_dataset(raw, seed)
    csv_path = os.path.join(out_dir, "data.csv")
    schema_path = os.path.join(out_dir, "schema.json")
    write_csv(ds, csv_path, schema_path)
    _write_manifest(os.path.join(out_dir, "manifest.json"), config, seed,
                    sha, population_ratio(ds), ds.n)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fairsample",
        description="Measure how sample size and group underrepresentation "
                    "bias fairness conclusions of trained models.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, help_text in (
            ("metrics", cmd_metrics,
             "train one model and report per-group costs"),
            ("sweep", cmd_sweep, "run an experiment sweep family"),
            ("decompose", cmd_decompose,
             "run a bias/variance decomposition sweep"),
            ("synth", cmd_synth,
             "generate a synthetic dataset CSV + schema")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True,
                       help="path to the JSON run config")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--out", default=None,
                       help="override the config output directory")
        p.add_argument("--threads", type=int, default=None,
                       help="worker count (results identical for any value)")
        p.set_defaults(fn=fn)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except FairsampleError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
