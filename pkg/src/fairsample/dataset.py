"""Tabular data ingestion, encoding, and seeded group-controlled sampling."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError

NUMERIC = "numeric"
CATEGORICAL = "categorical"
CLASSIFICATION = "classification"
REGRESSION = "regression"


@dataclass(frozen=True)
class Schema:
    """Column roles for a CSV file.

    The privileged sensitive value is mapped to group a0; the other value
    becomes the protected group a1.  For classification the positive label
    is mapped to outcome 1.
    """

    target: str
    sensitive: str
    privileged_value: str
    features: tuple  # of (name, kind) pairs
    positive_label: str = ""
    task: str = CLASSIFICATION

    def __post_init__(self):
        if self.task not in (CLASSIFICATION, REGRESSION):
            raise ConfigError(f"unknown task {self.task!r}")
        if self.target == self.sensitive:
            raise ConfigError("target and sensitive columns must be distinct")
        names = [n for n, _ in self.features]
        if len(set(names)) != len(names):
            raise ConfigError("duplicate feature column")
        for col in (self.target, self.sensitive):
            if col in names:
                raise ConfigError(f"column {col!r} cannot also be a feature")
        for name, kind in self.features:
            if kind not in (NUMERIC, CATEGORICAL):
                raise ConfigError(f"feature {name!r} has unknown kind {kind!r}")
        if self.task == CLASSIFICATION and not self.positive_label:
            raise ConfigError("classification schema requires positive_label")

    @classmethod
    def from_json(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        allowed = {"target", "positive_label", "sensitive", "privileged_value",
                   "features", "task"}
        unknown = set(raw) - allowed
        if unknown:
            raise ConfigError(f"unknown schema keys: {sorted(unknown)}")
        try:
            features = tuple((f["name"], f["kind"]) for f in raw["features"])
            return cls(
                target=raw["target"],
                sensitive=raw["sensitive"],
                privileged_value=str(raw["privileged_value"]),
                features=features,
                positive_label=str(raw.get("positive_label", "")),
                task=raw.get("task", CLASSIFICATION),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed schema: {exc}") from exc

    def to_json_dict(self):
        return {
            "target": self.target,
            "positive_label": self.positive_label,
            "sensitive": self.sensitive,
            "privileged_value": self.privileged_value,
            "features": [{"name": n, "kind": k} for n, k in self.features],
            "task": self.task,
        }


@dataclass(frozen=True)
class Dataset:
    """Encoded feature matrix with aligned outcome and group vectors.

    Immutable after construction; all sampling operations return new
    Dataset views referencing the original row indices.
    """

    X: np.ndarray
    y: np.ndarray
    a: np.ndarray
    row_ids: np.ndarray
    feature_names: tuple = ()
    task: str = CLASSIFICATION

    def __post_init__(self):
        n = self.X.shape[0]
        if not (len(self.y) == len(self.a) == len(self.row_ids) == n):
            raise DataError("misaligned dataset vectors")
        if not np.all(np.isfinite(self.X)):
            raise DataError("non-finite value in encoded feature matrix")

    @property
    def n(self):
        return self.X.shape[0]

    def group_indices(self, group):
        return np.flatnonzero(self.a == group)

    def subset(self, idx):
        idx = np.asarray(idx)
        return Dataset(self.X[idx], self.y[idx], self.a[idx],
                       self.row_ids[idx], self.feature_names, self.task)

    def fingerprint(self):
        import hashlib
        h = hashlib.sha256()
        for arr in (self.X, self.y.astype(float), self.a.astype(float),
                    self.row_ids.astype(np.int64)):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class SamplingPlan:
    """Exact per-group sample counts for K seeded replicate draws."""

    m0: int
    m1: int
    replicates: int
    seed: int
    with_replacement: bool = False

    def __post_init__(self):
        if self.m0 < 0 or self.m1 < 0:
            raise ConfigError("negative group count in sampling plan")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")

    @property
    def m(self):
        return self.m0 + self.m1


def load_csv(path, schema):
    """Load and encode a CSV file per the schema.

    Categorical features are one-hot encoded with one indicator per level;
    numeric features are standardized over the full file.  Target and
    sensitive columns are mapped to {0,1}.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file")
        rows = [r for r in reader if r]

    col = {name: i for i, name in enumerate(header)}
    needed = [schema.target, schema.sensitive] + [n for n, _ in schema.features]
    for name in needed:
        if name not in col:
            raise DataError(f"missing column {name!r}")
    if not rows:
        raise DataError(f"{path}: no data rows")

    def column(name):
        i = col[name]
        out = []
        for r, row in enumerate(rows):
            v = row[i].strip()
            if v == "":
                raise DataError(f"missing value in column {name!r}, row {r + 1}")
            out.append(v)
        return out

    # sensitive -> group vector
    svals = column(schema.sensitive)
    levels = sorted(set(svals))
    if len(levels) != 2:
        raise DataError(
            f"sensitive not binary: column {schema.sensitive!r} has "
            f"{len(levels)} distinct values {levels[:5]}")
    if schema.privileged_value not in levels:
        raise DataError(
            f"privileged value {schema.privileged_value!r} not present in "
            f"column {schema.sensitive!r}")
    a = np.array([0 if v == schema.privileged_value else 1 for v in svals])

    # target
    tvals = column(schema.target)
    if schema.task == CLASSIFICATION:
        tlevels = sorted(set(tvals))
        if len(tlevels) != 2:
            raise DataError(
                f"target not binary: {len(tlevels)} distinct values")
        if schema.positive_label not in tlevels:
            raise DataError(
                f"positive label {schema.positive_label!r} not present in "
                f"column {schema.target!r}")
        y = np.array([1.0 if v == schema.positive_label else 0.0 for v in tvals])
    else:
        y = np.array([_parse_float(v, schema.target, r)
                      for r, v in enumerate(tvals)])

    # features
    blocks = []
    names = []
    for name, kind in schema.features:
        vals = column(name)
        if kind == NUMERIC:
            x = np.array([_parse_float(v, name, r) for r, v in enumerate(vals)])
            mu = x.mean()
            sd = x.std(ddof=1) if len(x) > 1 else 0.0
            if sd > 0:
                x = (x - mu) / sd
            else:
                x = np.zeros_like(x)
            blocks.append(x[:, None])
            names.append(name)
        else:
            flevels = sorted(set(vals))
            idx = {lv: j for j, lv in enumerate(flevels)}
            onehot = np.zeros((len(vals), len(flevels)))
            for r, v in enumerate(vals):
                onehot[r, idx[v]] = 1.0
            blocks.append(onehot)
            names.extend(f"{name}={lv}" for lv in flevels)

    if not blocks:
        raise DataError("schema declares no feature columns")
    X = np.hstack(blocks)

    for group in (0, 1):
        if not np.any(a == group):
            raise DataError(f"empty group: no rows with group a{group}")

    return Dataset(X, y, a, np.arange(len(rows)), tuple(names), schema.task)


def _parse_float(v, name, row):
    try:
        x = float(v)
    except ValueError:
        raise DataError(
            f"unparsable numeric cell {v!r} in column {name!r}, row {row + 1}")
    if not np.isfinite(x):
        raise DataError(f"non-finite value in column {name!r}, row {row + 1}")
    return x


def population_ratio(ds):
    """Protected-group share |G1| / n, the reference split for URB."""
    return float(np.count_nonzero(ds.a == 1)) / ds.n


def draw_sample(ds, plan, replicate_index):
    """Draw one replicate with exactly (m0, m1) rows per group.

    Pure function of (ds, plan, replicate_index): the RNG stream is derived
    from (plan.seed, replicate_index) only, so draws are reproducible and
    independent of call order or parallel schedule.
    """
    if replicate_index >= plan.replicates:
        raise ConfigError(
            f"replicate_index {replicate_index} >= plan.replicates "
            f"{plan.replicates}")
    rng = np.random.default_rng(
        np.random.SeedSequence((plan.seed, replicate_index)))
    picked = []
    for group, want in ((0, plan.m0), (1, plan.m1)):
        pool = ds.group_indices(group)
        if want == 0:
            continue
        if not plan.with_replacement and want > len(pool):
            raise DataError(
                f"group pool exhausted: need {want} rows from group "
                f"a{group}, pool has {len(pool)}")
        picked.append(rng.choice(pool, size=want,
                                 replace=plan.with_replacement))
    idx = np.sort(np.concatenate(picked)) if picked else np.array([], dtype=int)
    return ds.subset(idx)


def holdout_split(ds, test_fraction, seed):
    """Stratified split into (train_pool, test), deterministic per seed.

    Classification stratifies jointly on (group, label); regression on
    group only.  Every stratum needs at least 2 rows.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ConfigError("test_fraction must be in (0, 1)")
    if ds.task == CLASSIFICATION:
        keys = [(int(g), int(l)) for g, l in zip(ds.a, ds.y)]
    else:
        keys = [(int(g),) for g in ds.a]
    strata = {}
    for i, k in enumerate(keys):
        strata.setdefault(k, []).append(i)

    rng = np.random.default_rng(np.random.SeedSequence((seed, 0x5B117)))
    test_idx = []
    train_idx = []
    for key in sorted(strata):
        members = np.array(strata[key])
        if len(members) < 2:
            raise DataError(f"stratum {key} has fewer than 2 rows")
        n_test = int(round(test_fraction * len(members)))
        n_test = min(max(n_test, 1), len(members) - 1)
        perm = rng.permutation(len(members))
        test_idx.extend(members[perm[:n_test]])
        train_idx.extend(members[perm[n_test:]])
    return ds.subset(sorted(train_idx)), ds.subset(sorted(test_idx))
