"""Survey-table schema, CSV ingestion, cleaning, scaling, splitting and a
synthetic stand-in for household travel survey extracts."""
import csv
from dataclasses import dataclass, field
import io
import logging
import math
import os
import re

import numpy as np

from .errors import (ArgumentError, DegenerateFeatureError, FormatError, SchemaError)
from .numerics import Rng

log = logging.getLogger(__name__)

FEATURES = (
    "hh_veh_0",            # households with no vehicle
    "hh_veh_1",            # ... one vehicle
    "hh_veh_2p",           # ... two or more vehicles
    "workers_1",           # households with one worker
    "workers_2p",          # ... two or more workers
    "total_pop",           # community population (ACS five-year)
    "lc_child_u18",        # life cycle: children under 18
    "lc_1p_u65",           # life cycle: one person, under 65
    "lc_2p_u65",           # life cycle: two or more persons, all under 65
    "lc_1p_65p",           # life cycle: one person, 65 or older
    "lc_2p_65p",           # life cycle: two or more persons, at least one 65+
    "pop_group_quarters",  # population in group quarters
    "hh_count",            # household member count
    "hh_income",           # income category code
    "cluster",             # census region/division code (1-6)
    "urban_group",         # urbanicity code (1-3)
)
TARGETS = ("person_trips", "vehicle_trips")

# Columns whose absence the survey processing explicitly deletes on; tracked
# separately in CleanReport. Cleaning itself drops on any schema column.
REQUIRED_COLUMNS = ("urban_group", "person_trips", "vehicle_trips", "hh_count", "hh_income")


@dataclass(frozen=True)
class FeatureSchema:
    features: tuple = FEATURES
    targets: tuple = TARGETS

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        object.__setattr__(self, "targets", tuple(self.targets))
        if len(self.features) != 16:
            raise SchemaError(f"schema needs exactly 16 feature columns, got {len(self.features)}")
        names = self.features + self.targets
        if len(set(names)) != len(names):
            raise SchemaError("schema column names must be unique")

    @property
    def columns(self):
        return self.features + self.targets


NHTS_SCHEMA = FeatureSchema()


@dataclass(frozen=True)
class RawTable:
    """Parsed CSV. ``values`` is rows x header; NaN marks an absent cell."""
    header: tuple
    values: np.ndarray
    source: str = "<memory>"

    def __post_init__(self):
        object.__setattr__(self, "header", tuple(self.header))
        v = np.asarray(self.values, dtype=np.float64).reshape(-1, len(self.header))
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def n_rows(self):
        return self.values.shape[0]

    def column(self, name):
        try:
            return self.values[:, self.header.index(name)]
        except ValueError:
            raise SchemaError(f"column {name!r} not in table header") from None

    def cell(self, row, name):
        x = self.column(name)[row]
        return None if math.isnan(x) else float(x)

    def absent_counts(self):
        return {name: int(c) for name, c in zip(self.header, np.isnan(self.values).sum(axis=0))}

    def to_csv(self, feature_ints=False):
        """Render as CSV text. Floats use shortest round-trip repr."""
        out = io.StringIO()
        out.write(",".join(self.header) + "\n")
        int_cols = set(FEATURES) if feature_ints else set()
        fmt = [(_fmt_int if name in int_cols else _fmt_float) for name in self.header]
        for row in self.values:
            out.write(",".join(f(x) for f, x in zip(fmt, row)) + "\n")
        return out.getvalue()


def _fmt_float(x):
    return "" if math.isnan(x) else repr(float(x))


def _fmt_int(x):
    return "" if math.isnan(x) else str(int(x))


_NUMBER = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")


def parse_cell(token):
    """Decimal number or None. Rejects inf/nan, digit separators and locale commas."""
    token = token.strip()
    if not _NUMBER.fullmatch(token):
        return None
    x = float(token)
    return x if math.isfinite(x) else None


def parse_csv(source):
    """Parse a comma-separated table with a header line.

    ``source`` may be a path or an open text stream. Empty or non-numeric
    cells become absent (NaN); blank lines are skipped.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, newline="", encoding="utf-8") as fh:
            return _parse_stream(fh, os.fspath(source))
    return _parse_stream(source, getattr(source, "name", "<stream>"))


def _parse_stream(fh, name):
    reader = csv.reader(fh)
    header = None
    for row in reader:
        if row:
            header = [h.strip() for h in row]
            break
    if header is None:
        raise FormatError(f"{name}: missing header line")
    width = len(header)
    rows = []
    for row in reader:
        if not row:
            continue
        if len(row) != width:
            raise FormatError(f"{name}: line {reader.line_num} has {len(row)} cells, "
                              f"header has {width}")
        rows.append([np.nan if (x := parse_cell(c)) is None else x for c in row])
    values = np.array(rows, dtype=np.float64).reshape(len(rows), width)
    return RawTable(tuple(header), values, name)


@dataclass(frozen=True)
class CleanReport:
    rows_in: int
    rows_out: int
    removed_fraction: float
    missing_counts: dict = field(default_factory=dict)
    rows_missing_required: int = 0

    def to_text(self):
        lines = [f"rows_in={self.rows_in}", f"rows_out={self.rows_out}",
                 f"removed_fraction={self.removed_fraction!r}",
                 f"rows_missing_required={self.rows_missing_required}"]
        lines += [f"missing.{k}={v}" for k, v in self.missing_counts.items()]
        return "\n".join(lines) + "\n"


def _require_columns(header, names):
    missing = [c for c in names if c not in header]
    if missing:
        raise SchemaError(f"input is missing required column(s): {', '.join(missing)}")


def clean(table, schema=NHTS_SCHEMA):
    """Drop every row with an absent cell in any schema column.

    Returns the cleaned table (schema columns only, in schema order) and a
    :class:`CleanReport`. Applying it to its own output is a no-op.
    """
    _require_columns(table.header, schema.columns)
    extra = [h for h in table.header if h not in schema.columns]
    if extra:
        log.warning("ignoring extra columns: %s", ", ".join(extra))
    cols = [table.header.index(c) for c in schema.columns]
    sub = table.values[:, cols]
    absent = np.isnan(sub)
    keep = ~absent.any(axis=1)
    req = [schema.columns.index(c) for c in REQUIRED_COLUMNS if c in schema.columns]
    rows_in = table.n_rows
    rows_out = int(keep.sum())
    report = CleanReport(
        rows_in=rows_in,
        rows_out=rows_out,
        removed_fraction=(rows_in - rows_out) / rows_in if rows_in else 0.0,
        missing_counts={c: int(n) for c, n in zip(schema.columns, absent.sum(axis=0))},
        rows_missing_required=int(absent[:, req].any(axis=1).sum()),
    )
    return RawTable(schema.columns, sub[keep], table.source), report


@dataclass(frozen=True)
class Dataset:
    """Feature matrix (n x 16) and one target column (n x 1).

    ``n`` may be 0 only for empty split parts; consumers reject empty sets.
    """
    features: np.ndarray
    target: np.ndarray
    schema: FeatureSchema = NHTS_SCHEMA
    target_name: str = "person_trips"

    def __post_init__(self):
        f = np.array(self.features, dtype=np.float64, order="C").reshape(-1, len(self.schema.features))
        t = np.array(self.target, dtype=np.float64, order="C").reshape(-1, 1)
        if f.shape[0] != t.shape[0]:
            raise SchemaError(f"{f.shape[0]} feature rows but {t.shape[0]} targets")
        if self.target_name not in self.schema.targets:
            raise ArgumentError(f"unknown target {self.target_name!r}; "
                                f"expected one of {', '.join(self.schema.targets)}")
        if not (np.isfinite(f).all() and np.isfinite(t).all()):
            raise ArgumentError("dataset contains missing or non-finite values")
        if (t < 0).any():
            raise ArgumentError("trip-count targets must be >= 0")
        f.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "features", f)
        object.__setattr__(self, "target", t)

    @property
    def n(self):
        return self.features.shape[0]

    def subset(self, indices):
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[idx], self.target[idx], self.schema, self.target_name)

    def with_features(self, features):
        return Dataset(features, self.target, self.schema, self.target_name)


def assemble(cleaned, schema=NHTS_SCHEMA, target_name="person_trips"):
    """Build a Dataset from a cleaned table, keeping input row order."""
    if target_name not in schema.targets:
        raise ArgumentError(f"unknown target {target_name!r}; "
                            f"expected one of {', '.join(schema.targets)}")
    _require_columns(cleaned.header, schema.features + (target_name,))
    feats = np.column_stack([cleaned.column(c) for c in schema.features]) \
        if cleaned.n_rows else np.zeros((0, len(schema.features)))
    target = cleaned.column(target_name)
    if np.isnan(feats).any() or np.isnan(target).any():
        raise ArgumentError("table has absent cells; clean it before assembling")
    return Dataset(feats, target, schema, target_name)


def feature_matrix(table, schema=NHTS_SCHEMA):
    """Features only, for prediction inputs that carry no targets."""
    _require_columns(table.header, schema.features)
    feats = np.column_stack([table.column(c) for c in schema.features]) \
        if table.n_rows else np.zeros((0, len(schema.features)))
    bad = np.argwhere(np.isnan(feats))
    if bad.size:
        row, col = bad[0]
        raise FormatError(f"{table.source}: data row {row + 1} has no value for "
                          f"{schema.features[col]!r}")
    return feats


@dataclass(frozen=True)
class ScalerParams:
    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        means = np.array(self.means, dtype=np.float64).ravel()
        stds = np.array(self.stds, dtype=np.float64).ravel()
        if means.shape != stds.shape:
            raise SchemaError(f"scaler has {means.size} means but {stds.size} stds")
        if not (np.isfinite(means).all() and np.isfinite(stds).all() and (stds > 0).all()):
            raise ArgumentError("scaler means must be finite and stds finite and > 0")
        means.flags.writeable = False
        stds.flags.writeable = False
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "stds", stds)

    @classmethod
    def identity(cls, width):
        return cls(np.zeros(width), np.ones(width))

    def transform(self, x):
        self._check(x)
        return (x - self.means) / self.stds

    def inverse(self, z):
        self._check(z)
        return z * self.stds + self.means

    def _check(self, x):
        if x.ndim != 2 or x.shape[1] != self.means.size:
            raise SchemaError(f"scaler fitted on {self.means.size} features, got shape {x.shape}")


def fit_scaler(ds):
    """Per-feature mean and population standard deviation."""
    if ds.n < 2:
        raise ArgumentError(f"fitting a scaler needs at least 2 rows, got {ds.n}")
    means = ds.features.mean(axis=0)
    stds = np.sqrt(((ds.features - means) ** 2).mean(axis=0))
    for name, s in zip(ds.schema.features, stds):
        if s == 0.0:
            raise DegenerateFeatureError(f"feature {name!r} is constant; cannot standardize")
    return ScalerParams(means, stds)


def apply_scaler(ds, params):
    return ds.with_features(params.transform(ds.features))


def invert_scaler(ds, params):
    return ds.with_features(params.inverse(ds.features))


def split_indices(n, train_frac, val_frac, test_frac, seed):
    """Seeded disjoint partition of ``range(n)``; each part sorted ascending."""
    fracs = (train_frac, val_frac, test_frac)
    if any(f < 0 for f in fracs):
        raise ArgumentError(f"split fractions must be >= 0, got {fracs}")
    if abs(sum(fracs) - 1.0) > 1e-9:
        raise ArgumentError(f"split fractions must sum to 1, got {sum(fracs):g} from {fracs}")
    if all(f > 0 for f in fracs) and n < 3:
        raise ArgumentError(f"a three-way split needs at least 3 rows, got {n}")
    # the tiny epsilon keeps e.g. 10 * 0.7 = 7.000000000000001 and
    # 100 * 0.29 = 28.999999999999996 on their intended floors
    n_test = int(math.floor(n * test_frac + 1e-9))
    n_val = int(math.floor(n * val_frac + 1e-9))
    perm = Rng(seed).permutation(n)
    test = np.sort(perm[:n_test])
    val = np.sort(perm[n_test:n_test + n_val])
    train = np.sort(perm[n_test + n_val:])
    return train, val, test


def split(ds, train_frac, val_frac, test_frac, seed):
    parts = split_indices(ds.n, train_frac, val_frac, test_frac, seed)
    return tuple(ds.subset(p) for p in parts)


# Synthetic generator ------------------------------------------------------

# Ground truth: intercept + sum(coef * column) + coef * column_a * column_b.
TRUTH = {
    "person_trips": {
        "intercept": 1.2,
        "linear": {
            "hh_count": 2.4, "workers_1": 0.8, "workers_2p": 1.5,
            "hh_veh_1": 0.5, "hh_veh_2p": 1.0, "lc_child_u18": 0.9,
            "lc_1p_u65": 0.6, "lc_2p_u65": 0.9, "lc_1p_65p": 0.3, "lc_2p_65p": 0.5,
        },
        "interaction": ("hh_count", "hh_veh_2p", 0.2),
    },
    "vehicle_trips": {
        "intercept": 0.6,
        "linear": {
            "hh_count": 0.7, "workers_1": 0.9, "workers_2p": 1.6,
            "hh_veh_1": 1.2, "hh_veh_2p": 2.0, "lc_child_u18": 0.3,
            "lc_1p_u65": 0.4, "lc_2p_u65": 0.5, "lc_1p_65p": 0.2, "lc_2p_65p": 0.3,
        },
        "interaction": ("hh_count", "workers_2p", 0.15),
    },
}

_HH_SIZE_WEIGHTS = (0.28, 0.34, 0.15, 0.13, 0.07, 0.03)


def truth(target_name, features, schema=NHTS_SCHEMA):
    """Evaluate the generative truth function on an n x 16 feature matrix."""
    try:
        spec = TRUTH[target_name]
    except KeyError:
        raise ArgumentError(f"unknown target {target_name!r}") from None
    col = {name: features[:, i] for i, name in enumerate(schema.features)}
    y = np.full(features.shape[0], spec["intercept"])
    for name, coef in spec["linear"].items():
        y = y + coef * col[name]
    a, b, coef = spec["interaction"]
    return y + coef * col[a] * col[b]


def describe_truth():
    lines = []
    for target, spec in TRUTH.items():
        terms = [f"{spec['intercept']!r}"]
        terms += [f"{c!r}*{name}" for name, c in spec["linear"].items()]
        a, b, c = spec["interaction"]
        terms.append(f"{c!r}*{a}*{b}")
        lines.append(f"{target} = " + " + ".join(terms))
    return "\n".join(lines)


def _categorical(rng, weights):
    u = rng.random() * sum(weights)
    acc = 0.0
    for i, w in enumerate(weights):
        acc += w
        if u < acc:
            return i
    return len(weights) - 1


def _synth_household(rng):
    size = 1 + _categorical(rng, _HH_SIZE_WEIGHTS)
    children = rng.below(size) if size > 1 else 0
    adults = size - children
    senior = rng.random() < 0.25
    workers = rng.below(min(adults, 3) + 1)
    vehicles = min(3, rng.below(adults + 2))
    row = dict.fromkeys(FEATURES, 0.0)
    row["hh_count"] = size
    row["lc_child_u18"] = children
    if children == 0:
        key = ("lc_1p" if adults == 1 else "lc_2p") + ("_65p" if senior else "_u65")
        row[key] = 1
    row["workers_1"] = int(workers == 1)
    row["workers_2p"] = int(workers >= 2)
    row["hh_veh_0"] = int(vehicles == 0)
    row["hh_veh_1"] = int(vehicles == 1)
    row["hh_veh_2p"] = int(vehicles >= 2)
    row["total_pop"] = 500 + rng.below(49501)
    row["pop_group_quarters"] = rng.below(400)
    row["hh_income"] = min(11, 1 + rng.below(6) + 2 * workers)
    row["cluster"] = 1 + rng.below(6)
    row["urban_group"] = 1 + rng.below(3)
    return [float(row[c]) for c in FEATURES]


def synthesize(n, seed, noise_sd=0.02, schema=NHTS_SCHEMA):
    """Seeded survey-shaped table with targets from :data:`TRUTH`.

    Each target is multiplied by ``exp(noise_sd * z)``, z standard normal, so
    ``noise_sd=0`` reproduces the truth function exactly.
    """
    if n < 1:
        raise ArgumentError(f"n must be >= 1, got {n}")
    if not (noise_sd >= 0 and math.isfinite(noise_sd)):
        raise ArgumentError(f"noise_sd must be finite and >= 0, got {noise_sd}")
    rng = Rng(seed)
    feats = np.array([_synth_household(rng) for _ in range(n)])
    cols = [feats]
    for target in schema.targets:
        noise = np.array([rng.normal() for _ in range(n)])
        cols.append((truth(target, feats, schema) * np.exp(noise_sd * noise)).reshape(-1, 1))
    return RawTable(schema.columns, np.hstack(cols), f"<synthetic n={n} seed={seed}>")
