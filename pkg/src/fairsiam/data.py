"""Tabular loading, cleaning, min-max normalization, and splitting.

The on-disk format is delimiter-separated text with a header row. Loading
drops any row containing a missing token, maps categorical values to
indices, validates sensitive values against their declared domains, and
keeps numeric columns raw; scaling to [0,1] is a separate, recordable step
so a scaler fit on a training split can be reused on the test split.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import ConfigError, DataError, SchemaError
from .schema import CATEGORICAL, LABEL, NUMERIC, SENSITIVE, SchemaConfig


@dataclass(frozen=True)
class Record:
    """One labeled input split into non-sensitive (x) and sensitive (a) parts."""

    x: np.ndarray
    a: np.ndarray
    y: int


@dataclass(frozen=True)
class Dataset:
    """A schema plus aligned feature matrix (n, d) and label vector (n,).

    Feature columns follow the schema's declared order. Immutable after
    construction; all derived views copy nothing.
    """

    schema: SchemaConfig
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=float)
        labs = np.asarray(self.labels, dtype=np.int64)
        if feats.ndim != 2 or feats.shape[1] != self.schema.n_features:
            raise DataError(
                f"feature matrix has shape {feats.shape}, schema declares "
                f"{self.schema.n_features} feature columns")
        if labs.shape != (feats.shape[0],):
            raise DataError("labels do not align with feature rows")
        if feats.shape[0] == 0:
            raise DataError("dataset is empty")
        if not np.all(np.isfinite(feats)):
            raise DataError("feature matrix contains non-finite values")
        if labs.min() < 0 or labs.max() >= self.schema.label_arity:
            raise DataError("label outside 0..arity-1")
        feats.setflags(write=False)
        labs.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labs)

    def __len__(self):
        return self.features.shape[0]

    @property
    def n_records(self) -> int:
        return self.features.shape[0]

    def record(self, i: int) -> Record:
        row = self.features[i]
        return Record(
            x=row[list(self.schema.nonsensitive_indices)],
            a=row[list(self.schema.sensitive_indices)],
            y=int(self.labels[i]),
        )

    @property
    def records(self):
        return [self.record(i) for i in range(len(self))]


# ---------------------------------------------------------------------------
# loading


def _read_table(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: file is empty")
        rows = list(reader)
    return [h.strip() for h in header], rows


def _column_positions(header, schema, source):
    col_pos = {}
    for c in schema.columns:
        if c.name not in header:
            raise SchemaError(f"{source}: column {c.name!r} missing from header")
        col_pos[c.name] = header.index(c.name)
    return col_pos


def load_dataset(path, schema: SchemaConfig) -> Dataset:
    """Load a delimiter-separated file against a schema.

    Rows containing any missing token are dropped (row order otherwise
    preserved). Categorical values map to indices: sensitive columns use
    their declared domain, other categorical columns a sorted vocabulary of
    the values seen in this file. Numeric columns stay raw, except numeric
    sensitive values which are validated against their domain.
    """
    header, rows = _read_table(path)
    return dataset_from_table(header, rows, schema, source=str(path))


def dataset_from_table(header, rows, schema: SchemaConfig,
                       source: str = "<memory>") -> Dataset:
    """Clean and encode tabular text rows (see :func:`load_dataset`)."""
    path = source
    col_pos = _column_positions(header, schema, source)
    missing = set(schema.missing_tokens)

    kept = []
    for ridx, row in enumerate(rows):
        cells = [row[col_pos[c.name]].strip() if col_pos[c.name] < len(row) else ""
                 for c in schema.columns]
        if any(cell in missing for cell in cells):
            continue
        kept.append((ridx, cells))
    if not kept:
        raise DataError(f"{path}: no rows survive missing-value cleaning")

    # vocabularies for non-sensitive categorical columns (sorted for determinism)
    vocab = {}
    for j, c in enumerate(schema.columns):
        if c.kind == CATEGORICAL and c.role != SENSITIVE and c.role != LABEL:
            vocab[c.name] = {v: i for i, v in enumerate(sorted({cells[j] for _, cells in kept}))}

    lab = schema.label_column
    classes = schema.label_classes()
    if classes is None:
        classes = tuple(sorted({cells[[c.name for c in schema.columns].index(lab.name)]
                                for _, cells in kept}))
        if len(classes) != schema.label_arity:
            raise DataError(
                f"{path}: label column {lab.name!r} has {len(classes)} distinct values, "
                f"schema declares arity {schema.label_arity}")
    class_index = {v: i for i, v in enumerate(classes)}

    n = len(kept)
    feats = np.empty((n, schema.n_features), dtype=float)
    labels = np.empty(n, dtype=np.int64)
    feat_cols = schema.feature_columns
    col_of = {c.name: j for j, c in enumerate(schema.columns)}

    for out_i, (ridx, cells) in enumerate(kept):
        for fi, c in enumerate(feat_cols):
            cell = cells[col_of[c.name]]
            if c.role == SENSITIVE:
                if c.kind == NUMERIC:
                    try:
                        val = float(cell)
                    except ValueError:
                        raise DataError(
                            f"{path}: row {ridx}: non-numeric token {cell!r} "
                            f"in numeric column {c.name!r}")
                else:
                    val = cell
                try:
                    # straight to the index/(arity-1) grid; the normalizer
                    # leaves sensitive columns untouched
                    feats[out_i, fi] = c.normalize_value(val)
                except SchemaError:
                    raise DataError(
                        f"{path}: row {ridx}: value {cell!r} is outside the declared "
                        f"domain of sensitive column {c.name!r}")
            elif c.kind == NUMERIC:
                try:
                    feats[out_i, fi] = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}: row {ridx}: non-numeric token {cell!r} "
                        f"in numeric column {c.name!r}")
            else:
                feats[out_i, fi] = vocab[c.name][cell]
        lab_cell = cells[col_of[lab.name]]
        if lab.kind == NUMERIC:
            try:
                lab_val = float(lab_cell)
            except ValueError:
                raise DataError(
                    f"{path}: row {ridx}: non-numeric token {lab_cell!r} "
                    f"in numeric column {lab.name!r}")
        else:
            lab_val = lab_cell
        if lab_val not in class_index:
            raise DataError(f"{path}: row {ridx}: unknown label value {lab_cell!r}")
        labels[out_i] = class_index[lab_val]

    return Dataset(schema=schema, features=feats, labels=labels)


# ---------------------------------------------------------------------------
# normalization


class MinMaxNormalizer(BaseEstimator, TransformerMixin):
    """Column-wise min-max scaler tied to a schema.

    Non-sensitive columns scale by the min/max seen in the fit data
    (constant columns map to 0); transformed values are clamped to [0,1] so
    test values outside the fit range stay in bounds. Sensitive columns
    pass through unchanged: loading already places them on the
    index/(arity-1) grid, and keeping that grid fixed makes normalization
    idempotent and augmentation exact.
    """

    def __init__(self, schema=None):
        self.schema = schema

    def fit(self, X, y=None):
        if self.schema is None:
            raise ConfigError("MinMaxNormalizer needs a schema")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.schema.n_features:
            raise SchemaError(
                f"expected {self.schema.n_features} feature columns, got {X.shape[1]}")
        self.data_min_ = X.min(axis=0)
        self.data_max_ = X.max(axis=0)
        for i, col in enumerate(self.schema.feature_columns):
            if col.role == SENSITIVE:
                self.data_min_[i] = 0.0
                self.data_max_[i] = 1.0
        self.scale_ = self.data_max_ - self.data_min_
        return self

    def transform(self, X):
        check_is_fitted(self, "scale_")
        X = check_array(X, dtype=float)
        out = np.zeros_like(X)
        nonconst = self.scale_ > 0
        out[:, nonconst] = (X[:, nonconst] - self.data_min_[nonconst]) / self.scale_[nonconst]
        return np.clip(out, 0.0, 1.0)

    def transform_dataset(self, dataset: Dataset) -> Dataset:
        return Dataset(schema=dataset.schema,
                       features=self.transform(dataset.features),
                       labels=dataset.labels)

    def to_dict(self) -> dict:
        check_is_fitted(self, "scale_")
        return {
            "columns": list(self.schema.feature_names),
            "data_min": [float(v) for v in self.data_min_],
            "data_max": [float(v) for v in self.data_max_],
        }

    @classmethod
    def from_dict(cls, d: dict, schema) -> "MinMaxNormalizer":
        norm = cls(schema=schema)
        norm.data_min_ = np.asarray(d["data_min"], dtype=float)
        norm.data_max_ = np.asarray(d["data_max"], dtype=float)
        norm.scale_ = norm.data_max_ - norm.data_min_
        return norm


def normalize(dataset: Dataset, normalizer: MinMaxNormalizer = None):
    """Scale every feature column to [0,1].

    Fits a new scaler on ``dataset`` unless one is supplied (reuse on test
    splits). Returns ``(scaled dataset, scaler)``.
    """
    if normalizer is None:
        normalizer = MinMaxNormalizer(schema=dataset.schema).fit(dataset.features)
    return normalizer.transform_dataset(dataset), normalizer


# ---------------------------------------------------------------------------
# splitting


def split(dataset: Dataset, test_fraction: float, seed: int):
    """Deterministic shuffled train/test partition.

    Train takes round(n * (1 - f)) rows (half-up), test the remainder; the
    same seed always reproduces the same permutation.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ConfigError(f"test_fraction must be in (0, 1), got {test_fraction}")
    n = len(dataset)
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(np.floor(n * (1.0 - test_fraction) + 0.5))
    n_train = min(max(n_train, 1), n - 1)
    tr, te = perm[:n_train], perm[n_train:]
    return (
        Dataset(dataset.schema, dataset.features[tr], dataset.labels[tr]),
        Dataset(dataset.schema, dataset.features[te], dataset.labels[te]),
    )


# ---------------------------------------------------------------------------
# prepared-file round trip (output of the CLI `prepare` step)


def write_table(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_prepared(dataset: Dataset, path) -> None:
    """Write a normalized dataset as CSV: feature columns then the label."""
    header = list(dataset.schema.feature_names) + [dataset.schema.label_column.name]
    rows = [[repr(float(v)) for v in dataset.features[i]] + [int(dataset.labels[i])]
            for i in range(len(dataset))]
    write_table(path, header, rows)


def load_prepared(path, schema: SchemaConfig) -> Dataset:
    """Read a file produced by :func:`write_prepared` (already numeric/normalized)."""
    header, rows = _read_table(path)
    col_pos = _column_positions(header, schema, str(path))
    if not rows:
        raise DataError(f"{path}: no data rows")
    feats = np.empty((len(rows), schema.n_features), dtype=float)
    labels = np.empty(len(rows), dtype=np.int64)
    try:
        for i, row in enumerate(rows):
            for fi, c in enumerate(schema.feature_columns):
                feats[i, fi] = float(row[col_pos[c.name]])
            labels[i] = int(float(row[col_pos[schema.label_column.name]]))
    except (ValueError, IndexError) as exc:
        raise DataError(f"{path}: row {i}: {exc}")
    return Dataset(schema=schema, features=feats, labels=labels)
