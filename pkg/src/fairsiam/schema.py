"""Dataset schema: column roles, sensitive-value domains, label arity.

A schema declares, per column, whether it is numeric or categorical and
whether it plays the sensitive, non-sensitive, or label role. Sensitive
columns carry a finite ordered value domain and a privileged value; the
domain drives both the [0,1] encoding (index / (arity-1)) and the
enumeration of similar sub-populations.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import yaml

from .errors import SchemaError

NUMERIC = "numeric"
CATEGORICAL = "categorical"

SENSITIVE = "sensitive"
NONSENSITIVE = "nonsensitive"
LABEL = "label"

_KINDS = (NUMERIC, CATEGORICAL)
_ROLES = (SENSITIVE, NONSENSITIVE, LABEL)

DEFAULT_MISSING_TOKENS = ("?", "")


@dataclass(frozen=True)
class ColumnSpec:
    """One column declaration.

    ``domain`` is required for sensitive columns: the finite ordered list of
    admissible raw values (floats for numeric kind, strings for categorical).
    ``privileged`` must be a member of the domain. ``classes`` optionally
    fixes the ordered class values of a categorical label column.
    """

    name: str
    kind: str
    role: str
    domain: tuple = None
    privileged: object = None
    classes: tuple = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise SchemaError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.role not in _ROLES:
            raise SchemaError(f"column {self.name!r}: unknown role {self.role!r}")
        if self.role == SENSITIVE:
            if not self.domain:
                raise SchemaError(
                    f"sensitive column {self.name!r} needs a non-empty finite domain")
            if len(set(self.domain)) != len(self.domain):
                raise SchemaError(
                    f"sensitive column {self.name!r}: domain values must be distinct")
            if self.privileged is None or self.privileged not in self.domain:
                raise SchemaError(
                    f"sensitive column {self.name!r}: privileged value "
                    f"{self.privileged!r} is not in the domain")
        elif self.domain is not None:
            raise SchemaError(
                f"column {self.name!r}: only sensitive columns declare a domain")

    @property
    def arity(self):
        return len(self.domain)

    def normalized_domain(self) -> np.ndarray:
        """Domain encoded to [0,1]: index/(arity-1), a single value maps to 0."""
        m = self.arity
        if m == 1:
            return np.zeros(1)
        return np.arange(m, dtype=float) / (m - 1)

    def normalize_value(self, raw) -> float:
        """Encode one raw domain value to [0,1]."""
        try:
            idx = self.domain.index(raw)
        except ValueError:
            raise SchemaError(
                f"value {raw!r} is not in the domain of sensitive column {self.name!r}")
        return float(self.normalized_domain()[idx])


@dataclass(frozen=True)
class SchemaConfig:
    """Ordered column declarations plus label arity and missing-value tokens."""

    columns: tuple
    label_arity: int = 2
    missing_tokens: tuple = DEFAULT_MISSING_TOKENS

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        labels = [c for c in self.columns if c.role == LABEL]
        if len(labels) != 1:
            raise SchemaError(f"schema must declare exactly one label column, got {len(labels)}")
        if not any(c.role == SENSITIVE for c in self.columns):
            raise SchemaError("schema must declare at least one sensitive column")
        if self.label_arity < 2:
            raise SchemaError("label arity must be at least 2")
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate column names in schema")
        lab = labels[0]
        if lab.classes is not None and len(lab.classes) != self.label_arity:
            raise SchemaError("label classes list does not match label arity")

    # ---- lookups ---------------------------------------------------------

    @property
    def label_column(self) -> ColumnSpec:
        return next(c for c in self.columns if c.role == LABEL)

    @property
    def feature_columns(self) -> tuple:
        """All non-label columns in declared order (the feature-matrix layout)."""
        return tuple(c for c in self.columns if c.role != LABEL)

    @property
    def feature_names(self) -> tuple:
        return tuple(c.name for c in self.feature_columns)

    @property
    def n_features(self) -> int:
        return len(self.feature_columns)

    @property
    def sensitive_indices(self) -> tuple:
        """Positions of sensitive columns within the feature matrix."""
        return tuple(i for i, c in enumerate(self.feature_columns) if c.role == SENSITIVE)

    @property
    def nonsensitive_indices(self) -> tuple:
        return tuple(i for i, c in enumerate(self.feature_columns) if c.role != SENSITIVE)

    @property
    def sensitive_columns(self) -> tuple:
        return tuple(c for c in self.feature_columns if c.role == SENSITIVE)

    def column(self, name: str) -> ColumnSpec:
        for c in self.columns:
            if c.name == name:
                return c
        raise SchemaError(f"schema has no column named {name!r}")

    def feature_index(self, name: str) -> int:
        for i, c in enumerate(self.feature_columns):
            if c.name == name:
                return i
        raise SchemaError(f"{name!r} is not a feature column")

    def label_classes(self) -> tuple:
        """Ordered label class values; defaults to 0..arity-1 for numeric labels."""
        lab = self.label_column
        if lab.classes is not None:
            return tuple(lab.classes)
        if lab.kind == NUMERIC:
            return tuple(range(self.label_arity))
        return None  # derived from data at load time

    def fingerprint_dict(self) -> dict:
        return {
            "columns": [
                {"name": c.name, "kind": c.kind, "role": c.role,
                 "domain": list(c.domain) if c.domain else None,
                 "privileged": c.privileged,
                 "classes": list(c.classes) if c.classes else None}
                for c in self.columns
            ],
            "label_arity": self.label_arity,
            "missing_tokens": list(self.missing_tokens),
        }


def _parse_domain(spec, name, kind):
    """Domain may be an explicit list or a {low, high[, step]} integer range."""
    if isinstance(spec, dict):
        try:
            low, high = spec["low"], spec["high"]
        except KeyError:
            raise SchemaError(f"column {name!r}: range domain needs 'low' and 'high'")
        step = spec.get("step", 1)
        vals = np.arange(low, high + step / 2, step)
        return tuple(float(v) for v in vals)
    if isinstance(spec, (list, tuple)):
        if kind == NUMERIC:
            return tuple(float(v) for v in spec)
        return tuple(str(v) for v in spec)
    raise SchemaError(f"column {name!r}: domain must be a list or a low/high range")


def schema_from_dict(cfg: dict) -> SchemaConfig:
    try:
        raw_cols = cfg["columns"]
    except (KeyError, TypeError):
        raise SchemaError("schema config must contain a 'columns' list")
    cols = []
    for entry in raw_cols:
        name = entry.get("name")
        kind = entry.get("kind", NUMERIC)
        role = entry.get("role", NONSENSITIVE)
        domain = None
        if "domain" in entry and entry["domain"] is not None:
            domain = _parse_domain(entry["domain"], name, kind)
        priv = entry.get("privileged")
        if priv is not None and kind == NUMERIC:
            priv = float(priv)
        classes = entry.get("classes")
        if classes is not None:
            classes = tuple(classes)
        cols.append(ColumnSpec(name=name, kind=kind, role=role, domain=domain,
                               privileged=priv, classes=classes))
    kwargs = {}
    if "label_arity" in cfg:
        kwargs["label_arity"] = int(cfg["label_arity"])
    if "missing_tokens" in cfg:
        kwargs["missing_tokens"] = tuple(str(t) for t in cfg["missing_tokens"])
    return SchemaConfig(columns=tuple(cols), **kwargs)


def load_schema(path) -> SchemaConfig:
    """Read a schema declaration from a YAML file."""
    try:
        with open(path) as fh:
            cfg = yaml.safe_load(fh)
    except FileNotFoundError:
        raise SchemaError(f"schema file not found: {path}")
    except yaml.YAMLError as exc:
        raise SchemaError(f"cannot parse schema file {path}: {exc}")
    if not isinstance(cfg, dict):
        raise SchemaError(f"schema file {path} must contain a mapping")
    return schema_from_dict(cfg)


def save_schema(schema: SchemaConfig, path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(schema.fingerprint_dict(), fh, sort_keys=False)
