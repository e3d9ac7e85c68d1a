"""Fair augmentation: materialize the similar sub-population of each record.

A sub-population holds every input that shares a record's non-sensitive
values and differs only in the sensitive coordinates. Full mode walks the
Cartesian product of the declared sensitive domains; extremes mode only the
product of each domain's {min, max} (the cheap variant); explicit mode a
caller-provided list of sensitive-value combinations. Synthetic members
inherit the origin's ground truth label.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .data import Dataset, Record, write_table
from .errors import ConfigError
from .schema import SchemaConfig

FULL = "full"
EXTREMES = "extremes"
EXPLICIT = "explicit"

_MODES = (FULL, EXTREMES, EXPLICIT)


@dataclass(frozen=True)
class AugmentationStrategy:
    """How to enumerate sub-population members.

    ``combos`` (explicit mode only) lists raw sensitive-value tuples, one
    entry per sensitive column in schema order; an empty tuple means
    "origin only", which disables augmentation. ``cap`` bounds the member
    count per sub-population via seeded uniform sampling.
    """

    mode: str = FULL
    combos: tuple = ()
    cap: int = None
    seed: int = 0

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ConfigError(f"unknown augmentation mode {self.mode!r}")
        if self.cap is not None and self.cap < 2:
            raise ConfigError(f"augmentation cap must be at least 2, got {self.cap}")
        object.__setattr__(self, "combos", tuple(tuple(c) for c in self.combos))


def no_augmentation() -> AugmentationStrategy:
    """Strategy whose sub-populations contain only the origin record."""
    return AugmentationStrategy(mode=EXPLICIT, combos=())


@dataclass(frozen=True)
class SubPopulation:
    """Member matrix (m, d) of full feature vectors, origin row first.

    All members share the origin's non-sensitive values and its label; the
    sensitive combinations are pairwise distinct and, after the origin,
    lexicographically ordered over domain indices.
    """

    schema: SchemaConfig
    features: np.ndarray
    label: int
    origin_index: int = 0

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=float)
        feats.setflags(write=False)
        object.__setattr__(self, "features", feats)

    def __len__(self):
        return self.features.shape[0]

    def member(self, j: int) -> Record:
        row = self.features[j]
        return Record(
            x=row[list(self.schema.nonsensitive_indices)],
            a=row[list(self.schema.sensitive_indices)],
            y=self.label,
        )

    @property
    def origin(self) -> Record:
        return self.member(0)

    @property
    def members(self):
        return [self.member(j) for j in range(len(self))]


def _candidate_values(strategy, schema):
    """Normalized per-column value lists whose product forms the candidates."""
    per_col = []
    for col in schema.sensitive_columns:
        grid = col.normalized_domain()
        if strategy.mode == FULL:
            per_col.append(list(grid))
        else:  # extremes
            per_col.append(sorted({float(grid[0]), float(grid[-1])}))
    return per_col


def enumerate_subpopulation(record_features, schema: SchemaConfig,
                            strategy: AugmentationStrategy, label: int,
                            origin_index: int = 0) -> SubPopulation:
    """Build one sub-population from a normalized full feature row.

    ``record_features`` is the origin's (d,) vector with sensitive values on
    the index/(arity-1) grid. The origin always comes first; duplicates of
    it (or of each other) are removed.
    """
    origin = np.asarray(record_features, dtype=float)
    sens_idx = list(schema.sensitive_indices)
    origin_combo = tuple(origin[sens_idx])

    if strategy.mode == EXPLICIT:
        combos = []
        for raw in strategy.combos:
            if len(raw) != len(sens_idx):
                raise ConfigError(
                    f"explicit combo {raw!r} does not cover the "
                    f"{len(sens_idx)} sensitive columns")
            combos.append(tuple(col.normalize_value(v)
                                for col, v in zip(schema.sensitive_columns, raw)))
    else:
        combos = [tuple(c) for c in itertools.product(*_candidate_values(strategy, schema))]

    seen = {origin_combo}
    ordered = []
    for combo in combos:
        if combo not in seen:
            seen.add(combo)
            ordered.append(combo)

    if strategy.cap is not None and len(ordered) > strategy.cap - 1:
        rng = np.random.default_rng([strategy.seed, origin_index])
        pick = rng.choice(len(ordered), size=strategy.cap - 1, replace=False)
        ordered = [ordered[k] for k in sorted(pick)]

    feats = np.tile(origin, (1 + len(ordered), 1))
    for j, combo in enumerate(ordered, start=1):
        feats[j, sens_idx] = combo
    return SubPopulation(schema=schema, features=feats, label=int(label),
                         origin_index=origin_index)


def augment(dataset: Dataset, strategy: AugmentationStrategy):
    """One sub-population per record, in record order.

    Expects a normalized dataset. Every synthetic member carries its
    origin's ground truth.
    """
    return [
        enumerate_subpopulation(dataset.features[i], dataset.schema, strategy,
                                label=dataset.labels[i], origin_index=i)
        for i in range(len(dataset))
    ]


def dump_augmented(subpops, schema: SchemaConfig, path) -> None:
    """Write the augmented union as CSV with an origin-row provenance column."""
    header = list(schema.feature_names) + [schema.label_column.name, "origin_row"]
    rows = []
    for sp in subpops:
        for j in range(len(sp)):
            rows.append([repr(float(v)) for v in sp.features[j]]
                        + [sp.label, sp.origin_index])
    write_table(path, header, rows)
