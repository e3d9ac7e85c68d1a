"""Synthetic dataset generators with planted structure.

``synth_ctrip`` mimics a hotel-booking service log: six customer
consumption-habit attributes (sensitive) and six hotel attributes
(non-sensitive), with a 3-class room-service label produced by a fixed rule
on the hotel attributes plus habit-correlated label noise, so an
unconstrained model picks up measurable service discrimination.

``synth_credit`` mirrors a classic credit-scoring benchmark's shape
(binary gender plus a 51-valued age as sensitive attributes, 1000 rows,
good/bad label) with a planted score and a tunable sensitive bias, for
desk-scale training runs where the real data cannot be shipped.
"""
from __future__ import annotations

import numpy as np

from .data import Dataset, dataset_from_table, write_table
from .errors import ConfigError
from .schema import ColumnSpec, SchemaConfig

# ---------------------------------------------------------------------------
# Ctrip-style service log

_CTRIP_HABITS = (
    ("confirm_minutes", (1, 5, 15, 30, 60)),
    ("advance_days", (0, 1, 3, 7, 14, 30)),
    ("star_pref", (1, 2, 3, 4, 5)),
    ("class_pref", (1, 2, 3)),
    ("recommend_pref", (1, 2, 3, 4, 5)),
    ("stay_days", (1, 2, 3, 5)),
)

_ROOM_TYPES = ("double", "family", "single", "suite")
_SERVICE_CLASSES = ("basic", "upgraded", "premium")


def ctrip_schema() -> SchemaConfig:
    cols = [ColumnSpec(name, "numeric", "sensitive",
                       domain=tuple(float(v) for v in dom),
                       privileged=float(dom[-1]))
            for name, dom in _CTRIP_HABITS]
    cols += [
        ColumnSpec("order_day", "numeric", "nonsensitive"),
        ColumnSpec("hotel_id", "numeric", "nonsensitive"),
        ColumnSpec("room_type", "categorical", "nonsensitive"),
        ColumnSpec("room_id", "numeric", "nonsensitive"),
        ColumnSpec("star_level", "numeric", "nonsensitive"),
        ColumnSpec("room_price", "numeric", "nonsensitive"),
        ColumnSpec("service_level", "categorical", "label",
                   classes=_SERVICE_CLASSES),
    ]
    return SchemaConfig(columns=tuple(cols), label_arity=3)


def ctrip_service_rule(star_level, room_price, room_type) -> int:
    """The planted label: room service tier from hotel attributes only."""
    price_part = (room_price - 80.0) / (2000.0 - 80.0)
    star_part = (star_level - 1.0) / 4.0
    score = 0.55 * star_part + 0.45 * price_part
    if room_type == "suite":
        score += 0.08
    if score > 0.62:
        return 2
    if score > 0.34:
        return 1
    return 0


def synth_ctrip_table(n: int, seed: int, noise: float = 0.3):
    """Raw (header, rows) for a synthetic service log."""
    if n <= 0:
        raise ConfigError("record count must be positive")
    rng = np.random.default_rng(seed)
    schema = ctrip_schema()
    header = [c.name for c in schema.columns]
    rows = []
    for _ in range(n):
        habits = {name: dom[rng.integers(len(dom))] for name, dom in _CTRIP_HABITS}
        star = int(rng.integers(1, 6))
        price = int(rng.integers(80, 2001))
        room_type = _ROOM_TYPES[rng.integers(len(_ROOM_TYPES))]
        label = ctrip_service_rule(star, price, room_type)
        # habit-correlated noise: heavy-habit customers drift up a tier,
        # light-habit customers down, hence learnable service discrimination
        habit_score = np.mean([dom.index(habits[name]) / (len(dom) - 1)
                               for name, dom in _CTRIP_HABITS])
        if rng.uniform() < noise:
            label = min(2, label + 1) if habit_score > 0.5 else max(0, label - 1)
        row = [str(habits[name]) for name, _ in _CTRIP_HABITS]
        row += [str(int(rng.integers(1, 366))), str(int(rng.integers(1, 201))),
                room_type, str(int(rng.integers(1, 501))), str(star), str(price),
                _SERVICE_CLASSES[label]]
        rows.append(row)
    return header, rows, schema


def synth_ctrip(n: int, seed: int, noise: float = 0.3) -> Dataset:
    """Synthetic service-discrimination dataset, deterministic under seed."""
    header, rows, schema = synth_ctrip_table(n, seed, noise=noise)
    return dataset_from_table(header, rows, schema, source="synth_ctrip")


def write_ctrip(path, n: int, seed: int, noise: float = 0.3) -> SchemaConfig:
    header, rows, schema = synth_ctrip_table(n, seed, noise=noise)
    write_table(path, header, rows)
    return schema


# ---------------------------------------------------------------------------
# credit-scoring benchmark stand-in

# coded categories in the style of classic credit files; codes sort in
# semantic order, so the planted score is monotone in the loaded encoding
# and stays learnable for the linear models
_CHECKING = ("A11", "A12", "A13", "A14")
_HISTORY = ("A30", "A31", "A32", "A33", "A34")
_SAVINGS = ("A61", "A62", "A63", "A64", "A65")
_EMPLOYMENT = ("A71", "A72", "A73", "A74", "A75")
_HOUSING = ("A151", "A152", "A153")

_CHECKING_W = dict(zip(_CHECKING, (-0.7, -0.2, 0.4, 0.8)))
_HISTORY_W = dict(zip(_HISTORY, (-0.8, -0.4, 0.0, 0.4, 0.8)))
_SAVINGS_W = dict(zip(_SAVINGS, (-0.5, -0.2, 0.1, 0.4, 0.7)))
_EMPLOYMENT_W = dict(zip(_EMPLOYMENT, (-0.6, -0.3, 0.1, 0.4, 0.7)))
_HOUSING_W = dict(zip(_HOUSING, (-0.3, 0.0, 0.3)))


def credit_schema() -> SchemaConfig:
    cols = (
        ColumnSpec("gender", "categorical", "sensitive",
                   domain=("female", "male"), privileged="male"),
        ColumnSpec("age", "numeric", "sensitive",
                   domain=tuple(float(v) for v in range(19, 70)), privileged=30.0),
        ColumnSpec("checking_status", "categorical", "nonsensitive"),
        ColumnSpec("duration_months", "numeric", "nonsensitive"),
        ColumnSpec("credit_history", "categorical", "nonsensitive"),
        ColumnSpec("amount", "numeric", "nonsensitive"),
        ColumnSpec("savings", "categorical", "nonsensitive"),
        ColumnSpec("employment_years", "categorical", "nonsensitive"),
        ColumnSpec("housing", "categorical", "nonsensitive"),
        ColumnSpec("num_credits", "numeric", "nonsensitive"),
        ColumnSpec("credit_risk", "categorical", "label", classes=("bad", "good")),
    )
    return SchemaConfig(columns=cols, label_arity=2)


def synth_credit_table(n: int = 1000, seed: int = 7, bias: float = 0.12,
                       noise: float = 0.45):
    """Raw (header, rows) for the credit stand-in.

    ``bias`` scales how strongly gender and age leak into the label; zero
    plants a label independent of the sensitive columns.
    """
    if n <= 0:
        raise ConfigError("record count must be positive")
    rng = np.random.default_rng(seed)
    schema = credit_schema()
    header = [c.name for c in schema.columns]
    rows = []
    for _ in range(n):
        gender = "male" if rng.uniform() < 0.69 else "female"
        age = int(rng.integers(19, 70))
        checking = _CHECKING[rng.integers(len(_CHECKING))]
        duration = int(rng.integers(4, 73))
        history = _HISTORY[rng.integers(len(_HISTORY))]
        amount = int(rng.integers(250, 18501))
        savings = _SAVINGS[rng.integers(len(_SAVINGS))]
        employment = _EMPLOYMENT[rng.integers(len(_EMPLOYMENT))]
        housing = _HOUSING[rng.integers(len(_HOUSING))]
        num_credits = int(rng.integers(1, 5))
        score = (
            _CHECKING_W[checking] + _HISTORY_W[history] + _SAVINGS_W[savings]
            + _EMPLOYMENT_W[employment] + _HOUSING_W[housing]
            - 1.0 * (duration - 4) / 68.0
            - 0.8 * (amount - 250) / 18250.0
            - 0.2 * (num_credits - 1) / 3.0
            + 1.4
        )
        score += bias * ((1.0 if gender == "male" else 0.0) - 0.5)
        score += bias * 0.6 * ((age - 19) / 50.0 - 0.5)
        score += rng.normal(0.0, noise)
        label = "good" if score > 0.0 else "bad"
        rows.append([gender, str(age), checking, str(duration), history,
                     str(amount), savings, employment, housing,
                     str(num_credits), label])
    return header, rows, schema


def synth_credit(n: int = 1000, seed: int = 7, bias: float = 0.12,
                 noise: float = 0.45) -> Dataset:
    header, rows, schema = synth_credit_table(n, seed, bias=bias, noise=noise)
    return dataset_from_table(header, rows, schema, source="synth_credit")


def write_credit(path, n: int = 1000, seed: int = 7, bias: float = 0.12,
                 noise: float = 0.45) -> SchemaConfig:
    header, rows, schema = synth_credit_table(n, seed, bias=bias, noise=noise)
    write_table(path, header, rows)
    return schema
