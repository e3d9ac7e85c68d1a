"""Evaluation metrics: accuracy, group fairness (SPD/EOD/AVOD, also over the
augmented union), individual fairness (FTA, CON), the fairness confusion
matrix with fair-precision/recall/F1, and the quantitative accurate-fairness
rate.

Every record is judged together with its similar sub-population: a
prediction is *fair* when the whole sub-population decodes to one label and
*true* when the origin's decoded label matches the ground truth, giving the
four-way true/false x fair/biased partition.
"""
from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .augment import AugmentationStrategy, SubPopulation, augment
from .data import Dataset
from .errors import ConfigError, DataError, SchemaError
from .models import encode_target, predicted_labels
from .schema import SENSITIVE, SchemaConfig
from .siamese import FairnessSpec, member_distances

TRUE_FAIR = "true_fair"
TRUE_BIASED = "true_biased"
FALSE_FAIR = "false_fair"
FALSE_BIASED = "false_biased"


def classify_prediction(subpop: SubPopulation, y: int, model) -> str:
    """Place one sub-population in the fairness confusion matrix.

    true_fair: every member decodes to y. true_biased: the origin decodes
    to y but some member does not. false_fair: the origin misses y but all
    members agree with each other. false_biased: the origin misses y and
    the members disagree.
    """
    labels = predicted_labels(model, subpop.features)
    accurate = labels[0] == y
    consistent = bool(np.all(labels == labels[0]))
    if accurate:
        return TRUE_FAIR if consistent else TRUE_BIASED
    return FALSE_FAIR if consistent else FALSE_BIASED


@dataclass(frozen=True)
class FairnessConfusionCounts:
    """TF/TB/FF/FB tallies; the four rates partition 1 exactly."""

    n_true_fair: int
    n_true_biased: int
    n_false_fair: int
    n_false_biased: int

    @property
    def n_total(self) -> int:
        return (self.n_true_fair + self.n_true_biased
                + self.n_false_fair + self.n_false_biased)

    @property
    def tfr(self) -> float:
        return self.n_true_fair / self.n_total

    @property
    def tbr(self) -> float:
        return self.n_true_biased / self.n_total

    @property
    def ffr(self) -> float:
        return self.n_false_fair / self.n_total

    @property
    def fbr(self) -> float:
        return self.n_false_biased / self.n_total


def fairness_confusion(test: Dataset, model,
                       strategy: AugmentationStrategy) -> FairnessConfusionCounts:
    """Classify every record and tally the four categories."""
    tally = {TRUE_FAIR: 0, TRUE_BIASED: 0, FALSE_FAIR: 0, FALSE_BIASED: 0}
    for sp in augment(test, strategy):
        tally[classify_prediction(sp, sp.label, model)] += 1
    return FairnessConfusionCounts(
        n_true_fair=tally[TRUE_FAIR], n_true_biased=tally[TRUE_BIASED],
        n_false_fair=tally[FALSE_FAIR], n_false_biased=tally[FALSE_BIASED])


def fair_prf(counts: FairnessConfusionCounts):
    """(fair-precision, fair-recall, fair-F1); zero denominators yield 0."""
    tfr, tbr, ffr = counts.tfr, counts.tbr, counts.ffr
    fp = tfr / (tfr + tbr) if tfr + tbr > 0 else 0.0
    fr = tfr / (tfr + ffr) if tfr + ffr > 0 else 0.0
    ff1 = 2.0 * fp * fr / (fp + fr) if fp + fr > 0 else 0.0
    return fp, fr, ff1


def accuracy(test: Dataset, model) -> float:
    if len(test) == 0:
        raise DataError("cannot score an empty dataset")
    return float(np.mean(predicted_labels(model, test.features) == test.labels))


def fta_rate(test: Dataset, model, strategy: AugmentationStrategy) -> float:
    """Fraction of records whose whole sub-population decodes to one label.

    Equals TFR + FFR by construction.
    """
    agree = 0
    subpops = augment(test, strategy)
    for sp in subpops:
        labels = predicted_labels(model, sp.features)
        agree += int(np.all(labels == labels[0]))
    return agree / len(subpops)


def af_rate(test: Dataset, model, spec: FairnessSpec,
            strategy: AugmentationStrategy) -> float:
    """Fraction of records whose every member satisfies the constraint
    D(y, decoded member label) <= K * d(origin, member).

    Distances use the decoded label's encoding, not the raw score, so at
    K=0 this coincides with the true-fair rate.
    """
    arity = test.schema.label_arity
    k_out = 1 if arity == 2 else arity
    satisfied = 0
    subpops = augment(test, strategy)
    for sp in subpops:
        labels = predicted_labels(model, sp.features)
        y_enc = encode_target(sp.label, "mse", k_out)
        d_out = np.array([np.mean(np.abs(encode_target(int(l), "mse", k_out) - y_enc))
                          for l in labels])
        slacks = d_out - spec.lipschitz * member_distances(sp)
        satisfied += int(np.all(slacks <= 0.0))
    return satisfied / len(subpops)


def consistency(test: Dataset, model, k: int = 5) -> float:
    """k-NN prediction agreement on the non-sensitive features.

    1 - mean |label(i) - mean(label of k nearest neighbors)|, Euclidean
    distance, ties broken by record index, self excluded. For k-class
    labels the deviation is divided by (arity - 1) to stay in [0, 1].
    """
    n = len(test)
    if not 1 <= k < n:
        raise ConfigError(f"neighbor count k={k} must satisfy 1 <= k < {n}")
    X = test.features[:, list(test.schema.nonsensitive_indices)]
    labels = predicted_labels(model, test.features).astype(float)
    diff = X[:, None, :] - X[None, :, :]
    dists = np.sqrt(np.sum(diff * diff, axis=2))
    np.fill_diagonal(dists, np.inf)
    idx = np.arange(n)
    deviations = np.empty(n)
    for i in range(n):
        order = np.lexsort((idx, dists[i]))[:k]
        deviations[i] = abs(labels[i] - labels[order].mean())
    scale = max(test.schema.label_arity - 1, 1)
    return float(1.0 - deviations.mean() / scale)


# ---------------------------------------------------------------------------
# group metrics


@dataclass(frozen=True)
class GroupSpec:
    """Privileged-vs-rest partition on one sensitive column.

    ``positive_label`` is the class index counted as the favorable outcome.
    """

    column: str
    privileged: object
    positive_label: int = 1

    def validate(self, schema: SchemaConfig) -> "GroupSpec":
        col = schema.column(self.column)
        if col.role != SENSITIVE:
            raise SchemaError(f"group column {self.column!r} is not sensitive")
        if self.privileged not in col.domain:
            raise SchemaError(
                f"privileged value {self.privileged!r} is not in the domain "
                f"of {self.column!r}")
        if not 0 <= self.positive_label < schema.label_arity:
            raise SchemaError(f"positive label {self.positive_label} out of range")
        return self


def _rate(mask_num, mask_den, what, group_name):
    den = int(mask_den.sum())
    if den == 0:
        raise DataError(f"cannot compute {what}: group {group_name!r} has no "
                        f"records with the required ground truth")
    return float(mask_num[mask_den].mean())


def group_metrics(eval_set: Dataset, model, group: GroupSpec):
    """(SPD, EOD, AVOD) between the privileged group and everyone else.

    SPD compares positive prediction rates, EOD true-positive rates, AVOD
    averages the TPR and FPR gaps; all as absolute differences. Pass the
    augmented union (origin labels attached) for the I(V) variants.
    """
    schema = eval_set.schema
    group.validate(schema)
    col = schema.column(group.column)
    fi = schema.feature_index(group.column)
    priv_value = col.normalize_value(group.privileged)
    priv = eval_set.features[:, fi] == priv_value
    unpriv = ~priv
    for name, mask in (("privileged", priv), ("unprivileged", unpriv)):
        if not mask.any():
            raise DataError(f"group {name!r} is empty in the evaluation set")

    pred_pos = predicted_labels(model, eval_set.features) == group.positive_label
    true_pos = eval_set.labels == group.positive_label

    spd = abs(float(pred_pos[priv].mean()) - float(pred_pos[unpriv].mean()))
    tpr_p = _rate(pred_pos, priv & true_pos, "TPR", "privileged")
    tpr_u = _rate(pred_pos, unpriv & true_pos, "TPR", "unprivileged")
    fpr_p = _rate(pred_pos, priv & ~true_pos, "FPR", "privileged")
    fpr_u = _rate(pred_pos, unpriv & ~true_pos, "FPR", "unprivileged")
    eod = abs(tpr_p - tpr_u)
    avod = 0.5 * (abs(fpr_p - fpr_u) + abs(tpr_p - tpr_u))
    return spd, eod, avod


def augmented_union(test: Dataset, strategy: AugmentationStrategy) -> Dataset:
    """Stack every sub-population member, each carrying its origin's label."""
    subpops = augment(test, strategy)
    feats = np.vstack([sp.features for sp in subpops])
    labels = np.concatenate([np.full(len(sp), sp.label, dtype=np.int64)
                             for sp in subpops])
    return Dataset(schema=test.schema, features=feats, labels=labels)


# ---------------------------------------------------------------------------
# aggregate report

METRIC_KEYS = ("acc", "spd", "eod", "avod", "spd_iv", "eod_iv", "avod_iv",
               "con", "fta", "tfr", "tbr", "ffr", "fbr",
               "f_recall", "f_precision", "f_f1", "af_rate")


@dataclass(frozen=True)
class MetricsReport:
    metrics: dict
    counts: FairnessConfusionCounts
    dataset: str = ""
    model: str = ""
    method: str = ""
    seed: int = 0
    fingerprint: str = ""

    def __getitem__(self, key):
        return self.metrics[key]

    def to_kv_text(self) -> str:
        lines = [f"dataset = {self.dataset}", f"model = {self.model}",
                 f"method = {self.method}", f"seed = {self.seed}",
                 f"fingerprint = {self.fingerprint}"]
        lines += [f"{k} = {self.metrics[k]:.6f}" for k in METRIC_KEYS]
        return "\n".join(lines) + "\n"

    def csv_row(self):
        return ([self.dataset, self.model, self.method, self.seed]
                + [repr(float(self.metrics[k])) for k in METRIC_KEYS]
                + [self.fingerprint])


CSV_HEADER = ["dataset", "model", "method", "seed", *METRIC_KEYS, "fingerprint"]


def write_reports_csv(reports, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for rep in reports:
            writer.writerow(rep.csv_row())


def read_reports_csv(path):
    """Rows back as dicts with numeric metric values."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = []
        for row in reader:
            for k in METRIC_KEYS:
                row[k] = float(row[k])
            row["seed"] = int(row["seed"])
            rows.append(row)
    return rows


def config_fingerprint(payload: dict) -> str:
    return hashlib.sha256(
        json.dumps(payload, sort_keys=True, default=str).encode()).hexdigest()[:16]


def build_report(test: Dataset, model, group: GroupSpec, spec: FairnessSpec,
                 strategy: AugmentationStrategy, k_neighbors: int = 5,
                 dataset: str = "", model_name: str = "", method: str = "",
                 seed: int = 0, fingerprint: str = "") -> MetricsReport:
    """Compute the full metric suite for one model on one test set.

    The arithmetic identities (rates partition 1, ACC = TFR+TBR,
    FTA = TFR+FFR) are asserted before the report is returned.
    """
    counts = fairness_confusion(test, model, strategy)
    acc = accuracy(test, model)
    fta = fta_rate(test, model, strategy)
    fp, fr, ff1 = fair_prf(counts)
    spd, eod, avod = group_metrics(test, model, group)
    union = augmented_union(test, strategy)
    spd_iv, eod_iv, avod_iv = group_metrics(union, model, group)
    con = consistency(test, model, k=k_neighbors)
    af = af_rate(test, model, spec, strategy)

    # identities hold exactly at count level; the float-added rate forms can
    # drift by one ulp, hence the 1e-12 guard
    n = counts.n_total
    assert counts.n_true_fair + counts.n_true_biased == round(acc * n)
    assert counts.n_true_fair + counts.n_false_fair == round(fta * n)
    rates_sum = counts.tfr + counts.tbr + counts.ffr + counts.fbr
    assert abs(rates_sum - 1.0) <= 1e-12, "confusion rates must partition 1"
    assert abs(acc - (counts.tfr + counts.tbr)) <= 1e-12, "ACC must equal TFR + TBR"
    assert abs(fta - (counts.tfr + counts.ffr)) <= 1e-12, "FTA must equal TFR + FFR"

    metrics = {
        "acc": acc, "spd": spd, "eod": eod, "avod": avod,
        "spd_iv": spd_iv, "eod_iv": eod_iv, "avod_iv": avod_iv,
        "con": con, "fta": fta,
        "tfr": counts.tfr, "tbr": counts.tbr, "ffr": counts.ffr, "fbr": counts.fbr,
        "f_recall": fr, "f_precision": fp, "f_f1": ff1,
        "af_rate": af,
    }
    return MetricsReport(metrics=metrics, counts=counts, dataset=dataset,
                         model=model_name, method=method, seed=seed,
                         fingerprint=fingerprint)
