"""Constrained trainer: minimize prediction loss over similar sub-populations
subject to the accurate-fairness constraint, via projected multiplier ascent
interleaved with parameter descent.

For record i with sub-population members j (origin included), the per-record
objective is

    L_AF(i) = sum_j [ L(y_i, f(v_ij)) + lambda_ij * slack_ij ]
    slack_ij = D(y_i, f(v_ij)) - K * d(v_i, v_ij)

with D the MAE between the encoded target and the model output, d the MAE
between full input vectors, and K the Lipschitz factor. Each visit forwards
all members under shared parameters, ascends every lambda_ij by its slack
(projected at zero), then descends the parameters on dL_AF/dtheta using the
freshly ascended multipliers. The baseline trainer is the same loop with
augmentation disabled and the multipliers frozen at zero, which makes
baseline-vs-fair comparisons exact.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .augment import AugmentationStrategy, SubPopulation, augment, no_augmentation
from .data import Dataset
from .errors import ConfigError, NumericError
from .models import (
    MSE,
    ModelParams,
    backward_from_cache,
    check_loss_pairing,
    encode_target,
    forward_cached,
    loss_grads,
    loss_values,
    output_mae,
    output_mae_grads,
    raw_outputs,
)
from .optim import ADAM, OptimizerState, optimizer_step


@dataclass(frozen=True)
class FairnessSpec:
    """Lipschitz factor K; both distances are fixed to MAE."""

    lipschitz: float = 1.0

    def __post_init__(self):
        if self.lipschitz < 0:
            raise ConfigError("Lipschitz factor K must be nonnegative")


def input_mae(u, v) -> float:
    """Distance d between two full (x, a) vectors: mean absolute error."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return float(np.mean(np.abs(u - v)))


def member_distances(subpop: SubPopulation) -> np.ndarray:
    """d(origin, member) for every member; entry 0 is 0 by identity."""
    return np.mean(np.abs(subpop.features - subpop.features[0]), axis=1)


def slack(member_features, origin_features, y_enc, model, spec: FairnessSpec) -> float:
    """Constraint slack D(y, f(member)) - K * d(origin, member).

    Positive means the accurate-fairness constraint is violated at this
    member. ``model`` is anything with a decision surface (ModelParams or a
    fitted estimator).
    """
    out = raw_outputs(model, np.atleast_2d(np.asarray(member_features, dtype=float)))
    d = input_mae(origin_features, member_features)
    return float(output_mae(np.atleast_1d(y_enc), out)[0] - spec.lipschitz * d)


def multiplier_step(lam, slack_value, rate):
    """Projected ascent: max(0, lambda + rate * slack).

    dL_AF/dlambda_ij is exactly the slack, so this is one dual ascent step.
    Accepts scalars or aligned arrays.
    """
    return np.maximum(0.0, lam + rate * slack_value)


@dataclass
class LagrangeState:
    """Per-record multiplier vectors (one entry per sub-population member)."""

    multipliers: list
    ascent_rate: float

    def all_values(self) -> np.ndarray:
        return np.concatenate(self.multipliers) if self.multipliers else np.zeros(0)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    learning_rate: float = 1e-3
    optimizer: str = ADAM
    loss: str = MSE
    fairness: FairnessSpec = field(default_factory=FairnessSpec)
    strategy: AugmentationStrategy = field(default_factory=AugmentationStrategy)
    seed: int = 0
    multiplier_init: float = 0.0
    ascent_rate: float = None  # None: share the descent learning rate
    tol: float = 1e-6

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError("epochs must be at least 1")
        if self.learning_rate <= 0:
            raise ConfigError("learning rate must be positive")
        if self.multiplier_init < 0:
            raise ConfigError("multiplier initialization must be nonnegative")
        if self.ascent_rate is not None and self.ascent_rate < 0:
            raise ConfigError("ascent rate must be nonnegative")
        if self.tol < 0:
            raise ConfigError("convergence tolerance must be nonnegative")

    @property
    def effective_ascent_rate(self) -> float:
        return self.learning_rate if self.ascent_rate is None else self.ascent_rate

    def fingerprint_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "optimizer": self.optimizer,
            "loss": self.loss,
            "lipschitz": self.fairness.lipschitz,
            "strategy": {"mode": self.strategy.mode, "cap": self.strategy.cap,
                         "seed": self.strategy.seed,
                         "combos": [list(c) for c in self.strategy.combos]},
            "seed": self.seed,
            "multiplier_init": self.multiplier_init,
            "ascent_rate": self.ascent_rate,
            "tol": self.tol,
        }


def laf_loss(subpop: SubPopulation, y_enc, model, lambdas, config: TrainConfig) -> float:
    """Per-record Lagrangian: summed loss plus multiplier-weighted slacks.

    Reduces to the plain summed loss when every multiplier is zero.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.shape != (len(subpop),):
        raise ConfigError(
            f"{lambdas.shape[0] if lambdas.ndim else 1} multipliers for "
            f"{len(subpop)} members")
    y_enc = np.atleast_1d(np.asarray(y_enc, dtype=float))
    outs = raw_outputs(model, subpop.features)
    losses = loss_values(config.loss, y_enc, outs)
    slacks = output_mae(y_enc, outs) - config.fairness.lipschitz * member_distances(subpop)
    return float(losses.sum() + (lambdas * slacks).sum())


@dataclass(frozen=True)
class TraceRow:
    epoch: int
    mean_laf: float
    violation_rate: float
    lambda_mean: float
    lambda_max: float
    lambda_min: float
    update_norm: float

    def to_dict(self):
        return {"epoch": self.epoch, "mean_laf": self.mean_laf,
                "violation_rate": self.violation_rate,
                "lambda_mean": self.lambda_mean, "lambda_max": self.lambda_max,
                "lambda_min": self.lambda_min, "update_norm": self.update_norm}


@dataclass
class TrainResult:
    params: ModelParams
    trace: list
    lagrange: LagrangeState


def write_trace(trace, path) -> None:
    with open(path, "w") as fh:
        for row in trace:
            fh.write(json.dumps(row.to_dict()) + "\n")


def read_trace(path):
    rows = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                rows.append(TraceRow(**json.loads(line)))
    return rows


def expected_outputs(arch_family, label_arity):
    return 1 if label_arity == 2 else label_arity


def _check_model(train: Dataset, model: ModelParams, config: TrainConfig) -> None:
    check_loss_pairing(model.arch, config.loss)
    schema = train.schema
    if model.input_dim != schema.n_features:
        raise ConfigError(
            f"model expects {model.input_dim} inputs, schema declares "
            f"{schema.n_features} feature columns")
    want = expected_outputs(model.arch.family, schema.label_arity)
    if model.n_outputs != want:
        raise ConfigError(
            f"model has {model.n_outputs} outputs, label arity {schema.label_arity} "
            f"needs {want}")


def train_siamese(train: Dataset, model: ModelParams, config: TrainConfig) -> TrainResult:
    """Fair-augmented constrained training over similar sub-populations.

    Visits records one at a time in a per-epoch seeded shuffle, stopping at
    the epoch cap or when the max-norm parameter change over an epoch drops
    below ``config.tol``. The input model is not mutated.
    """
    _check_model(train, model, config)
    params = model.copy()
    subpops = augment(train, config.strategy)
    dists = [member_distances(sp) for sp in subpops]
    targets = [encode_target(int(y), config.loss, params.n_outputs) for y in train.labels]
    lagrange = LagrangeState(
        multipliers=[np.full(len(sp), config.multiplier_init) for sp in subpops],
        ascent_rate=config.effective_ascent_rate,
    )
    opt = OptimizerState(config.optimizer, config.learning_rate, params)
    rng = np.random.default_rng(config.seed)
    K = config.fairness.lipschitz
    n = len(train)
    trace = []

    for epoch in range(1, config.epochs + 1):
        theta_before = params.flatten()
        laf_sum = 0.0
        violations = 0
        member_count = 0
        for i in rng.permutation(n):
            sp = subpops[i]
            outs, acts = forward_cached(params, sp.features)
            y_enc = targets[i]
            losses = loss_values(config.loss, y_enc, outs)
            slacks = output_mae(y_enc, outs) - K * dists[i]
            lam = multiplier_step(lagrange.multipliers[i], slacks, lagrange.ascent_rate)
            lagrange.multipliers[i] = lam
            laf_i = losses.sum() + float(lam @ slacks)
            if not np.isfinite(laf_i):
                raise NumericError(
                    f"non-finite training loss at epoch {epoch}, record {int(i)}")
            out_grad = (loss_grads(config.loss, y_enc, outs)
                        + lam[:, None] * output_mae_grads(y_enc, outs))
            optimizer_step(opt, params, backward_from_cache(params, acts, out_grad))
            laf_sum += laf_i
            violations += int((slacks > 0.0).sum())
            member_count += len(sp)
        all_lam = lagrange.all_values()
        update_norm = float(np.max(np.abs(params.flatten() - theta_before)))
        trace.append(TraceRow(
            epoch=epoch,
            mean_laf=laf_sum / n,
            violation_rate=violations / member_count,
            lambda_mean=float(all_lam.mean()),
            lambda_max=float(all_lam.max()),
            lambda_min=float(all_lam.min()),
            update_norm=update_norm,
        ))
        if update_norm < config.tol:
            break
    return TrainResult(params=params, trace=trace, lagrange=lagrange)


def train_baseline(train: Dataset, model: ModelParams, config: TrainConfig) -> TrainResult:
    """Unconstrained training over the original records.

    Literally the fair trainer with augmentation disabled and the
    multipliers frozen at zero, so the two share every optimizer, loss, and
    shuffle decision and differ only in the fairness mechanism.
    """
    cfg = replace(config, strategy=no_augmentation(),
                  multiplier_init=0.0, ascent_rate=0.0)
    return train_siamese(train, model, cfg)
