"""Plain SGD and Adam over ModelParams, updating in place.

Adam follows the published recurrence with bias correction:
    m <- b1*m + (1-b1)*g          v <- b2*v + (1-b2)*g^2
    p <- p - lr * m_hat / (sqrt(v_hat) + eps)
"""
from __future__ import annotations

import numpy as np

from .errors import ConfigError, NumericError
from .models import ModelParams

SGD = "sgd"
ADAM = "adam"


class OptimizerState:
    def __init__(self, kind, learning_rate, model: ModelParams,
                 beta1=0.9, beta2=0.999, eps=1e-8):
        if kind not in (SGD, ADAM):
            raise ConfigError(f"unknown optimizer kind {kind!r}")
        if learning_rate <= 0:
            raise ConfigError("learning rate must be positive")
        if not (0.0 <= beta1 < 1.0 and 0.0 <= beta2 < 1.0):
            raise ConfigError("adam betas must lie in [0, 1)")
        self.kind = kind
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        if kind == ADAM:
            shapes = model.weights + model.biases
            self.m = [np.zeros_like(a) for a in shapes]
            self.v = [np.zeros_like(a) for a in shapes]


def optimizer_step(opt: OptimizerState, model: ModelParams, grads) -> None:
    """Apply one update from ``grads = (grad_weights, grad_biases)``."""
    gw, gb = grads
    flat_params = model.weights + model.biases
    flat_grads = list(gw) + list(gb)
    for idx, g in enumerate(flat_grads):
        if not np.all(np.isfinite(g)):
            bad = tuple(int(v) for v in np.argwhere(~np.isfinite(g))[0])
            raise NumericError(
                f"non-finite gradient in parameter array {idx} at index {bad}")
    opt.step_count += 1
    if opt.kind == SGD:
        for p, g in zip(flat_params, flat_grads):
            p -= opt.learning_rate * g
        return
    t = opt.step_count
    for idx, (p, g) in enumerate(zip(flat_params, flat_grads)):
        m = opt.m[idx]
        v = opt.v[idx]
        m *= opt.beta1
        m += (1.0 - opt.beta1) * g
        v *= opt.beta2
        v += (1.0 - opt.beta2) * g * g
        m_hat = m / (1.0 - opt.beta1 ** t)
        v_hat = v / (1.0 - opt.beta2 ** t)
        p -= opt.learning_rate * m_hat / (np.sqrt(v_hat) + opt.eps)
