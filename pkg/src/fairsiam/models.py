"""From-scratch differentiable classifiers: linear-sigmoid (LR), linear
margin (SVM), and fully connected ReLU networks with sigmoid outputs.

Everything is plain numpy with hand-written reverse-mode gradients, so the
Lagrangian trainer can push arbitrary output-space gradient seeds through
``backward``. Binary models emit one sigmoid score (or one raw margin for
SVM); k-class networks emit one sigmoid per class, decoded by argmax.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError
from .schema import SchemaConfig

LR = "lr"
SVM = "svm"
FCNN = "fcnn"

MSE = "mse"
HINGE = "hinge"

SIGMOID = "sigmoid"
MARGIN = "margin"

# default hidden widths for FCNN(l); l counts layers including input/output
DEFAULT_HIDDEN = {3: (64, 32), 5: (64, 64, 32, 32)}


@dataclass(frozen=True)
class Architecture:
    family: str
    hidden: tuple = ()

    def __post_init__(self):
        if self.family not in (LR, SVM, FCNN):
            raise ConfigError(f"unknown architecture family {self.family!r}")
        if self.family != FCNN and self.hidden:
            raise ConfigError(f"{self.family} takes no hidden layers")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))

    @property
    def output_kind(self):
        return MARGIN if self.family == SVM else SIGMOID


def architecture(spec: str, hidden=None) -> Architecture:
    """Parse "lr", "svm", "fcnn3", "fcnn5", or "fcnn" with explicit widths."""
    spec = spec.lower()
    if spec == LR:
        return Architecture(LR)
    if spec == SVM:
        return Architecture(SVM)
    if spec.startswith(FCNN):
        if hidden is not None:
            return Architecture(FCNN, tuple(hidden))
        depth = spec[len(FCNN):]
        if not depth:
            raise ConfigError("fcnn needs a depth (fcnn3, fcnn5) or explicit widths")
        try:
            widths = DEFAULT_HIDDEN[int(depth)]
        except (ValueError, KeyError):
            raise ConfigError(f"no default hidden widths for architecture {spec!r}")
        return Architecture(FCNN, widths)
    raise ConfigError(f"unknown architecture {spec!r}")


class ModelParams:
    """Layer weights/biases for one classifier; mutated only by the optimizer."""

    def __init__(self, arch: Architecture, weights, biases):
        self.arch = arch
        self.weights = [np.asarray(w, dtype=float) for w in weights]
        self.biases = [np.asarray(b, dtype=float) for b in biases]
        dims = [w.shape for w in self.weights]
        for (a, b_), w, bias in zip(dims, self.weights, self.biases):
            if bias.shape != (b_,):
                raise ConfigError("bias shape does not chain with weight matrix")
        for k in range(len(dims) - 1):
            if dims[k][1] != dims[k + 1][0]:
                raise ConfigError("layer dimensions do not chain")

    @property
    def input_dim(self):
        return self.weights[0].shape[0]

    @property
    def n_outputs(self):
        return self.weights[-1].shape[1]

    @property
    def n_layers(self):
        return len(self.weights)

    def copy(self) -> "ModelParams":
        return ModelParams(self.arch, [w.copy() for w in self.weights],
                           [b.copy() for b in self.biases])

    def flatten(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.weights + self.biases])

    # sklearn-ish surface so metrics can treat params as a fitted model
    def decision_function(self, X):
        out = forward(self, np.atleast_2d(np.asarray(X, dtype=float)))
        return out[:, 0] if self.n_outputs == 1 else out

    def predict(self, X):
        out = forward(self, np.atleast_2d(np.asarray(X, dtype=float)))
        return decode_labels(out, self.arch.output_kind)


def init_model(arch: Architecture, input_dim: int, n_outputs: int, seed: int = 0) -> ModelParams:
    """Glorot-uniform weights, zero biases, seeded."""
    if arch.family in (LR, SVM) and n_outputs != 1:
        raise ConfigError(f"{arch.family} supports binary labels only")
    rng = np.random.default_rng(seed)
    dims = [input_dim, *arch.hidden, n_outputs]
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return ModelParams(arch, weights, biases)


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def forward_cached(model: ModelParams, X: np.ndarray):
    """Batched forward pass keeping post-activations for backprop."""
    acts = [X]
    h = X
    last = model.n_layers - 1
    for k, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ w + b
        if k < last:
            h = np.maximum(z, 0.0)
        elif model.arch.output_kind == SIGMOID:
            h = _sigmoid(z)
        else:
            h = z
        acts.append(h)
    return h, acts


def forward(model: ModelParams, x):
    """Model output for one feature vector (k,) or a batch (n, k)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.shape[1] != model.input_dim:
        raise DataError(
            f"input has {X.shape[1]} features, model expects {model.input_dim}")
    out, _ = forward_cached(model, X)
    return out[0] if single else out


def backward_from_cache(model: ModelParams, acts, out_grad: np.ndarray):
    """Exact reverse-mode gradients given d(scalar)/d(output) per batch row.

    Gradients sum over the batch, matching a summed scalar objective.
    """
    last = model.n_layers - 1
    out = acts[-1]
    if model.arch.output_kind == SIGMOID:
        delta = out_grad * out * (1.0 - out)
    else:
        delta = out_grad
    gw = [None] * model.n_layers
    gb = [None] * model.n_layers
    for k in range(last, -1, -1):
        gw[k] = acts[k].T @ delta
        gb[k] = delta.sum(axis=0)
        if k > 0:
            delta = (delta @ model.weights[k].T) * (acts[k] > 0.0)
    return gw, gb


def backward(model: ModelParams, x, out_grad):
    """Gradient of the scalar whose output-space gradient is ``out_grad``."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = x[None, :] if single else x
    G = np.atleast_2d(np.asarray(out_grad, dtype=float))
    if X.shape[1] != model.input_dim or G.shape != (X.shape[0], model.n_outputs):
        raise DataError("backward: input/seed shapes do not match the model")
    _, acts = forward_cached(model, X)
    return backward_from_cache(model, acts, G)


# ---------------------------------------------------------------------------
# generic model surface: metrics and the trainer accept anything exposing
# decision_function/predict (ModelParams, fitted estimators, test stubs)


def raw_outputs(model, X) -> np.ndarray:
    """Raw decision values as a 2-D (n, k) array."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if isinstance(model, ModelParams):
        return forward(model, X)
    out = np.asarray(model.decision_function(X), dtype=float)
    return out[:, None] if out.ndim == 1 else out


def predicted_labels(model, X) -> np.ndarray:
    """Decoded labels as a 1-D int array."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.asarray(model.predict(X), dtype=np.int64)


# ---------------------------------------------------------------------------
# label decoding


def decode_labels(outputs: np.ndarray, output_kind: str) -> np.ndarray:
    """Batch label decode: threshold for binary, lowest-index argmax otherwise."""
    outputs = np.atleast_2d(outputs)
    if outputs.shape[1] == 1:
        thresh = 0.0 if output_kind == MARGIN else 0.5
        return (outputs[:, 0] >= thresh).astype(np.int64)
    return np.argmax(outputs, axis=1).astype(np.int64)


def predict_label(output, schema: SchemaConfig, output_kind: str = SIGMOID) -> int:
    """Decode one model output vector to a label under the schema's arity."""
    out = np.atleast_1d(np.asarray(output, dtype=float))
    if out.shape[0] > 1 and out.shape[0] != schema.label_arity:
        raise DataError(
            f"output has {out.shape[0]} components, schema arity is {schema.label_arity}")
    return int(decode_labels(out[None, :], output_kind)[0])


# ---------------------------------------------------------------------------
# losses (targets are pre-encoded: scalar 0/1, one-hot, or +-1 for hinge)


def encode_target(y: int, loss_kind: str, n_outputs: int) -> np.ndarray:
    if loss_kind == HINGE:
        return np.array([2.0 * y - 1.0])
    if n_outputs == 1:
        return np.array([float(y)])
    enc = np.zeros(n_outputs)
    enc[y] = 1.0
    return enc


def loss_values(kind: str, y_enc: np.ndarray, outputs: np.ndarray) -> np.ndarray:
    """Per-row loss for a batch of outputs against one encoded target."""
    outputs = np.atleast_2d(outputs)
    if kind == MSE:
        return np.mean((outputs - y_enc) ** 2, axis=1)
    if kind == HINGE:
        return np.maximum(0.0, 1.0 - y_enc[0] * outputs[:, 0])
    raise ConfigError(f"unknown loss kind {kind!r}")


def loss_grads(kind: str, y_enc: np.ndarray, outputs: np.ndarray) -> np.ndarray:
    """d(loss)/d(output) per row; hinge subgradient at the kink is 0."""
    outputs = np.atleast_2d(outputs)
    if kind == MSE:
        return 2.0 * (outputs - y_enc) / outputs.shape[1]
    if kind == HINGE:
        active = (1.0 - y_enc[0] * outputs[:, 0]) > 0.0
        return (-y_enc[0] * active)[:, None]
    raise ConfigError(f"unknown loss kind {kind!r}")


def loss(kind: str, y_enc, output) -> float:
    """Scalar loss for a single output vector."""
    return float(loss_values(kind, np.atleast_1d(y_enc), np.atleast_1d(output))[0])


def output_mae(y_enc: np.ndarray, outputs: np.ndarray) -> np.ndarray:
    """Treatment distance D: mean absolute error rows vs the encoded target."""
    return np.mean(np.abs(np.atleast_2d(outputs) - y_enc), axis=1)


def output_mae_grads(y_enc: np.ndarray, outputs: np.ndarray) -> np.ndarray:
    """dD/d(output): sign/(k); sign(0) = 0."""
    outputs = np.atleast_2d(outputs)
    return np.sign(outputs - y_enc) / outputs.shape[1]


def check_loss_pairing(arch: Architecture, loss_kind: str) -> None:
    """Hinge belongs to the margin model, MSE to the sigmoid ones."""
    if loss_kind == HINGE and arch.family != SVM:
        raise ConfigError("hinge loss is only valid with the svm architecture")
    if loss_kind == MSE and arch.family == SVM:
        raise ConfigError("svm trains with hinge loss")
    if loss_kind not in (MSE, HINGE):
        raise ConfigError(f"unknown loss kind {loss_kind!r}")


# ---------------------------------------------------------------------------
# checkpoint io: one JSON header line, then raw little-endian float64 arrays
# (weights then biases per layer, C order) -- byte-exact round trip.


def save_model(model: ModelParams, path) -> None:
    header = {
        "format": "fairsiam-model",
        "version": 1,
        "family": model.arch.family,
        "hidden": list(model.arch.hidden),
        "input_dim": model.input_dim,
        "n_outputs": model.n_outputs,
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        for w, b in zip(model.weights, model.biases):
            fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_model(path) -> ModelParams:
    with open(path, "rb") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            raise DataError(f"{path}: not a model checkpoint")
        if header.get("format") != "fairsiam-model":
            raise DataError(f"{path}: not a model checkpoint")
        arch = Architecture(header["family"], tuple(header["hidden"]))
        dims = [header["input_dim"], *arch.hidden, header["n_outputs"]]
        weights, biases = [], []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            buf = fh.read(8 * fan_in * fan_out)
            weights.append(np.frombuffer(buf, dtype="<f8").reshape(fan_in, fan_out).copy())
            buf = fh.read(8 * fan_out)
            biases.append(np.frombuffer(buf, dtype="<f8").copy())
        if fh.read(1):
            raise DataError(f"{path}: trailing bytes after parameter arrays")
    return ModelParams(arch, weights, biases)
