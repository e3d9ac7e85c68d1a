import numpy as np
import pytest

from fairsiam.data import Dataset
from fairsiam.schema import ColumnSpec, SchemaConfig


@pytest.fixture
def toy_schema():
    """Mixed column order: 2 numeric non-sensitive, binary + 3-valued sensitive."""
    return SchemaConfig(columns=(
        ColumnSpec("f1", "numeric", "nonsensitive"),
        ColumnSpec("gender", "categorical", "sensitive",
                   domain=("female", "male"), privileged="male"),
        ColumnSpec("f2", "numeric", "nonsensitive"),
        ColumnSpec("grade", "numeric", "sensitive",
                   domain=(0.0, 1.0, 2.0), privileged=2.0),
        ColumnSpec("y", "numeric", "label"),
    ), label_arity=2)


def make_toy_dataset(schema, n=12, seed=0):
    """Normalized toy dataset: sensitive values on the domain grid."""
    rng = np.random.default_rng(seed)
    feats = np.zeros((n, 4))
    feats[:, 0] = rng.uniform(0, 1, n)               # f1
    feats[:, 1] = rng.integers(0, 2, n)              # gender in {0, 1}
    feats[:, 2] = rng.uniform(0, 1, n)               # f2
    feats[:, 3] = rng.integers(0, 3, n) / 2.0        # grade in {0, .5, 1}
    labels = rng.integers(0, 2, n)
    return Dataset(schema=schema, features=feats, labels=labels)


@pytest.fixture
def toy_dataset(toy_schema):
    return make_toy_dataset(toy_schema)


class LookupModel:
    """Test stub: maps exact feature rows to fixed output vectors."""

    def __init__(self, table, n_outputs=1, default=0.0):
        self.table = {tuple(np.asarray(k, dtype=float)): np.atleast_1d(np.asarray(v, dtype=float))
                      for k, v in table.items()}
        self.n_outputs = n_outputs
        self.default = np.full(n_outputs, default)

    def decision_function(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.stack([self.table.get(tuple(row), self.default) for row in X])
        return out[:, 0] if self.n_outputs == 1 else out

    def predict(self, X):
        out = np.atleast_2d(self.decision_function(X))
        if out.shape[0] == 1 and np.atleast_2d(np.asarray(X)).shape[0] != 1:
            out = out.T
        if self.n_outputs == 1:
            return (out.reshape(-1) >= 0.5).astype(np.int64)
        return np.argmax(out, axis=1).astype(np.int64)


class ConstantModel:
    """Predicts one fixed label (and a matching score) everywhere."""

    def __init__(self, label, n_outputs=1):
        self.label = int(label)
        self.n_outputs = n_outputs

    def decision_function(self, X):
        n = np.atleast_2d(np.asarray(X)).shape[0]
        if self.n_outputs == 1:
            return np.full(n, 0.9 if self.label == 1 else 0.1)
        out = np.full((n, self.n_outputs), 0.1)
        out[:, self.label] = 0.9
        return out

    def predict(self, X):
        n = np.atleast_2d(np.asarray(X)).shape[0]
        return np.full(n, self.label, dtype=np.int64)


class LinearScoreModel:
    """Sigmoid of w.x + b; handy for planting exact decision boundaries."""

    def __init__(self, w, b=0.0):
        self.w = np.asarray(w, dtype=float)
        self.b = float(b)

    def decision_function(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return 1.0 / (1.0 + np.exp(-(X @ self.w + self.b)))

    def predict(self, X):
        return (self.decision_function(X) >= 0.5).astype(np.int64)
