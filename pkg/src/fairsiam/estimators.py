"""sklearn-style estimators wrapping the trainers.

Both classifiers take a schema (column roles, sensitive domains, label
arity) at construction and numeric feature matrices at fit time. Features
are expected in schema column order, normalized to [0,1] (see
``MinMaxNormalizer``); labels are class indices. ``get_params`` /
``set_params`` / ``clone`` work as usual, so the estimators drop into
pipelines and model-selection utilities.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .augment import AugmentationStrategy, no_augmentation
from .data import Dataset
from .errors import ConfigError
from .models import FCNN, LR, SVM, architecture, init_model
from .siamese import (
    FairnessSpec,
    TrainConfig,
    train_baseline,
    train_siamese,
)

# paper-style defaults: hinge+adam for the margin model, mse elsewhere,
# plain gradient descent for the linear-sigmoid model
_DEFAULT_LOSS = {LR: "mse", SVM: "hinge", FCNN: "mse"}
_DEFAULT_OPTIMIZER = {LR: "sgd", SVM: "adam", FCNN: "adam"}


class BaselineClassifier(BaseEstimator, ClassifierMixin):
    """Unconstrained classifier trained by per-record gradient updates."""

    def __init__(self, schema=None, architecture="fcnn3", loss=None,
                 optimizer=None, learning_rate=1e-3, epochs=100, tol=1e-6,
                 seed=0, hidden=None):
        self.schema = schema
        self.architecture = architecture
        self.loss = loss
        self.optimizer = optimizer
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.tol = tol
        self.seed = seed
        self.hidden = hidden

    # ---- assembly helpers -------------------------------------------------

    def _arch(self):
        return architecture(self.architecture, hidden=self.hidden)

    def _resolved_loss(self, arch):
        return self.loss if self.loss is not None else _DEFAULT_LOSS[arch.family]

    def _resolved_optimizer(self, arch):
        return (self.optimizer if self.optimizer is not None
                else _DEFAULT_OPTIMIZER[arch.family])

    def _train_config(self, arch) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs, learning_rate=self.learning_rate,
            optimizer=self._resolved_optimizer(arch),
            loss=self._resolved_loss(arch), seed=self.seed, tol=self.tol)

    def _dataset(self, X, y) -> Dataset:
        if self.schema is None:
            raise ConfigError(f"{type(self).__name__} needs a schema")
        X, y = check_X_y(X, y, dtype=float)
        return Dataset(schema=self.schema, features=X, labels=np.asarray(y, dtype=np.int64))

    def _init_model(self, arch):
        from .siamese import expected_outputs
        n_out = expected_outputs(arch.family, self.schema.label_arity)
        return init_model(arch, self.schema.n_features, n_out, seed=self.seed)

    # ---- estimator surface ------------------------------------------------

    def fit(self, X, y):
        ds = self._dataset(X, y)
        arch = self._arch()
        result = train_baseline(ds, self._init_model(arch), self._train_config(arch))
        self.params_ = result.params
        self.trace_ = result.trace
        self.classes_ = np.arange(self.schema.label_arity)
        self.n_features_in_ = ds.features.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "params_")
        return self.params_.decision_function(check_array(X, dtype=float))

    def predict(self, X):
        check_is_fitted(self, "params_")
        return self.params_.predict(check_array(X, dtype=float))


class SiameseFairClassifier(BaselineClassifier):
    """Classifier trained under the accurate-fairness constraint.

    Each record is replaced by its similar sub-population (``augmentation``:
    "full", "extremes", or "none"); per-member Lagrange multipliers ascend
    on the constraint slack while the shared parameters descend on the
    Lagrangian. ``lipschitz`` is the constraint factor K.
    """

    def __init__(self, schema=None, architecture="fcnn3", loss=None,
                 optimizer=None, learning_rate=1e-3, epochs=100, tol=1e-6,
                 seed=0, hidden=None, lipschitz=1.0, augmentation="full",
                 cap=None, multiplier_init=0.0, ascent_rate=None):
        super().__init__(schema=schema, architecture=architecture, loss=loss,
                         optimizer=optimizer, learning_rate=learning_rate,
                         epochs=epochs, tol=tol, seed=seed, hidden=hidden)
        self.lipschitz = lipschitz
        self.augmentation = augmentation
        self.cap = cap
        self.multiplier_init = multiplier_init
        self.ascent_rate = ascent_rate

    def _strategy(self) -> AugmentationStrategy:
        if self.augmentation == "none":
            return no_augmentation()
        return AugmentationStrategy(mode=self.augmentation, cap=self.cap,
                                    seed=self.seed)

    def fit(self, X, y):
        ds = self._dataset(X, y)
        arch = self._arch()
        config = TrainConfig(
            epochs=self.epochs, learning_rate=self.learning_rate,
            optimizer=self._resolved_optimizer(arch),
            loss=self._resolved_loss(arch),
            fairness=FairnessSpec(lipschitz=self.lipschitz),
            strategy=self._strategy(), seed=self.seed,
            multiplier_init=self.multiplier_init,
            ascent_rate=self.ascent_rate, tol=self.tol)
        result = train_siamese(ds, self._init_model(arch), config)
        self.params_ = result.params
        self.trace_ = result.trace
        self.lagrange_ = result.lagrange
        self.classes_ = np.arange(self.schema.label_arity)
        self.n_features_in_ = ds.features.shape[1]
        return self
