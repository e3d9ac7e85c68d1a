"""Siamese fairness training and accurate-fairness auditing for tabular
classifiers."""

from .augment import AugmentationStrategy, SubPopulation, augment, enumerate_subpopulation, no_augmentation
from .data import Dataset, MinMaxNormalizer, Record, load_dataset, normalize, split
from .errors import ConfigError, DataError, FairsiamError, NumericError, SchemaError
from .estimators import BaselineClassifier, SiameseFairClassifier
from .metrics import (
    FairnessConfusionCounts,
    GroupSpec,
    MetricsReport,
    accuracy,
    af_rate,
    build_report,
    classify_prediction,
    consistency,
    fair_prf,
    fairness_confusion,
    fta_rate,
    group_metrics,
)
from .models import Architecture, ModelParams, architecture, forward, init_model, load_model, predict_label, save_model
from .schema import ColumnSpec, SchemaConfig, load_schema, save_schema
from .siamese import (
    FairnessSpec,
    LagrangeState,
    TrainConfig,
    laf_loss,
    multiplier_step,
    slack,
    train_baseline,
    train_siamese,
)
from .synth import synth_credit, synth_ctrip

__version__ = "0.1.0"
