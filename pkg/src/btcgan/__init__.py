"""Tabular GAN augmentation toolkit for address-behaviour datasets.

Trains generator/discriminator pairs on normalized address-feature
rows under configurable optimizer, dataset-size and batch-size
settings, stops training through a thresholded evaluation phase, and
scores synthetic-versus-real similarity with a from-scratch
random-forest baseline classifier.
"""

__version__ = "0.1.0"

from .data import (
    AddressRecord,
    CLASSES,
    fit_normalizer,
    load_records,
    normalize,
    denormalize,
    reconstruct_features,
    reduce_features,
    save_records,
    stratified_split,
    synth_ground_truth,
)
from .forest import (
    ForestHyperparams,
    ForestModel,
    confidence_value,
    evaluate,
    load_forest,
    predict,
    save_forest,
    train_forest,
)
from .gan import GanConfig, GanModel, TrainOutcome, build_gan, evaluate_stop, generate, train, train_epoch
from .network import DenseNetwork, GradientBundle, bce_loss, gradient_check
from .optim import Adam, RmsProp
from .sweep import SweepReport, SweepSpec, emit_report, parse_report, run_sweep

__all__ = [
    "AddressRecord", "CLASSES", "fit_normalizer", "load_records", "normalize",
    "denormalize", "reconstruct_features", "reduce_features", "save_records",
    "stratified_split", "synth_ground_truth",
    "ForestHyperparams", "ForestModel", "confidence_value", "evaluate",
    "load_forest", "predict", "save_forest", "train_forest",
    "GanConfig", "GanModel", "TrainOutcome", "build_gan", "evaluate_stop",
    "generate", "train", "train_epoch",
    "DenseNetwork", "GradientBundle", "bce_loss", "gradient_check",
    "Adam", "RmsProp",
    "SweepReport", "SweepSpec", "emit_report", "parse_report", "run_sweep",
]
