"""Regression model suite: specs, training, prediction, persistence."""

from .base import KINDS, SCHEMAS, ModelSpec, TrainedModel, fit, predict
from .importance import ImportanceReport, feature_importances
from .io import FORMAT_VERSION, load_model, save_model

__all__ = [
    "KINDS",
    "SCHEMAS",
    "ModelSpec",
    "TrainedModel",
    "fit",
    "predict",
    "ImportanceReport",
    "feature_importances",
    "FORMAT_VERSION",
    "load_model",
    "save_model",
]
