"""Classifiers: k-nearest neighbours, random forest and gradient boosting."""

from .model import (
    ModelFormatError,
    ModelKind,
    ModelSpec,
    ModelSpecError,
    TrainedModel,
    TrainingError,
    load_model,
    predict,
    save_model,
    train,
)

__all__ = [
    "ModelFormatError",
    "ModelKind",
    "ModelSpec",
    "ModelSpecError",
    "TrainedModel",
    "TrainingError",
    "load_model",
    "predict",
    "save_model",
    "train",
]
