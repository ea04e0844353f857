"""Classifiers written from scratch: GNB, LR, LDA, DT and RF."""

from .models import (
    KINDS,
    ModelSpec,
    Prediction,
    TrainedModel,
    load_model,
    predict,
    save_model,
    train,
)
from .tree import Split, best_split, gini_impurity

__all__ = [
    "KINDS", "ModelSpec", "Prediction", "TrainedModel", "load_model", "predict",
    "save_model", "train", "Split", "best_split", "gini_impurity",
]
