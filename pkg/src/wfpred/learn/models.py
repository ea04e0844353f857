"""Common interface over the five classifiers, plus model files."""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from ..errors import ContractError, ModelFormatError, SchemaMismatchError
from .bayes import GaussianNB, fit_gnb
from .linear import LDAModel, LogisticModel, fit_lda, fit_logistic
from .tree import DecisionTree, RandomForest, grow_forest, grow_tree

KINDS = ("gnb", "lr", "lda", "dt", "rf")
MODEL_FORMAT = "wfpred-model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    lr_c: float = 0.1
    lr_penalty: str = "l2"
    lr_tol: float = 1e-6
    lr_max_iter: int = 1000
    lda_solver: str = "lsqr"
    dt_criterion: str = "gini"
    dt_splitter: str = "best"
    rf_n_trees: int = 100
    rf_max_features: str | int | None = "sqrt"
    rf_bootstrap: bool = True
    min_samples_leaf: int = 1
    max_depth: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ContractError(f"unknown model kind {self.kind!r}; expected one of {KINDS}")
        if self.lr_c <= 0:
            raise ContractError("lr_c must be positive")
        if self.rf_n_trees < 1:
            raise ContractError("rf_n_trees must be at least 1")
        if self.lr_penalty != "l2" or self.lda_solver != "lsqr":
            raise ContractError("only the l2 penalty and the lsqr LDA solver are implemented")
        if self.dt_criterion != "gini" or self.dt_splitter != "best":
            raise ContractError("only gini/best trees are implemented")
        if self.min_samples_leaf < 1:
            raise ContractError("min_samples_leaf must be at least 1")

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ContractError(f"unknown model spec keys: {sorted(unknown)}")
        return cls(**doc)


_ESTIMATORS = {
    "gnb": GaussianNB,
    "lr": LogisticModel,
    "lda": LDAModel,
    "dt": DecisionTree,
}


@dataclass(frozen=True)
class Prediction:
    label: int
    score: float


@dataclass
class TrainedModel:
    spec: ModelSpec
    estimator: object
    schema_fingerprint: str
    n_features: int
    mode: str = ""
    training_time: float = 0.0

    def check_rows(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise SchemaMismatchError(
                f"model expects {self.n_features} features, got {X.shape[1]}")
        return X

    def check_dataset(self, data) -> None:
        fp = data.schema.fingerprint()
        if fp != self.schema_fingerprint:
            raise SchemaMismatchError(
                f"dataset schema {fp[:12]} does not match model schema {self.schema_fingerprint[:12]}")

    def predict_batch(self, X):
        """(labels, failure scores) for every row of ``X``."""
        X = self.check_rows(X)
        return self.estimator.predict(X), self.estimator.predict_proba(X)


def train(spec: ModelSpec, data) -> TrainedModel:
    """Fit ``spec.kind`` on an encoded :class:`~wfpred.features.Dataset`."""
    X, y = data.rows, np.asarray(data.labels, dtype=np.int8)
    if len(y) == 0:
        raise ContractError("cannot train on an empty dataset")
    if X.shape[1] != data.schema.output_dimension:
        raise SchemaMismatchError(
            f"dataset has {X.shape[1]} columns but its schema declares {data.schema.output_dimension}")
    t0 = time.perf_counter()
    if spec.kind == "gnb":
        est = fit_gnb(X, y)
    elif spec.kind == "lr":
        est = fit_logistic(X, y, spec.lr_c, spec.lr_tol, spec.lr_max_iter)
    elif spec.kind == "lda":
        est = fit_lda(X, y)
    elif spec.kind == "dt":
        est = grow_tree(np.asfortranarray(X), y, min_samples_leaf=spec.min_samples_leaf,
                        max_depth=spec.max_depth)
    else:
        est = grow_forest(X, y, spec.rf_n_trees, spec.rf_max_features, spec.rf_bootstrap,
                          spec.seed, spec.min_samples_leaf, spec.max_depth)
    elapsed = time.perf_counter() - t0
    return TrainedModel(spec, est, data.schema.fingerprint(), X.shape[1],
                        data.schema.mode, elapsed)


def predict(model: TrainedModel, row) -> Prediction:
    labels, scores = model.predict_batch(np.asarray(row, dtype=np.float64).reshape(1, -1))
    return Prediction(int(labels[0]), float(scores[0]))


def _params_to_dict(kind, est):
    if kind == "rf":
        return {"trees": [t.to_dict() for t in est.trees], "seeds": [list(s) for s in est.seeds]}
    return est.to_dict()


def _params_from_dict(kind, doc):
    if kind == "rf":
        trees = [DecisionTree.from_dict(t) for t in doc["trees"]]
        return RandomForest(trees, [tuple(s) for s in doc["seeds"]])
    return _ESTIMATORS[kind].from_dict(doc)


def save_model(model: TrainedModel, path) -> None:
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "spec": asdict(model.spec),
        "schema_fingerprint": model.schema_fingerprint,
        "n_features": model.n_features,
        "mode": model.mode,
        "training_time": model.training_time,
        "params": _params_to_dict(model.spec.kind, model.estimator),
    }
    Path(path).write_text(json.dumps(doc, separators=(",", ":")) + "\n", encoding="utf-8")


def load_model(path) -> TrainedModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"cannot read model {path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise ModelFormatError(f"{path} is not a model file")
    if doc.get("version") != MODEL_VERSION:
        raise ModelFormatError(f"unsupported model version {doc.get('version')}")
    try:
        spec = ModelSpec.from_dict(doc["spec"])
        est = _params_from_dict(spec.kind, doc["params"])
        model = TrainedModel(spec, est, str(doc["schema_fingerprint"]), int(doc["n_features"]),
                             str(doc.get("mode", "")), float(doc.get("training_time", 0.0)))
    except (KeyError, TypeError, ValueError, ContractError) as exc:
        raise ModelFormatError(f"malformed model file {path}: {exc}") from exc
    return model
