"""Uniform train/predict interface and the model file format."""

from __future__ import annotations

import dataclasses
import enum
import json
import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from ..core import N_FEATURES
from .boosting import BoostedModel, fit_boosting
from .cart import Tree
from .forest import PackedForest, fit_forest
from .knn import knn_predict

FORMAT = "walldetect-model"
VERSION = 1


class ModelKind(str, enum.Enum):
    KNN = "knn"
    RANDOM_FOREST = "rf"
    GRADIENT_BOOSTING = "gb"


class ModelSpecError(ValueError):
    pass


class TrainingError(ValueError):
    pass


class ModelFormatError(ValueError):
    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        super().__init__(f"{message} (at byte offset {offset})" if offset is not None else message)


@dataclass(frozen=True)
class ModelSpec:
    """Classifier choice and hyperparameters.

    ``rf_max_depth=None`` grows trees until pure; ``rf_feature_subset=None``
    means ``ceil(sqrt(n_features))``.
    """

    kind: ModelKind
    knn_k: int = 5
    rf_trees: int = 100
    rf_max_depth: int | None = None
    rf_feature_subset: int | None = None
    gb_stages: int = 100
    gb_learning_rate: float = 0.1
    gb_max_depth: int = 3
    seed: int = 0

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "kind", ModelKind(self.kind))
        except ValueError:
            raise ModelSpecError(f"unknown classifier kind {self.kind!r}") from None
        if self.knn_k < 1:
            raise ModelSpecError("knn_k must be >= 1")
        for name in ("rf_trees", "gb_stages", "gb_max_depth"):
            if getattr(self, name) < 1:
                raise ModelSpecError(f"{name} must be positive")
        for name in ("rf_max_depth", "rf_feature_subset"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ModelSpecError(f"{name} must be positive or null")
        if not 0 < self.gb_learning_rate <= 1:
            raise ModelSpecError("gb_learning_rate must lie in (0, 1]")
        if not 0 <= self.seed < 2**64:
            raise ModelSpecError("seed must fit in 64 bits")

    @property
    def name(self) -> str:
        return self.kind.value

    def feature_subset(self, n_features: int) -> int:
        if self.rf_feature_subset is not None:
            return min(self.rf_feature_subset, n_features)
        return math.ceil(math.sqrt(n_features))

    def replace(self, **changes: Any) -> "ModelSpec":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["kind"] = self.kind.value
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ModelSpec":
        known = {f.name for f in dataclasses.fields(cls)}
        if set(d) - known:
            raise ModelSpecError(f"unknown ModelSpec fields: {sorted(set(d) - known)}")
        return cls(**d)


@dataclass(frozen=True, eq=False)
class TrainedModel:
    spec: ModelSpec
    classes: tuple[str, ...]
    n_features: int
    payload: Any  # (X, y) for KNN, list[Tree] for RF, BoostedModel for GB

    def __post_init__(self) -> None:
        if self.spec.kind is ModelKind.RANDOM_FOREST:
            object.__setattr__(self, "_packed", PackedForest(self.payload, len(self.classes)))

    def predict_indices(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(f"expected feature vectors of dimension {self.n_features}, got shape {X.shape}")
        if not np.isfinite(X).all():
            raise ValueError("feature vectors must be finite")
        kind = self.spec.kind
        if kind is ModelKind.KNN:
            Xt, yt = self.payload
            return knn_predict(Xt, yt, X, self.spec.knn_k, len(self.classes))
        if kind is ModelKind.RANDOM_FOREST:
            return self._packed.predict(X)
        return self.payload.predict(X)

    def predict_many(self, X: np.ndarray) -> list[str]:
        return [self.classes[i] for i in self.predict_indices(X)]


def _class_index(y: Sequence[str], classes: Sequence[str]) -> np.ndarray:
    lookup = {c: i for i, c in enumerate(classes)}
    try:
        return np.array([lookup[v] for v in y], dtype=np.int64)
    except KeyError as exc:
        raise TrainingError(f"label {exc.args[0]!r} is not in the class set {list(classes)}") from None


def train(
    spec: ModelSpec,
    X: np.ndarray,
    y: Sequence[str],
    classes: Sequence[str] | None = None,
    n_jobs: int = 1,
) -> TrainedModel:
    """Fit ``spec`` on feature rows ``X`` with string labels ``y``.

    ``classes`` fixes the class order used for tie-breaking; by default it
    is the sorted set of labels.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = [str(v) for v in y]
    if X.ndim != 2 or len(X) == 0:
        raise TrainingError("training set is empty")
    if len(X) != len(y):
        raise TrainingError("X and y lengths differ")
    if not np.isfinite(X).all():
        raise TrainingError("training features must be finite")
    classes = tuple(sorted(set(y))) if classes is None else tuple(str(c) for c in classes)
    if len(set(classes)) != len(classes):
        raise TrainingError("duplicate class names")
    yi = _class_index(y, classes)
    n, d = X.shape
    K = len(classes)

    if spec.kind is ModelKind.KNN:
        if spec.knn_k > n:
            raise TrainingError(f"knn_k={spec.knn_k} exceeds the training size {n}")
        X_store = X.copy()
        X_store.setflags(write=False)
        payload = (X_store, yi)
    elif spec.kind is ModelKind.RANDOM_FOREST:
        payload = fit_forest(
            X, yi, K, spec.rf_trees, spec.rf_max_depth, spec.feature_subset(d), spec.seed, n_jobs
        )
    else:
        present = np.bincount(yi, minlength=K)
        if np.count_nonzero(present) < 2:
            raise TrainingError("gradient boosting needs at least two classes in the training set")
        if np.any(present == 0):
            raise TrainingError("gradient boosting needs every declared class in the training set")
        payload = fit_boosting(X, yi, K, spec.gb_stages, spec.gb_learning_rate, spec.gb_max_depth)
    return TrainedModel(spec, classes, d, payload)


def predict(model: TrainedModel, x: np.ndarray) -> str:
    """Label for one feature vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("predict takes a single feature vector; use predict_many for batches")
    return model.predict_many(x[None, :])[0]


# serialization -----------------------------------------------------------


def model_to_dict(model: TrainedModel) -> dict[str, Any]:
    kind = model.spec.kind
    if kind is ModelKind.KNN:
        Xt, yt = model.payload
        payload = {"rows": Xt.tolist(), "labels": yt.tolist()}
    elif kind is ModelKind.RANDOM_FOREST:
        payload = {"trees": [t.to_dict() for t in model.payload]}
    else:
        b: BoostedModel = model.payload
        payload = {
            "init": b.init.tolist(),
            "learning_rate": b.learning_rate,
            "scales": b.scales.tolist(),
            "train_deviance": b.train_deviance.tolist(),
            "stages": [[t.to_dict() for t in trees] for trees in b.stages],
        }
    return {
        "format": FORMAT,
        "version": VERSION,
        "spec": model.spec.to_dict(),
        "classes": list(model.classes),
        "n_features": model.n_features,
        "payload": payload,
    }


def save_model(model: TrainedModel) -> bytes:
    return json.dumps(model_to_dict(model), separators=(",", ":"), allow_nan=False).encode("utf-8")


def load_model(data: bytes | str) -> TrainedModel:
    text = data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"corrupt model file: {exc.msg}", exc.pos) from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise ModelFormatError("not a walldetect model file", 0)
    if doc.get("version") != VERSION:
        raise ModelFormatError(f"unsupported version {doc.get('version')!r} (this build reads version {VERSION})")
    try:
        spec = ModelSpec.from_dict(doc["spec"])
        classes = tuple(str(c) for c in doc["classes"])
        d = int(doc["n_features"])
        p = doc["payload"]
        if spec.kind is ModelKind.KNN:
            X = np.asarray(p["rows"], dtype=np.float64).reshape(-1, d)
            y = np.asarray(p["labels"], dtype=np.int64)
            if len(X) != len(y) or (len(y) and (y.min() < 0 or y.max() >= len(classes))):
                raise ValueError("stored neighbours are inconsistent")
            X.setflags(write=False)
            payload: Any = (X, y)
        elif spec.kind is ModelKind.RANDOM_FOREST:
            payload = [Tree.from_dict(t) for t in p["trees"]]
            if not payload:
                raise ValueError("forest has no trees")
        else:
            stages = [[Tree.from_dict(t) for t in trees] for trees in p["stages"]]
            payload = BoostedModel(
                np.asarray(p["init"], dtype=np.float64),
                stages,
                np.asarray(p["scales"], dtype=np.float64),
                float(p["learning_rate"]),
                np.asarray(p["train_deviance"], dtype=np.float64),
            )
            if len(payload.init) != len(classes) or any(len(s) != len(classes) for s in stages):
                raise ValueError("boosting stages do not match the class count")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ModelFormatError):
            raise
        raise ModelFormatError(f"malformed model payload: {exc!r}") from None
    if d != N_FEATURES and spec.kind is not ModelKind.KNN:
        pass  # models on other widths are allowed; dimension is checked at predict time
    return TrainedModel(spec, classes, d, payload)
