"""Tree ensembles and baseline predictors."""

from __future__ import annotations

import numpy as np

from ._kernels import BACKENDS, DEFAULT as DEFAULT_BACKEND, get_backend
from .baseline import BASELINES, ONLY_FALSE, ONLY_TRUE, RANDOMIZED, BaselineModel
from .boosting import GBTModel, GBTParams, train_gbt
from .forest import ForestParams, ModelError, RandomForestModel, train_random_forest
from .tree import DecisionTree

MODEL_KINDS = ("forest", "gbt", RANDOMIZED, ONLY_TRUE, ONLY_FALSE)


def _as_array(X) -> np.ndarray:
    if hasattr(X, "to_dense"):
        X = X.to_dense()
    return np.asarray(X, dtype=np.float64)


def predict_proba(model, X) -> np.ndarray:
    """Probability of the flaky class for every row."""
    X = _as_array(X)
    if X.ndim != 2:
        raise ModelError("X must be two-dimensional")
    if model.n_columns is not None and X.shape[1] != model.n_columns:
        raise ModelError(f"model expects {model.n_columns} columns, got {X.shape[1]}")
    return model.predict_proba(X)


def predict(model, X) -> np.ndarray:
    """Boolean flaky predictions at the fixed 0.5 threshold."""
    return predict_proba(model, X) >= 0.5


def train_model(kind: str, X, y, seed: int = 0, threads: int = 1, params=None, backend: str | None = None):
    kind = kind.replace("-", "_")
    X = _as_array(X)
    if kind == "forest":
        return train_random_forest(X, y, params, seed, threads, backend)
    if kind == "gbt":
        return train_gbt(X, y, params, seed, backend)
    if kind in BASELINES:
        return BaselineModel(kind, seed, X.shape[1])
    raise ModelError(f"unknown model kind {kind!r}")


__all__ = [
    "BACKENDS",
    "BASELINES",
    "BaselineModel",
    "DEFAULT_BACKEND",
    "DecisionTree",
    "ForestParams",
    "GBTModel",
    "GBTParams",
    "MODEL_KINDS",
    "ModelError",
    "RandomForestModel",
    "get_backend",
    "predict",
    "predict_proba",
    "train_gbt",
    "train_model",
    "train_random_forest",
]
