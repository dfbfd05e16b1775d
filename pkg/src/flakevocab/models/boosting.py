from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .forest import ModelError, as_targets, check_training_data
from .tree import DecisionTree, build_grad_tree


@dataclass(frozen=True)
class GBTParams:
    n_rounds: int = 100
    max_depth: int = 6
    learning_rate: float = 0.3
    l2_lambda: float = 1.0
    min_child_weight: float = 1.0


def sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-z))


def log_loss(y: np.ndarray, p: np.ndarray) -> float:
    eps = 1e-15
    p = np.clip(p, eps, 1.0 - eps)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


@dataclass
class GBTModel:
    trees: list[DecisionTree]
    params: GBTParams
    base_score: float
    seed: int
    n_columns: int
    train_loss: list[float] = field(default_factory=list)
    kind: str = field(default="gbt", init=False)

    def decision_function(self, X: np.ndarray, n_rounds: int | None = None) -> np.ndarray:
        total = np.zeros(X.shape[0], dtype=np.float64)
        for tree in self.trees[:n_rounds]:
            total += tree.predict_value(X)
        return self.base_score + self.params.learning_rate * total

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return sigmoid(self.decision_function(X))

    def to_dict(self) -> dict:
        return {
            "params": asdict(self.params),
            "base_score": self.base_score,
            "seed": self.seed,
            "n_columns": self.n_columns,
            "train_loss": self.train_loss,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GBTModel":
        return cls(
            [DecisionTree.from_dict(t) for t in d["trees"]],
            GBTParams(**d["params"]),
            float(d["base_score"]),
            int(d["seed"]),
            int(d["n_columns"]),
            [float(v) for v in d.get("train_loss", [])],
        )


def train_gbt(
    X: np.ndarray,
    y,
    params: GBTParams | None = None,
    seed: int = 0,
    backend: str | None = None,
) -> GBTModel:
    """Newton boosting on logistic loss.

    The margin starts at the prior log-odds of the training labels. Every
    round fits one depth-limited tree to the current gradients and hessians.
    No row or column subsampling is done, so ``seed`` is recorded only.
    """
    params = params or GBTParams()
    if params.n_rounds < 0 or params.max_depth < 0:
        raise ModelError("n_rounds and max_depth must be non-negative")
    X = np.asarray(X, dtype=np.float64)
    y = as_targets(y)
    check_training_data(X, y)
    XT = np.ascontiguousarray(X.T)

    prior = float(np.mean(y))
    base = math.log(prior / (1.0 - prior))
    margin = np.full(X.shape[0], base)
    trees: list[DecisionTree] = []
    losses = [log_loss(y, sigmoid(margin))]
    for _ in range(params.n_rounds):
        p = sigmoid(margin)
        g = p - y
        h = p * (1.0 - p)
        tree = build_grad_tree(
            XT, g, h, params.max_depth, params.l2_lambda, params.min_child_weight, backend
        )
        trees.append(tree)
        margin = margin + params.learning_rate * tree.predict_value(X)
        losses.append(log_loss(y, sigmoid(margin)))
    return GBTModel(trees, params, base, seed, X.shape[1], losses)
