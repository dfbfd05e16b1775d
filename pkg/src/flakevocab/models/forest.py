from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .tree import DecisionTree, build_gini_tree


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int | None = None
    min_samples_leaf: int = 1
    max_features: str | int = "sqrt"
    bootstrap: bool = True

    def features_per_split(self, n_columns: int) -> int:
        if self.max_features == "sqrt":
            return max(1, math.isqrt(n_columns))
        if self.max_features in ("all", None):
            return n_columns
        return max(1, min(int(self.max_features), n_columns))


@dataclass
class RandomForestModel:
    trees: list[DecisionTree]
    params: ForestParams
    seed: int
    n_columns: int
    kind: str = field(default="forest", init=False)

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        total = np.zeros(X.shape[0], dtype=np.float64)
        for tree in self.trees:
            total += tree.predict_value(X)
        return total / len(self.trees)

    def to_dict(self) -> dict:
        return {
            "params": asdict(self.params),
            "seed": self.seed,
            "n_columns": self.n_columns,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RandomForestModel":
        return cls(
            [DecisionTree.from_dict(t) for t in d["trees"]],
            ForestParams(**d["params"]),
            int(d["seed"]),
            int(d["n_columns"]),
        )


def tree_rng(seed: int, tree_index: int) -> np.random.Generator:
    """Independent PCG64 stream per tree, derived from the root seed and index."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(tree_index,))))


def as_targets(y) -> np.ndarray:
    arr = np.asarray(
        [1.0 if v in ("flaky", True, 1) else 0.0 if v in ("non-flaky", False, 0) else np.nan for v in y],
        dtype=np.float64,
    )
    if np.isnan(arr).any():
        raise ModelError("labels must be binary (flaky / non-flaky)")
    return arr


def check_training_data(X: np.ndarray, y: np.ndarray) -> None:
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ModelError(f"X has shape {X.shape}, y has {y.shape[0]} labels")
    if X.shape[0] < 2:
        raise ModelError("need at least two training rows")
    if y.min() == y.max():
        raise ModelError("training labels contain a single class")


def train_random_forest(
    X: np.ndarray,
    y,
    params: ForestParams | None = None,
    seed: int = 0,
    threads: int = 1,
    backend: str | None = None,
) -> RandomForestModel:
    """Bagged Gini trees; tree ``i`` uses its own generator, so thread count never matters."""
    params = params or ForestParams()
    if params.n_trees < 1:
        raise ModelError("n_trees must be at least 1")
    X = np.asarray(X, dtype=np.float64)
    y = as_targets(y)
    check_training_data(X, y)
    XT = np.ascontiguousarray(X.T)
    n = X.shape[0]
    mtry = params.features_per_split(X.shape[1])

    def fit(i: int) -> DecisionTree:
        rng = tree_rng(seed, i)
        if params.bootstrap:
            counts = np.bincount(rng.integers(0, n, n), minlength=n).astype(np.float64)
        else:
            counts = np.ones(n, dtype=np.float64)
        samples = np.flatnonzero(counts).astype(np.intp)
        return build_gini_tree(
            XT, y, counts, samples, rng, mtry, params.max_depth, params.min_samples_leaf, backend
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trees = list(pool.map(fit, range(params.n_trees)))
    else:
        trees = [fit(i) for i in range(params.n_trees)]
    return RandomForestModel(trees, params, seed, X.shape[1])
