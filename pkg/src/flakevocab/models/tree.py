"""Binary decision trees stored as flat node arrays.

Internal nodes route ``x[feature] <= threshold`` to ``left``. Leaves have
``feature == -1`` and carry ``value``: the flaky probability for
classification trees, the raw leaf weight for boosting trees.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import get_backend

LEAF = -1


@dataclass
class DecisionTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    @property
    def n_leaves(self) -> int:
        return int(np.count_nonzero(self.feature == LEAF))

    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] != LEAF:
                depths[self.left[i]] = depths[i] + 1
                depths[self.right[i]] = depths[i] + 1
        return int(depths.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = np.flatnonzero(self.feature[node] != LEAF)
        while active.size:
            cur = node[active]
            go_left = X[active, self.feature[cur]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
            active = active[self.feature[node[active]] != LEAF]
        return node

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTree":
        return cls(
            np.asarray(d["feature"], dtype=np.int64),
            np.asarray(d["threshold"], dtype=np.float64),
            np.asarray(d["left"], dtype=np.int64),
            np.asarray(d["right"], dtype=np.int64),
            np.asarray(d["value"], dtype=np.float64),
        )


class _Builder:
    def __init__(self):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []

    def add(self) -> int:
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.value.append(0.0)
        return len(self.feature) - 1

    def finish(self) -> DecisionTree:
        return DecisionTree(
            np.asarray(self.feature, dtype=np.int64),
            np.asarray(self.threshold, dtype=np.float64),
            np.asarray(self.left, dtype=np.int64),
            np.asarray(self.right, dtype=np.int64),
            np.asarray(self.value, dtype=np.float64),
        )


def _partition(XT, samples, feature, threshold):
    mask = XT[feature, samples] <= threshold
    return samples[mask], samples[~mask]


def build_gini_tree(
    XT: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    samples: np.ndarray,
    rng: np.random.Generator,
    max_features: int,
    max_depth: int | None = None,
    min_samples_leaf: int = 1,
    backend=None,
) -> DecisionTree:
    """Grow a classification tree depth-first on weighted samples.

    ``XT`` is the feature matrix transposed (features x samples, C order).
    Each node draws a fresh feature permutation from ``rng``.
    """
    kernel = get_backend(backend).gini if isinstance(backend, (str, type(None))) else backend.gini
    n_features = XT.shape[0]
    out = _Builder()
    stack = [(out.add(), np.ascontiguousarray(samples, dtype=np.intp), 0)]
    while stack:
        node, idx, depth = stack.pop()
        wn = w[idx]
        total = float(np.sum(wn))
        p = float(np.sum(wn * y[idx])) / total
        out.value[node] = p
        if (
            (max_depth is not None and depth >= max_depth)
            or idx.shape[0] < max(2, 2 * min_samples_leaf)
            or p == 0.0
            or p == 1.0
        ):
            continue
        order = rng.permutation(n_features).astype(np.intp)
        f, t, _ = kernel(XT, y, w, idx, order, max_features, min_samples_leaf)
        if f < 0:
            continue
        left_idx, right_idx = _partition(XT, idx, f, t)
        out.feature[node] = f
        out.threshold[node] = t
        left, right = out.add(), out.add()
        out.left[node], out.right[node] = left, right
        # LIFO: the left subtree is expanded first
        stack.append((right, right_idx, depth + 1))
        stack.append((left, left_idx, depth + 1))
    return out.finish()


GAIN_EPS = 1e-6


def build_grad_tree(
    XT: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    max_depth: int,
    l2_lambda: float,
    min_child_weight: float = 1.0,
    backend=None,
) -> DecisionTree:
    """Grow a regression tree on logistic-loss gradients and hessians.

    Leaf weight is ``-G / (H + l2_lambda)``. A split needs a loss reduction
    above ``GAIN_EPS``.
    """
    kernel = get_backend(backend).grad if isinstance(backend, (str, type(None))) else backend.grad
    features = np.arange(XT.shape[0], dtype=np.intp)
    out = _Builder()
    stack = [(out.add(), np.arange(XT.shape[1], dtype=np.intp), 0)]
    while stack:
        node, idx, depth = stack.pop()
        G = float(np.sum(g[idx]))
        H = float(np.sum(h[idx]))
        out.value[node] = -G / (H + l2_lambda)
        if depth >= max_depth or idx.shape[0] < 2:
            continue
        f, t, score = kernel(XT, g, h, idx, features, min_child_weight, l2_lambda)
        if f < 0 or score - G * G / (H + l2_lambda) <= GAIN_EPS:
            continue
        left_idx, right_idx = _partition(XT, idx, f, t)
        out.feature[node] = f
        out.threshold[node] = t
        left, right = out.add(), out.add()
        out.left[node], out.right[node] = left, right
        stack.append((right, right_idx, depth + 1))
        stack.append((left, left_idx, depth + 1))
    return out.finish()
