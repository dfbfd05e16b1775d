from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

RANDOMIZED = "randomized"
ONLY_TRUE = "only_true"
ONLY_FALSE = "only_false"
BASELINES = (RANDOMIZED, ONLY_TRUE, ONLY_FALSE)


@dataclass
class BaselineModel:
    """Trivial reference predictors.

    ``randomized`` draws a fair coin per row from PCG64(seed), so the same
    seed and row count always give the same predictions.
    """

    baseline: str
    seed: int = 0
    n_columns: int | None = None
    kind: str = field(default="baseline", init=False)

    def __post_init__(self) -> None:
        self.baseline = self.baseline.replace("-", "_")
        if self.baseline not in BASELINES:
            raise ValueError(f"unknown baseline {self.baseline!r}")

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        n = X.shape[0]
        if self.baseline == ONLY_TRUE:
            return np.ones(n)
        if self.baseline == ONLY_FALSE:
            return np.zeros(n)
        rng = np.random.Generator(np.random.PCG64(self.seed))
        return rng.integers(0, 2, n).astype(np.float64)

    def to_dict(self) -> dict:
        return {"baseline": self.baseline, "seed": self.seed, "n_columns": self.n_columns}

    @classmethod
    def from_dict(cls, d: dict) -> "BaselineModel":
        return cls(d["baseline"], int(d["seed"]), d.get("n_columns"))
