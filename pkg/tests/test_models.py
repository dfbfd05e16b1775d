import json

import numpy as np
import pytest

from flakevocab.models import (
    BACKENDS,
    BaselineModel,
    DecisionTree,
    ForestParams,
    GBTParams,
    ModelError,
    RandomForestModel,
    predict,
    predict_proba,
    train_gbt,
    train_model,
    train_random_forest,
)
from flakevocab.models.boosting import sigmoid
from flakevocab.models.forest import tree_rng
from flakevocab.models.io import ChecksumError, ModelBundle, ModelFileError, VersionError, dumps, loads

needs_compiled = pytest.mark.skipif("compiled" not in BACKENDS, reason="compiled kernel not built")


def toy_separable():
    rng = np.random.default_rng(0)
    X = rng.uniform(-1, 1, size=(20, 2))
    y = X[:, 0] + X[:, 1] > 0
    return X, y


def noisy_data(n=150, d=12, seed=1):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 4, size=(n, d)).astype(float)
    X[:, 3] = rng.normal(size=n)
    y = (X[:, 0] + X[:, 1] + rng.normal(size=n)) > 3
    return X, y


def serialize(model):
    return json.dumps(model.to_dict(), sort_keys=True)


def test_forest_fits_separable_toy():
    X, y = toy_separable()
    model = train_random_forest(X, y, seed=3)
    assert np.array_equal(predict(model, X), y)
    assert model.n_trees == 100


def test_forest_deterministic_across_runs_and_threads():
    X, y = noisy_data()
    params = ForestParams(n_trees=12)
    a = serialize(train_random_forest(X, y, params, seed=5, threads=1))
    b = serialize(train_random_forest(X, y, params, seed=5, threads=1))
    c = serialize(train_random_forest(X, y, params, seed=5, threads=4))
    assert a == b == c
    assert serialize(train_random_forest(X, y, params, seed=6)) != a


def test_tree_streams_independent_of_schedule():
    assert tree_rng(9, 3).integers(1 << 30) == tree_rng(9, 3).integers(1 << 30)
    assert tree_rng(9, 3).integers(1 << 30) != tree_rng(9, 4).integers(1 << 30)


@needs_compiled
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_backends_build_identical_forests(seed):
    X, y = noisy_data(seed=seed)
    params = ForestParams(n_trees=8, min_samples_leaf=2)
    assert serialize(train_random_forest(X, y, params, seed, backend="python")) == serialize(
        train_random_forest(X, y, params, seed, backend="compiled")
    )


@needs_compiled
def test_backends_build_identical_gbts():
    X, y = noisy_data()
    params = GBTParams(n_rounds=10, max_depth=3)
    assert serialize(train_gbt(X, y, params, backend="python")) == serialize(
        train_gbt(X, y, params, backend="compiled")
    )


def test_forest_structure_invariants():
    X, y = noisy_data()
    model = train_random_forest(X, y, ForestParams(n_trees=5), seed=0)
    for tree in model.trees:
        internal = tree.feature >= 0
        assert np.all(tree.feature[internal] < X.shape[1])
        assert np.all((tree.value >= 0) & (tree.value <= 1))
        assert tree.n_leaves == tree.n_nodes - internal.sum()
        # binary tree: every internal node has two distinct children
        assert np.all(tree.left[internal] != tree.right[internal])


def test_forest_probability_is_tree_mean():
    X, y = noisy_data()
    model = train_random_forest(X, y, ForestParams(n_trees=7), seed=2)
    manual = np.mean([t.predict_value(X) for t in model.trees], axis=0)
    assert np.array_equal(predict_proba(model, X), manual)


def test_identical_leaf_trees_average():
    leaf = DecisionTree(*(np.asarray(v) for v in ([-1], [0.0], [-1], [-1], [0.7])))
    model = RandomForestModel([leaf, leaf, leaf], ForestParams(n_trees=3), 0, 2)
    assert np.allclose(predict_proba(model, np.zeros((4, 2))), 0.7)


def test_constant_matrix_gives_prior_leaves():
    X = np.ones((10, 3))
    y = np.array([1] * 7 + [0] * 3)
    model = train_random_forest(X, y, ForestParams(n_trees=5, bootstrap=False), seed=0)
    assert all(t.n_nodes == 1 and t.value[0] == pytest.approx(0.7) for t in model.trees)


def test_forest_scale_invariance():
    X, y = noisy_data()
    scaled = X * np.array([3.0, 0.25] + [1.0] * (X.shape[1] - 2))
    params = ForestParams(n_trees=10)
    a = train_random_forest(X, y, params, seed=4)
    b = train_random_forest(scaled, y, params, seed=4)
    rng = np.random.default_rng(8)
    X_new = rng.integers(0, 4, size=(50, X.shape[1])).astype(float)
    X_new_scaled = X_new * np.array([3.0, 0.25] + [1.0] * (X.shape[1] - 2))
    assert np.array_equal(predict_proba(a, X_new), predict_proba(b, X_new_scaled))


def test_single_class_rejected():
    X = np.zeros((4, 2))
    with pytest.raises(ModelError):
        train_random_forest(X, [1, 1, 1, 1])
    with pytest.raises(ModelError):
        train_gbt(X, [0, 0, 0, 0])


def test_column_mismatch_rejected():
    X, y = toy_separable()
    model = train_random_forest(X, y, ForestParams(n_trees=2))
    with pytest.raises(ModelError, match="columns"):
        predict(model, np.zeros((3, 5)))


def _grad_stats(model, X, y, rounds):
    margin = np.full(X.shape[0], model.base_score)
    for r in range(rounds):
        margin = margin + model.params.learning_rate * model.trees[r].predict_value(X)
    p = sigmoid(margin)
    return p - y, p * (1 - p)


def test_gbt_leaf_values_match_newton_step():
    X, y = noisy_data()
    y = y.astype(float)
    model = train_gbt(X, y, GBTParams(n_rounds=6, max_depth=3, l2_lambda=1.0))
    for r, tree in enumerate(model.trees):
        g, h = _grad_stats(model, X, y, r)
        leaves = tree.apply(X)
        for leaf in np.unique(leaves):
            rows = leaves == leaf
            expected = -g[rows].sum() / (h[rows].sum() + 1.0)
            assert abs(tree.value[leaf] - expected) <= 1e-9


def test_gbt_loss_strictly_decreases_on_separable_toy():
    X, y = toy_separable()
    model = train_gbt(X, y, GBTParams(n_rounds=50))
    assert all(b < a for a, b in zip(model.train_loss, model.train_loss[1:]))


def test_gbt_depth_zero_predicts_prior():
    X, y = noisy_data()
    model = train_gbt(X, y, GBTParams(n_rounds=1, max_depth=0))
    prior = y.mean()
    assert model.base_score == pytest.approx(np.log(prior / (1 - prior)))
    assert np.allclose(model.decision_function(X), model.base_score)


def test_gbt_zero_learning_rate():
    X, y = noisy_data()
    model = train_gbt(X, y, GBTParams(n_rounds=5, learning_rate=0.0))
    assert np.all(model.decision_function(X) == model.base_score)
    p = predict_proba(model, X)
    assert np.all((p > 0) & (p < 1))


def test_baselines():
    X = np.zeros((1000, 3))
    assert predict(BaselineModel("only_true"), X).all()
    assert not predict(BaselineModel("only-false"), X).any()
    frac = predict(BaselineModel("randomized", seed=11), X).mean()
    assert abs(frac - 0.5) <= 0.05
    assert np.array_equal(predict_proba(BaselineModel("randomized", 3), X), predict_proba(BaselineModel("randomized", 3), X))
    with pytest.raises(ValueError):
        BaselineModel("coin")


@pytest.mark.parametrize("kind", ["forest", "gbt", "randomized", "only-true", "only-false"])
def test_model_file_roundtrip(kind):
    X, y = noisy_data(n=60)
    params = {"forest": ForestParams(n_trees=3), "gbt": GBTParams(n_rounds=3)}.get(kind)
    model = train_model(kind, X, y, seed=2, params=params)
    bundle = ModelBundle(model, "bow", "# vocab\n", ["def"], "python", {"seed": 2})
    data = dumps(bundle)
    again = loads(data)
    assert dumps(again) == data
    assert np.array_equal(predict_proba(again.model, X), predict_proba(model, X))


def test_model_file_errors():
    X, y = noisy_data(n=40)
    data = dumps(ModelBundle(train_model("gbt", X, y, params=GBTParams(n_rounds=2)), "tfidf"))
    with pytest.raises(ChecksumError):
        loads(data.replace(b'"tfidf"', b'"bow"'))
    header, body = data.split(b"\n", 1)
    with pytest.raises(VersionError):
        loads(header.replace(b" 1 ", b" 2 ") + b"\n" + body)
    with pytest.raises(ModelFileError):
        loads(b"hello\nworld")
    with pytest.raises(ModelError):
        train_model("svm", X, y)
