import itertools

import numpy as np
import pandas as pd
import pytest

from solarcast.forest import ForestModel, ForestParams, ForestSchemaError, RegressionTree

SINGLE = ForestParams(n_trees=1, bootstrap=False)


def _sse(groups):
    return sum(((g - g.mean()) ** 2).sum() for g in groups if len(g))


def _exhaustive_min_sse(x, y, max_segments):
    """Best SSE over every contiguous partition of the distinct x values."""
    order = np.argsort(x, kind="stable")
    x, y = x[order], y[order]
    values = np.unique(x)
    groups = [y[x == v] for v in values]
    k = len(groups)
    best = np.inf
    for cuts in range(min(k, max_segments)):
        for pos in itertools.combinations(range(1, k), cuts):
            bounds = (0,) + pos + (k,)
            segs = [np.concatenate(groups[a:b]) for a, b in zip(bounds, bounds[1:])]
            best = min(best, _sse(segs))
    return best


def test_four_point_split():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([0.0, 0.0, 10.0, 10.0])
    tree = RegressionTree.grow(X, y, SINGLE)
    assert tree.feature[0] == 0
    assert 1 < tree.threshold[0] < 2
    leaves = sorted(tree.value[[tree.left[0], tree.right[0]]])
    assert leaves == [0.0, 10.0]
    # brute force: every split position, weighted variance
    scores = {t: _sse([y[:t], y[t:]]) for t in range(1, 4)}
    assert min(scores, key=scores.get) == 2


def test_memorizes_distinct_rows():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(300, 5))
    y = rng.normal(size=300)
    model = ForestModel.fit(X, y, SINGLE)
    assert np.array_equal(model.predict(X), y)


@pytest.mark.parametrize("seed", range(6))
def test_single_tree_matches_exhaustive_oracle(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 13))
    x = rng.integers(0, 6, n).astype(float)  # repeats make the optimum non-zero
    y = rng.normal(size=n).round(3)
    X = x.reshape(-1, 1)
    for depth, segments in ((1, 2), (None, n)):
        params = ForestParams(n_trees=1, bootstrap=False, max_depth=depth)
        tree = RegressionTree.grow(X, y, params)
        got = ((tree.predict(X) - y) ** 2).sum()
        assert got == pytest.approx(_exhaustive_min_sse(x, y, segments), abs=1e-9)


def test_constant_target_gives_one_leaf():
    X = np.random.default_rng(1).normal(size=(50, 3))
    tree = RegressionTree.grow(X, np.full(50, 7.0), SINGLE)
    assert tree.n_leaves == 1 and tree.value[0] == 7.0
    model = ForestModel.fit(X, np.full(50, 7.0), ForestParams(n_trees=3))
    assert np.all(model.feature_importances() == 0) and model.all_leaf


def test_prediction_is_mean_of_trees():
    rng = np.random.default_rng(2)
    X, y = rng.normal(size=(200, 4)), rng.normal(size=200)
    model = ForestModel.fit(X, y, ForestParams(n_trees=7, seed=3))
    Xq = rng.normal(size=(50, 4))
    per = model.predict_per_tree(Xq)
    assert per.shape == (7, 50)
    assert np.array_equal(model.predict(Xq), per.mean(axis=0))
    assert np.all(model.predict(Xq) >= y.min()) and np.all(model.predict(Xq) <= y.max())


def test_two_tree_mean():
    X = np.array([[0.0]])
    a = RegressionTree.grow(X, np.array([10.0]), SINGLE)
    b = RegressionTree.grow(X, np.array([20.0]), SINGLE)
    model = ForestModel([a, b], ["x0"], ForestParams(n_trees=2))
    assert model.predict(X)[0] == 15.0


def test_deterministic_bit_identical():
    rng = np.random.default_rng(4)
    X, y = rng.normal(size=(500, 6)), rng.normal(size=500)
    p = ForestParams(n_trees=5, seed=11, max_features="sqrt")
    a = ForestModel.fit(X, y, p).predict(X)
    b = ForestModel.fit(X, y, p).predict(X)
    assert a.tobytes() == b.tobytes()
    threaded = ForestModel.fit(X, y, ForestParams(n_trees=5, seed=11, max_features="sqrt", n_jobs=2))
    assert threaded.predict(X).tobytes() == a.tobytes()
    c = ForestModel.fit(X, y, ForestParams(n_trees=5, seed=12, max_features="sqrt")).predict(X)
    assert not np.array_equal(a, c)


def test_monotone_rescaling_keeps_partition():
    rng = np.random.default_rng(5)
    X = rng.uniform(0.1, 5, size=(150, 3))
    y = rng.normal(size=150)
    X2 = X.copy()
    X2[:, 1] = np.exp(X2[:, 1]) * 3 + 1
    t1 = RegressionTree.grow(X, y, SINGLE)
    t2 = RegressionTree.grow(X2, y, SINGLE)
    assert np.array_equal(t1.apply(X), t2.apply(X2))


def test_importances_pick_informative_feature():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(400, 4))
    y = 5 * X[:, 2] + 0.1 * rng.normal(size=400)
    model = ForestModel.fit(X, y, ForestParams(n_trees=10), feature_names=list("abcd"))
    imp = model.importance_series()
    assert imp.idxmax() == "c"
    assert imp.sum() == pytest.approx(1.0)
    assert (imp >= 0).all()


def test_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(7)
    X = pd.DataFrame(rng.normal(size=(200, 3)), columns=["p", "q", "r"])
    y = rng.normal(size=200)
    model = ForestModel.fit(X, y, ForestParams(n_trees=4, max_depth=6), target="ghi")
    path = tmp_path / "forest.npz"
    model.save(path)
    back = ForestModel.load(path)
    assert back.feature_names == ["p", "q", "r"] and back.target == "ghi"
    assert back.params == model.params
    assert np.array_equal(back.predict(X), model.predict(X))
    with pytest.raises(ForestSchemaError):
        back.predict(X[["p", "q"]])


def test_bad_inputs():
    with pytest.raises(ValueError):
        ForestModel.fit(np.array([[np.nan]]), np.array([1.0]))
    with pytest.raises(ValueError):
        ForestParams(max_features=1.5)
