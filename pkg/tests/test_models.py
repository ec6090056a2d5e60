import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import ridge_oracle
from viewrank.errors import DimensionMismatch, SingularSystem, TooFewSamples, UnfittedModel
from viewrank.models import (
    EstimatorSpec,
    ForestConfig,
    ForestModel,
    LinearModel,
    feature_importance,
    fit_forest,
    fit_linear,
    model_from_dict,
    predict_forest,
    predict_linear,
    rfe,
)


class TestLinear:
    def test_two_points(self):
        m = fit_linear([[1], [2]], [3, 5], alpha=0)
        assert m.weights[0] == pytest.approx(2)
        assert m.intercept == pytest.approx(1)
        assert predict_linear(m, [[3]])[0] == pytest.approx(7)

    def test_ridge_no_intercept(self):
        # closed form sum(xy) / (sum(x^2) + alpha) = 28 / 15
        m = fit_linear([[1], [2], [3]], [2, 4, 6], alpha=1, fit_intercept=False)
        assert m.weights[0] == pytest.approx(28 / 15, abs=1e-12)
        assert m.intercept == 0.0

    @pytest.mark.parametrize("alpha", [0.0, 0.3, 10.0])
    def test_constant_target(self, alpha):
        X = np.random.default_rng(1).normal(size=(6, 2))
        m = fit_linear(X, [4.0] * 6, alpha=alpha)
        np.testing.assert_array_equal(m.weights, 0.0)
        assert m.intercept == 4.0

    def test_zero_weights_predict_intercept(self):
        m = LinearModel(np.zeros(2), 3.5, 1.0, [0, 1])
        np.testing.assert_array_equal(predict_linear(m, np.ones((4, 2))), 3.5)

    def test_interpolation_consistency(self):
        X = np.array([[0.0, 1.0], [1.0, 0.0], [2.0, 3.0]])
        y = np.array([1.0, -2.0, 5.0])
        m = fit_linear(X, y, alpha=0)
        np.testing.assert_allclose(predict_linear(m, X), y, atol=1e-9)

    def test_singular(self):
        X = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])
        with pytest.raises(SingularSystem):
            fit_linear(X, [1, 2, 3], alpha=0)
        fit_linear(X, [1, 2, 3], alpha=0.5)

    def test_dimension_mismatch(self):
        m = fit_linear([[1], [2]], [3, 5], alpha=0)
        with pytest.raises(DimensionMismatch):
            predict_linear(m, [[1, 2]])

    def test_matches_oracle_random(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            n, d = int(rng.integers(4, 30)), int(rng.integers(1, 4))
            X, y = rng.normal(size=(n, d)), rng.normal(size=n)
            for alpha in (0.0, 1.0):
                for icpt in (True, False):
                    m = fit_linear(X, y, alpha=alpha, fit_intercept=icpt)
                    w, b = ridge_oracle(X, y, alpha, icpt)
                    np.testing.assert_allclose(m.weights, w, atol=1e-8)
                    assert m.intercept == pytest.approx(b, abs=1e-8)

    def test_standardized_predictions_match(self):
        rng = np.random.default_rng(2)
        X = rng.lognormal(size=(40, 3)) * [1, 100, 1e4]
        y = X @ [1.0, 0.1, 0.001] + rng.normal(size=40)
        raw = fit_linear(X, y, alpha=0)
        std = fit_linear(X, y, alpha=0, standardize=True)
        np.testing.assert_allclose(predict_linear(raw, X), predict_linear(std, X), rtol=1e-9)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**31), st.floats(0, 50), st.floats(0, 50))
    def test_shrinkage(self, seed, a1, a2):
        a1, a2 = sorted((a1, a2))
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(30, 3))
        y = X @ rng.normal(size=3) + rng.normal(size=30)
        w1 = fit_linear(X, y, alpha=a1, standardize=True).weights
        w2 = fit_linear(X, y, alpha=a2, standardize=True).weights
        assert np.linalg.norm(w2) <= np.linalg.norm(w1) + 1e-12


def _exhaustive_best_split(x, y, min_leaf):
    """Enumerate every threshold between distinct values; return the SSE-minimizing one."""
    best = None
    vals = np.unique(x)
    for a, b in zip(vals[:-1], vals[1:]):
        t = (a + b) / 2
        left, right = y[x <= t], y[x > t]
        if len(left) < min_leaf or len(right) < min_leaf:
            continue
        sse = ((left - left.mean()) ** 2).sum() + ((right - right.mean()) ** 2).sum()
        if best is None or sse < best[0]:
            best = (sse, t)
    return best


class TestForest:
    def test_constant_target(self):
        X = np.random.default_rng(0).normal(size=(40, 3))
        m = fit_forest(X, np.full(40, 2.5), ForestConfig(n_trees=5, seed=1))
        np.testing.assert_array_equal(predict_forest(m, np.random.default_rng(1).normal(size=(7, 3))), 2.5)
        np.testing.assert_array_equal(feature_importance(m), 0.0)

    def test_reproduces_training_points(self):
        X = np.array([[0.0], [1.0], [2.0]])
        y = np.array([0.0, 1.0, 2.0])
        cfg = ForestConfig(n_trees=1, bootstrap=False, min_samples_leaf=1, max_features_per_split=1)
        m = fit_forest(X, y, cfg)
        np.testing.assert_array_equal(predict_forest(m, X), y)
        # root split agrees with brute-force enumeration (first optimum on ties)
        sse, t = _exhaustive_best_split(X[:, 0], y, 1)
        assert m.trees[0].threshold[0] == t
        assert sse == pytest.approx(0.5)

    def test_root_split_matches_enumeration(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            x = rng.integers(0, 15, size=25).astype(float)
            y = rng.normal(size=25)
            cfg = ForestConfig(n_trees=1, bootstrap=False, min_samples_leaf=3, max_features_per_split=1)
            tree = fit_forest(x[:, None], y, cfg).trees[0]
            best = _exhaustive_best_split(x, y, 3)
            if best is None:
                assert tree.n_nodes == 1
                continue
            left = y[x <= tree.threshold[0]]
            right = y[x > tree.threshold[0]]
            got = ((left - left.mean()) ** 2).sum() + ((right - right.mean()) ** 2).sum()
            assert got == pytest.approx(best[0], rel=1e-9, abs=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31))
    def test_range_and_determinism(self, seed):
        rng = np.random.default_rng(seed)
        n, d = int(rng.integers(10, 60)), int(rng.integers(1, 5))
        X, y = rng.normal(size=(n, d)), rng.lognormal(size=n)
        cfg = ForestConfig(n_trees=8, min_samples_leaf=int(rng.integers(1, 5)), seed=seed)
        Xt = rng.normal(scale=3, size=(50, d))
        p1 = predict_forest(fit_forest(X, y, cfg), Xt)
        p2 = predict_forest(fit_forest(X, y, cfg), Xt)
        assert np.array_equal(p1, p2)
        assert p1.min() >= y.min() and p1.max() <= y.max()

    def test_threads_do_not_change_output(self):
        rng = np.random.default_rng(4)
        X, y = rng.normal(size=(80, 4)), rng.normal(size=80)
        cfg = ForestConfig(n_trees=12, seed=9)
        a = predict_forest(fit_forest(X, y, cfg, threads=1), X)
        b = predict_forest(fit_forest(X, y, cfg, threads=3), X)
        assert np.array_equal(a, b)

    def test_leaf_values_within_routed_targets(self):
        rng = np.random.default_rng(5)
        X, y = rng.normal(size=(60, 2)), rng.normal(size=60)
        m = fit_forest(X, y, ForestConfig(n_trees=1, bootstrap=False, min_samples_leaf=4))
        tree = m.trees[0]
        leaves = np.array([_leaf_of(tree, row) for row in X])
        for leaf in np.unique(leaves):
            routed = y[leaves == leaf]
            assert routed.min() <= tree.value[leaf] <= routed.max()
            assert len(routed) >= 4

    def test_importance_prefers_signal(self):
        rng = np.random.default_rng(42)
        X = rng.normal(size=(200, 2))
        m = fit_forest(X, X[:, 0].copy(), ForestConfig(n_trees=30, seed=42))
        imp = feature_importance(m)
        assert imp[0] > imp[1]
        assert imp.sum() == pytest.approx(1.0)

    def test_too_few_samples(self):
        with pytest.raises(TooFewSamples):
            fit_forest(np.zeros((9, 1)), np.zeros(9), ForestConfig(min_samples_leaf=5))

    def test_dimension_mismatch(self):
        m = fit_forest(np.random.default_rng(0).normal(size=(20, 2)), np.arange(20.0), ForestConfig(n_trees=2))
        with pytest.raises(DimensionMismatch):
            predict_forest(m, np.zeros((3, 3)))


def _leaf_of(tree, row):
    node = 0
    while tree.feature[node] >= 0:
        node = tree.left[node] if row[tree.feature[node]] <= tree.threshold[node] else tree.right[node]
    return node


class TestPersistence:
    def test_linear_round_trip(self):
        rng = np.random.default_rng(0)
        X, y = rng.normal(size=(30, 3)), rng.normal(size=30)
        m = fit_linear(X, y, alpha=1.0, standardize=True)
        back = model_from_dict(json.loads(json.dumps(m.to_dict())))
        assert isinstance(back, LinearModel)
        assert np.array_equal(back.predict(X), m.predict(X))

    def test_forest_round_trip(self):
        rng = np.random.default_rng(0)
        X, y = rng.normal(size=(60, 3)), rng.normal(size=60)
        m = fit_forest(X, y, ForestConfig(n_trees=6, min_samples_leaf=2, seed=3))
        back = model_from_dict(json.loads(json.dumps(m.to_dict())))
        assert isinstance(back, ForestModel)
        Xt = rng.normal(size=(40, 3))
        assert np.array_equal(back.predict(Xt), m.predict(Xt))
        # node order changes after reload, so importance sums may differ in the last ulp
        np.testing.assert_allclose(feature_importance(back), feature_importance(m), rtol=1e-12)


class TestImportanceAndRFE:
    def test_linear_importance(self):
        np.testing.assert_array_equal(
            feature_importance(LinearModel(np.array([2.0, -3.0]), 0.0, 0.0, [0, 1])), [2.0, 3.0]
        )

    def test_importance_unfitted(self):
        with pytest.raises(UnfittedModel):
            feature_importance(object())

    def test_rfe_keeps_all(self):
        X = np.random.default_rng(0).normal(size=(30, 5))
        assert rfe(X, X[:, 0], EstimatorSpec("ridge"), 5) == [0, 1, 2, 3, 4]

    @pytest.mark.parametrize("kind", ["ridge", "forest"])
    def test_rfe_finds_dominant_feature(self, kind):
        rng = np.random.default_rng(42)
        X = rng.normal(size=(150, 5))
        y = 5 * X[:, 2] + 0.1 * rng.normal(size=150)
        spec = EstimatorSpec(kind, forest=ForestConfig(n_trees=20, seed=1))
        trace = []
        assert rfe(X, y, spec, 1, trace=trace) == [2]
        assert [len(t) for t in trace] == [5, 4, 3, 2, 1]

    def test_rfe_contract(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(60, 8))
        keep = rfe(X, X @ rng.normal(size=8), EstimatorSpec("ridge"), 4)
        assert len(keep) == 4 and keep == sorted(set(keep)) and set(keep) <= set(range(8))

    def test_rfe_tie_drops_lowest_index(self):
        rng = np.random.default_rng(0)
        X = np.hstack([np.full((40, 2), 7.0), rng.normal(size=(40, 1))])
        y = 3 * X[:, 2]
        # both constant columns get weight exactly 0; the lower index goes first
        trace = []
        assert rfe(X, y, EstimatorSpec("ridge", alpha=1.0), 2, trace=trace) == [1, 2]
