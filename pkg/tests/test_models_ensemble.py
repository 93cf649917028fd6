import numpy as np
import pytest

from factorforge.models import (
    BoostConfig,
    ForestConfig,
    evaluate,
    fit_gradient_boosting,
    fit_ols,
    fit_random_forest,
    fit_ridge,
    fit_tree,
    load_model,
    model_from_dict,
    model_to_dict,
    save_model,
)


def _data(rng, n=200, d=4, noise=0.1):
    X = rng.normal(size=(n, d))
    y = np.sin(X[:, 0]) + 0.5 * X[:, 1] + rng.normal(size=n) * noise
    return X, y


class TestForest:
    def test_deterministic_per_seed(self, rng):
        X, y = _data(rng)
        a = fit_random_forest(X, y, ForestConfig(n_estimators=10, seed=5))
        b = fit_random_forest(X, y, ForestConfig(n_estimators=10, seed=5))
        np.testing.assert_array_equal(a.predict(X), b.predict(X))
        c = fit_random_forest(X, y, ForestConfig(n_estimators=10, seed=6))
        assert not np.array_equal(a.predict(X), c.predict(X))

    def test_prediction_is_tree_average(self, rng):
        X, y = _data(rng)
        m = fit_random_forest(X, y, ForestConfig(n_estimators=7, max_depth=3))
        acc = np.zeros(X.shape[0])
        for t in m.trees:
            acc += t.predict(X)
        np.testing.assert_array_equal(m.predict(X), acc / 7)

    def test_trees_vary_across_bootstrap_draws(self, rng):
        X, y = _data(rng)
        m = fit_random_forest(X, y, ForestConfig(n_estimators=3, max_depth=4))
        p0, p1 = m.trees[0].predict(X), m.trees[1].predict(X)
        assert not np.array_equal(p0, p1)

    def test_bootstrap_differs_from_plain_tree(self, rng):
        X, y = _data(rng)
        single = fit_random_forest(X, y, ForestConfig(n_estimators=1, max_depth=4))
        plain = fit_tree(X, y, max_depth=4)
        assert not np.array_equal(single.trees[0].predict(X), plain.predict(X))

    def test_prefix_stability(self, rng):
        # tree i depends only on (seed, i): a bigger forest starts the same way
        X, y = _data(rng, n=80)
        small = fit_random_forest(X, y, ForestConfig(n_estimators=3, seed=9))
        large = fit_random_forest(X, y, ForestConfig(n_estimators=6, seed=9))
        for a, b in zip(small.trees, large.trees[:3]):
            np.testing.assert_array_equal(a.value, b.value)
            np.testing.assert_array_equal(a.threshold, b.threshold)

    def test_feature_fraction_bounds_candidates(self, rng):
        X, y = _data(rng, d=6)
        m = fit_random_forest(
            X, y, ForestConfig(n_estimators=5, max_depth=3, feature_fraction=0.5)
        )
        for t in m.trees:
            used = t.feature[t.feature >= 0]
            assert ((used >= 0) & (used < 6)).all()
        full = fit_random_forest(X, y, ForestConfig(n_estimators=5, max_depth=3))
        assert not np.array_equal(m.predict(X), full.predict(X))

    def test_fits_signal(self, rng):
        X, y = _data(rng, n=400, noise=0.05)
        m = fit_random_forest(X, y, ForestConfig(n_estimators=30, max_depth=5))
        assert evaluate(y, m.predict(X)).r2 > 0.7

    def test_feature_ids_restrict_columns(self, rng):
        X, y = _data(rng, d=5)
        sub = fit_random_forest(
            X, y, ForestConfig(n_estimators=4), feature_ids=np.array([1, 3])
        )
        # node feature ids are positions in the restricted list
        for t in sub.trees:
            used = t.feature[t.feature >= 0]
            assert (used < 2).all()
        assert sub.n_features == 2
        direct = fit_random_forest(X[:, [1, 3]], y, ForestConfig(n_estimators=4))
        np.testing.assert_array_equal(sub.predict(X[:, [1, 3]]), direct.predict(X[:, [1, 3]]))

    def test_validation(self, rng):
        X, y = _data(rng, n=10)
        with pytest.raises(ValueError, match="n_estimators"):
            fit_random_forest(X, y, ForestConfig(n_estimators=0))
        with pytest.raises(ValueError, match="feature_fraction"):
            fit_random_forest(X, y, ForestConfig(feature_fraction=0.0))
        with pytest.raises(ValueError, match="feature_fraction"):
            fit_random_forest(X, y, ForestConfig(feature_fraction=1.5))
        with pytest.raises(ValueError, match="length mismatch"):
            fit_random_forest(X, y[:-1], ForestConfig(n_estimators=1))
        with pytest.raises(ValueError, match="nonempty"):
            fit_random_forest(np.zeros((0, 2)), np.zeros(0), ForestConfig(n_estimators=1))


class TestBoosting:
    def test_init_is_sequential_mean(self, rng):
        X, y = _data(rng)
        m = fit_gradient_boosting(X, y, BoostConfig(n_iterations=1))
        assert m.init == float(np.cumsum(y)[-1]) / y.shape[0]

    def test_one_stage_residual_math(self):
        X = np.array([[0.0], [1.0], [2.0], [3.0]])
        y = np.array([0.0, 0.0, 2.0, 2.0])
        m = fit_gradient_boosting(
            X, y, BoostConfig(n_iterations=1, max_depth=1, learning_rate=0.5)
        )
        assert m.init == 1.0
        # residuals [-1,-1,1,1]; depth-1 tree splits at 1.5 into leaves -1, +1
        np.testing.assert_allclose(
            m.predict(X), [0.5, 0.5, 1.5, 1.5], rtol=0, atol=1e-15
        )
        assert m.training_mse[0] == pytest.approx(0.25, abs=1e-15)

    def test_training_mse_non_increasing(self, rng):
        X, y = _data(rng)
        m = fit_gradient_boosting(X, y, BoostConfig(n_iterations=60))
        path = np.array(m.training_mse)
        assert path.shape == (60,)
        assert (np.diff(path) <= 1e-15).all()

    def test_mse_path_matches_staged_predictions(self, rng):
        X, y = _data(rng, n=150)
        m = fit_gradient_boosting(X, y, BoostConfig(n_iterations=20))
        stages = list(m.predict_staged(X))
        assert len(stages) == 21
        np.testing.assert_array_equal(stages[0], np.full(X.shape[0], m.init))
        for i, mse in enumerate(m.training_mse):
            stage_mse = float(np.mean((y - stages[i + 1]) ** 2))
            assert mse == pytest.approx(stage_mse, rel=1e-12)

    def test_staged_final_equals_predict(self, rng):
        X, y = _data(rng)
        m = fit_gradient_boosting(X, y, BoostConfig(n_iterations=15))
        *_, last = m.predict_staged(X)
        np.testing.assert_allclose(last, m.predict(X), rtol=0, atol=1e-15)

    def test_full_rate_deep_trees_interpolate(self, rng):
        X = rng.normal(size=(16, 1))
        y = rng.normal(size=16)
        m = fit_gradient_boosting(
            X, y, BoostConfig(n_iterations=1, max_depth=16, learning_rate=1.0)
        )
        assert m.training_mse[-1] == pytest.approx(0.0, abs=1e-25)

    def test_deterministic(self, rng):
        X, y = _data(rng)
        a = fit_gradient_boosting(X, y, BoostConfig(n_iterations=10))
        b = fit_gradient_boosting(X, y, BoostConfig(n_iterations=10))
        np.testing.assert_array_equal(a.predict(X), b.predict(X))

    def test_beats_linear_on_nonlinear_signal(self, rng):
        X = rng.normal(size=(500, 3))
        y = np.tanh(3.0 * X[:, 0]) * np.exp(-X[:, 1] ** 2) + rng.normal(size=500) * 0.05
        Xtr, ytr, Xte, yte = X[:400], y[:400], X[400:], y[400:]
        gb = fit_gradient_boosting(Xtr, ytr, BoostConfig(n_iterations=80))
        lin = fit_ols(Xtr, ytr)
        assert evaluate(yte, gb.predict(Xte)).r2 > evaluate(yte, lin.predict(Xte)).r2

    def test_validation(self, rng):
        X, y = _data(rng, n=10)
        with pytest.raises(ValueError, match="n_iterations"):
            fit_gradient_boosting(X, y, BoostConfig(n_iterations=0))
        with pytest.raises(ValueError, match="learning_rate"):
            fit_gradient_boosting(X, y, BoostConfig(learning_rate=0.0))
        with pytest.raises(ValueError, match="learning_rate"):
            fit_gradient_boosting(X, y, BoostConfig(learning_rate=1.0001))


class TestModelIO:
    def test_linear_round_trip(self, rng, tmp_path):
        X, y = _data(rng)
        for m in (fit_ols(X, y), fit_ridge(X, y, 2.5)):
            path = tmp_path / f"{m.kind}.json"
            save_model(m, path)
            back = load_model(path)
            assert back.kind == m.kind and back.alpha == m.alpha
            assert back.intercept == m.intercept
            np.testing.assert_array_equal(back.coefficients, m.coefficients)
            np.testing.assert_array_equal(back.predict(X), m.predict(X))

    def test_forest_round_trip(self, rng, tmp_path):
        X, y = _data(rng, n=100)
        m = fit_random_forest(X, y, ForestConfig(n_estimators=5, max_depth=3, seed=17))
        path = tmp_path / "forest.json"
        save_model(m, path)
        back = load_model(path)
        assert back.config == m.config
        assert back.n_features == m.n_features
        np.testing.assert_array_equal(back.predict(X), m.predict(X))

    def test_boosting_round_trip(self, rng, tmp_path):
        X, y = _data(rng, n=100)
        m = fit_gradient_boosting(X, y, BoostConfig(n_iterations=8, seed=3))
        path = tmp_path / "gb.json"
        save_model(m, path)
        back = load_model(path)
        assert back.config == m.config and back.init == m.init
        np.testing.assert_array_equal(back.predict(X), m.predict(X))

    def test_dict_kinds(self, rng):
        X, y = _data(rng, n=50)
        assert model_to_dict(fit_ols(X, y))["kind"] == "ols"
        assert model_to_dict(fit_ridge(X, y))["kind"] == "ridge"
        assert (
            model_to_dict(fit_random_forest(X, y, ForestConfig(n_estimators=2)))["kind"]
            == "random_forest"
        )
        assert (
            model_to_dict(fit_gradient_boosting(X, y, BoostConfig(n_iterations=2)))["kind"]
            == "gradient_boosting"
        )

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError, match="unknown model kind"):
            model_from_dict({"kind": "perceptron"})
        with pytest.raises(TypeError, match="cannot serialize"):
            model_to_dict(object())
