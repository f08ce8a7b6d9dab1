import numpy as np
import pytest

from agboost.boosting import GBMConfig, GBMModel, fit_gbm, line_search_gamma
from agboost.data import DataMatrix, gen_friedman1
from agboost.tree import TreeConfig


def _tiny_config(T, msl=5, mode="exact", seed=0, nu=1.0):
    return GBMConfig(
        iterations=T,
        tree=TreeConfig(min_samples_leaf=msl, split_mode=mode, seed=seed),
        shrinkage=nu,
    )


class TestLineSearch:
    def test_exact_fit_gives_one(self):
        r = np.array([1.0, -2.0, 0.5])
        assert line_search_gamma(r, r) == 1.0

    def test_hand_case(self):
        assert line_search_gamma(np.array([2.0, 2.0]), np.array([1.0, 1.0])) == 2.0

    def test_zero_predictions(self):
        assert line_search_gamma(np.array([1.0, 2.0]), np.zeros(2)) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            line_search_gamma(np.ones(3), np.ones(2))


class TestFit:
    def test_t0_predicts_mean(self):
        data = gen_friedman1(30, 1.0, seed=1)
        model = fit_gbm(data, _tiny_config(0))
        assert model.iterations == 0
        np.testing.assert_allclose(
            model.predict_many(data.features), data.targets.mean(), atol=1e-12
        )

    def test_constant_targets(self):
        X = np.arange(40.0).reshape(20, 2)
        data = DataMatrix(X, np.full(20, 3.5))
        model = fit_gbm(data, _tiny_config(5))
        np.testing.assert_allclose(model.predict_many(X), 3.5, atol=1e-12)
        np.testing.assert_allclose(model.gammas, 0.0, atol=0)

    def test_separable_data_one_step(self):
        X = np.repeat([[0.0], [1.0]], 10, axis=0)
        y = np.repeat([0.0, 1.0], 10)
        model = fit_gbm(DataMatrix(X, y), _tiny_config(1, msl=5))
        np.testing.assert_allclose(model.predict_many(X), y, atol=1e-12)

    def test_monotone_training_mse(self):
        data = gen_friedman1(80, 1.0, seed=4)
        for nu in (1.0, 0.3):
            cfg = _tiny_config(25, msl=10, nu=nu)
            model = fit_gbm(data, cfg)
            preds = np.full(data.n, model.h0)
            prev = float(((data.targets - preds) ** 2).mean())
            for t, (tree, gamma) in enumerate(zip(model.trees, model.gammas)):
                preds += nu * gamma * tree.predict_many(data.features)
                cur = float(((data.targets - preds) ** 2).mean())
                assert cur <= prev + 1e-12, f"MSE rose at iteration {t}"
                prev = cur

    def test_deterministic_exact(self):
        data = gen_friedman1(60, 1.0, seed=2)
        a = fit_gbm(data, _tiny_config(10))
        b = fit_gbm(data, _tiny_config(10))
        np.testing.assert_array_equal(a.gammas, b.gammas)
        np.testing.assert_array_equal(
            a.predict_many(data.features), b.predict_many(data.features)
        )

    def test_ert_deterministic_given_seed(self):
        data = gen_friedman1(60, 1.0, seed=2)
        model = fit_gbm(data, _tiny_config(3, mode="extra_random", seed=7))
        again = fit_gbm(data, _tiny_config(3, mode="extra_random", seed=7))
        for ta, tb in zip(model.trees, again.trees):
            assert np.array_equal(ta.threshold, tb.threshold, equal_nan=True)
        other = fit_gbm(data, _tiny_config(3, mode="extra_random", seed=8))
        assert any(
            not np.array_equal(ta.threshold, tb.threshold, equal_nan=True)
            for ta, tb in zip(model.trees, other.trees)
        )

    def test_config_validation(self):
        with pytest.raises(ValueError):
            GBMConfig(iterations=-1)
        with pytest.raises(ValueError):
            GBMConfig(shrinkage=0.0)
        with pytest.raises(ValueError):
            GBMConfig(shrinkage=1.5)


class TestPredict:
    def test_t0_returns_h0(self):
        data = gen_friedman1(30, 1.0, seed=1)
        model = fit_gbm(data, _tiny_config(0))
        assert model.predict(data.features[0]) == model.h0

    def test_single_leaf_tree_adds_value(self):
        X = np.arange(20.0).reshape(10, 2)
        y = X[:, 0] * 0 + np.arange(10.0)
        data = DataMatrix(X, y)
        model = fit_gbm(data, _tiny_config(1, msl=10))
        # single tree is one leaf (min_samples_leaf = n), gamma trivially 0/0 -> 0
        assert model.trees[0].n_leaves == 1

    def test_rescaled_identity(self):
        data = gen_friedman1(70, 1.0, seed=6)
        model = fit_gbm(data, _tiny_config(12, msl=10))
        rng = np.random.default_rng(0)
        X = rng.uniform(0, 1, size=(40, 10))
        direct = model.predict_many(X)
        rescaled = np.full(40, model.h0)
        for t in range(1, model.iterations + 1):
            rescaled += model.rescaled_pred_many(t, X) / model.iterations
        np.testing.assert_allclose(direct, rescaled, atol=1e-9)

    def test_rescaled_identity_with_shrinkage(self):
        data = gen_friedman1(70, 1.0, seed=6)
        model = fit_gbm(data, _tiny_config(8, msl=10, nu=0.25))
        x = data.features[5]
        total = model.h0 + sum(
            model.rescaled_pred(t, x) / model.iterations
            for t in range(1, model.iterations + 1)
        )
        assert abs(total - model.predict(x)) < 1e-9

    def test_t_out_of_range(self):
        data = gen_friedman1(30, 1.0, seed=1)
        model = fit_gbm(data, _tiny_config(4))
        with pytest.raises(ValueError, match="out of range"):
            model.rescaled_pred(0, data.features[0])
        with pytest.raises(ValueError, match="out of range"):
            model.rescaled_pred(5, data.features[0])

    def test_serialization_round_trip(self):
        data = gen_friedman1(50, 1.0, seed=3)
        model = fit_gbm(data, _tiny_config(6))
        clone = GBMModel.from_dict(model.to_dict())
        np.testing.assert_allclose(
            clone.predict_many(data.features), model.predict_many(data.features), atol=0
        )
