import numpy as np
import pytest

from policyprog.models import (
    ConvergenceError,
    ModelError,
    RegressorSpec,
    fit,
    load_model,
    model_from_dict,
    model_to_dict,
    posterior_mean,
    save_model,
)

from conftest import make_matrix


class TestSpecValidation:
    def test_unknown_kind(self):
        with pytest.raises(ModelError, match="unknown model kind"):
            RegressorSpec("boosted_stumps")

    def test_unknown_hyperparameter(self):
        with pytest.raises(ModelError, match="unknown hyperparameters"):
            RegressorSpec("gbdt", {"depth": 3})

    @pytest.mark.parametrize(
        "kind,params",
        [
            ("gbdt", {"learning_rate": -0.1}),
            ("gbdt", {"max_depth": 0}),
            ("gbdt", {"n_rounds": 0}),
            ("svr", {"C": 0.0}),
            ("svr", {"epsilon": -1.0}),
            ("random_forest", {"n_trees": 0}),
        ],
    )
    def test_out_of_range(self, kind, params):
        with pytest.raises(ModelError):
            RegressorSpec(kind, params)

    def test_non_finite_inputs_rejected(self, rng):
        X = rng.normal(size=(10, 3))
        X[0, 0] = np.inf
        y = rng.normal(size=10)
        # FeatureMatrix itself refuses non-finite cells, so go via raw values
        fm = make_matrix(rng.normal(size=(10, 3)))
        with pytest.raises(ModelError):
            fit(RegressorSpec("bayesian_ridge"), fm, np.r_[np.nan, y[1:]])


class TestBayesianRidge:
    def test_noiseless_recovery(self, rng):
        X = rng.normal(size=(50, 5))
        y = 3.0 * X[:, 0]
        model = fit(RegressorSpec("bayesian_ridge", seed=0), make_matrix(X), y)
        assert model.coef[0] == pytest.approx(3.0, abs=1e-3)
        assert np.max(np.abs(model.coef[1:])) < 1e-3
        rmse = float(np.sqrt(np.mean((model.predict_values(X) - y) ** 2)))
        assert rmse < 1e-3

    def test_frozen_precisions_match_direct_solve(self, rng):
        for _ in range(100):
            X = rng.normal(size=(50, 10))
            y = rng.normal(size=50)
            alpha = float(rng.uniform(0.1, 10))
            lam = float(rng.uniform(0.1, 10))
            ours = posterior_mean(X, y, alpha, lam)
            direct = np.linalg.solve(lam * np.eye(10) + alpha * X.T @ X, alpha * X.T @ y)
            assert np.max(np.abs(ours - direct)) < 1e-8

    def test_wide_problem_uses_dual_form(self, rng):
        X = rng.normal(size=(8, 40))
        y = rng.normal(size=8)
        ours = posterior_mean(X, y, 2.0, 0.5)
        direct = np.linalg.solve(0.5 * np.eye(40) + 2.0 * X.T @ X, 2.0 * X.T @ y)
        assert np.max(np.abs(ours - direct)) < 1e-8

    def test_fit_on_wide_matrix(self, rng):
        X = rng.normal(size=(20, 60))
        y = X[:, 0] + 0.01 * rng.normal(size=20)
        model = fit(RegressorSpec("bayesian_ridge", seed=0), make_matrix(X), y)
        assert np.all(np.isfinite(model.coef))

    def test_training_log_is_log_marginal_likelihood(self, rng):
        X = rng.normal(size=(30, 4))
        y = X @ np.array([1.0, -2.0, 0.0, 0.5]) + 0.1 * rng.normal(size=30)
        model = fit(RegressorSpec("bayesian_ridge", seed=0), make_matrix(X), y)
        assert len(model.training_log) == model.n_iter
        assert all(np.isfinite(v) for v in model.training_log)


class TestGbdt:
    def test_constant_target_after_first_round(self, rng):
        X = rng.normal(size=(50, 5))
        y = np.full(50, 0.5)
        model = fit(RegressorSpec("gbdt", {"n_rounds": 3}, seed=0), make_matrix(X), y)
        assert np.max(np.abs(model.predict_values(X) - 0.5)) < 1e-9
        assert model.training_curve()[0] < 1e-9

    def test_curve_monotone_non_increasing(self, rng):
        X = rng.normal(size=(60, 8))
        y = rng.normal(size=60)
        model = fit(RegressorSpec("gbdt", seed=0), make_matrix(X), y)
        curve = np.array(model.training_curve())
        assert len(curve) == 500
        assert np.all(np.diff(curve) <= 1e-12)

    def test_capacity_on_distinct_rows(self, rng):
        X = rng.normal(size=(50, 6))
        y = rng.normal(size=50)
        spec = RegressorSpec("gbdt", {"learning_rate": 0.1}, seed=0)
        model = fit(spec, make_matrix(X), y)
        assert model.training_curve()[-1] < 0.05

    def test_split_thresholds_inside_feature_range(self, rng):
        X = rng.normal(size=(40, 5))
        y = rng.normal(size=40)
        model = fit(RegressorSpec("gbdt", {"n_rounds": 20}, seed=0), make_matrix(X), y)
        lo, hi = X.min(axis=0), X.max(axis=0)
        for tree in model.trees:
            for node in range(tree.n_nodes):
                f = tree.feature[node]
                if f >= 0:
                    assert lo[f] < tree.threshold[node] < hi[f]
                assert np.isfinite(tree.value[node])


class TestForest:
    def test_training_curve_singleton(self, rng):
        X = rng.normal(size=(30, 4))
        y = rng.normal(size=30)
        model = fit(RegressorSpec("random_forest", {"n_trees": 10}, seed=0), make_matrix(X), y)
        assert len(model.training_curve()) == 1

    def test_determinism(self, rng):
        X = rng.normal(size=(30, 4))
        y = rng.normal(size=30)
        probe = rng.normal(size=(10, 4))
        a = fit(RegressorSpec("random_forest", {"n_trees": 20}, seed=7), make_matrix(X), y)
        b = fit(RegressorSpec("random_forest", {"n_trees": 20}, seed=7), make_matrix(X), y)
        assert np.array_equal(a.predict_values(probe), b.predict_values(probe))

    def test_seed_changes_forest(self, rng):
        X = rng.normal(size=(30, 4))
        y = rng.normal(size=30)
        probe = rng.normal(size=(10, 4))
        a = fit(RegressorSpec("random_forest", {"n_trees": 20}, seed=7), make_matrix(X), y)
        b = fit(RegressorSpec("random_forest", {"n_trees": 20}, seed=8), make_matrix(X), y)
        assert not np.array_equal(a.predict_values(probe), b.predict_values(probe))


class TestSvr:
    def test_constant_target_in_tube(self, rng):
        X = rng.normal(size=(30, 3))
        y = np.full(30, 0.7)
        model = fit(RegressorSpec("svr", seed=0), make_matrix(X), y)
        assert np.max(np.abs(model.predict_values(X) - 0.7)) <= 0.1 + 1e-6

    def test_dual_objective_non_decreasing(self, rng):
        X = rng.normal(size=(50, 4))
        y = np.tanh(X[:, 0]) + 0.05 * rng.normal(size=50)
        model = fit(RegressorSpec("svr", seed=0), make_matrix(X), y)
        curve = np.array(model.training_curve())
        assert np.all(np.diff(curve) >= -1e-9)
        assert model.final_violation < 1e-3

    def test_kkt_non_support_inside_tube(self, rng):
        # at a tight duality gap g the residual bound is epsilon + g/2
        for trial in range(5):
            X = rng.normal(size=(40, 3))
            y = np.sin(X[:, 0]) + 0.1 * rng.normal(size=40)
            model = fit(
                RegressorSpec("svr", {"tol": 1e-7, "epsilon": 0.1}, seed=trial),
                make_matrix(X),
                y,
            )
            support = {tuple(v) for v in model.support_vectors}
            preds = model.predict_values(X)
            for i in range(40):
                if tuple(X[i]) not in support:
                    assert abs(y[i] - preds[i]) <= 0.1 + 1e-6

    def test_iteration_cap_reports_violation(self, rng):
        X = rng.normal(size=(40, 3))
        y = rng.normal(size=40)
        with pytest.raises(ConvergenceError, match="violation"):
            fit(RegressorSpec("svr", {"max_iter": 3}, seed=0), make_matrix(X), y)


class TestPredictContract:
    def test_column_mismatch_names_offender(self, rng):
        X = rng.normal(size=(20, 3))
        y = rng.normal(size=20)
        model = fit(RegressorSpec("bayesian_ridge"), make_matrix(X), y)
        bad = make_matrix(X, prefix="z")
        with pytest.raises(ModelError, match="z0"):
            model.predict(bad)

    def test_empty_matrix_predicts_empty(self, rng):
        X = rng.normal(size=(20, 3))
        y = rng.normal(size=20)
        for kind in ("bayesian_ridge", "random_forest", "gbdt", "svr"):
            params = {"n_trees": 5} if kind == "random_forest" else ({"n_rounds": 5} if kind == "gbdt" else {})
            model = fit(RegressorSpec(kind, params, seed=0), make_matrix(X), y)
            out = model.predict(make_matrix(np.zeros((0, 3))))
            assert out.shape == (0,)

    def test_row_permutation_permutes_predictions(self, rng):
        X = rng.normal(size=(20, 3))
        y = rng.normal(size=20)
        probe = rng.normal(size=(10, 3))
        perm = rng.permutation(10)
        for kind in ("bayesian_ridge", "random_forest", "gbdt", "svr"):
            params = {"n_trees": 5} if kind == "random_forest" else ({"n_rounds": 5} if kind == "gbdt" else {})
            model = fit(RegressorSpec(kind, params, seed=0), make_matrix(X), y)
            direct = model.predict_values(probe)[perm]
            permuted = model.predict_values(probe[perm])
            assert np.allclose(direct, permuted, atol=0)

    def test_determinism_all_kinds(self, rng):
        X = rng.normal(size=(25, 4))
        y = rng.normal(size=25)
        probe = rng.normal(size=(8, 4))
        for kind in ("bayesian_ridge", "random_forest", "gbdt", "svr"):
            params = {"n_trees": 10} if kind == "random_forest" else ({"n_rounds": 10} if kind == "gbdt" else {})
            a = fit(RegressorSpec(kind, params, seed=3), make_matrix(X), y)
            b = fit(RegressorSpec(kind, params, seed=3), make_matrix(X), y)
            assert np.array_equal(a.predict_values(probe), b.predict_values(probe))


class TestTreePredictOracle:
    def test_vectorized_predict_matches_scalar_walk(self, rng):
        from policyprog.models.tree import grow_tree

        X = rng.normal(size=(60, 5))
        y = rng.normal(size=60)
        tree = grow_tree(X, y, max_depth=6, rng=np.random.default_rng(1))
        probe = rng.normal(size=(40, 5))

        def walk(row):
            node = 0
            while tree.feature[node] != -1:
                f = tree.feature[node]
                node = tree.left[node] if row[f] <= tree.threshold[node] else tree.right[node]
            return tree.value[node]

        expected = np.array([walk(row) for row in probe])
        assert np.array_equal(tree.predict(probe), expected)


class TestSerialization:
    @pytest.mark.parametrize("kind", ["bayesian_ridge", "random_forest", "gbdt", "svr"])
    def test_round_trip(self, kind, rng, tmp_path):
        X = rng.normal(size=(25, 4))
        y = np.tanh(X[:, 0]) + 0.1 * rng.normal(size=25)
        params = {"n_trees": 8} if kind == "random_forest" else ({"n_rounds": 8} if kind == "gbdt" else {})
        model = fit(RegressorSpec(kind, params, seed=1), make_matrix(X), y)
        path = tmp_path / f"{kind}.json"
        save_model(model, path)
        loaded = load_model(path)
        probe = rng.normal(size=(12, 4))
        assert np.array_equal(model.predict_values(probe), loaded.predict_values(probe))
        assert loaded.column_names == model.column_names
        assert loaded.training_log == pytest.approx(model.training_log)

    def test_unknown_version_rejected(self, rng):
        X = rng.normal(size=(10, 2))
        model = fit(RegressorSpec("bayesian_ridge"), make_matrix(X), rng.normal(size=10))
        doc = model_to_dict(model)
        doc["format_version"] = 99
        with pytest.raises(ModelError, match="version"):
            model_from_dict(doc)
