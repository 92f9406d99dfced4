import numpy as np
import pytest

from flucast.errors import ConvergenceError, DataError
from flucast.models import ModelSpec, fit, predict
from flucast.models.svr import fit_svr, rbf_kernel, resolve_gamma

from oracles import svr_projected_gradient


def test_rbf_kernel_basics():
    X = np.array([[0.0], [1.0]])
    K = rbf_kernel(X, X, gamma=0.5)
    assert K[0, 0] == pytest.approx(1.0)
    assert K[0, 1] == pytest.approx(np.exp(-0.5))
    assert np.allclose(K, K.T)


def test_resolve_gamma_default_rule():
    X = np.array([[0.0, 2.0], [4.0, 6.0]])
    var = X.ravel().var()
    assert resolve_gamma(X, None) == pytest.approx(1.0 / (2 * var))
    assert resolve_gamma(X, 0.3) == 0.3


def test_constant_targets_all_duals_zero():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(8, 3))
    y = np.full(8, 3.0)
    model = fit(ModelSpec(kind="svr"), X, y)
    assert predict(model, rng.normal(size=(5, 3))) == pytest.approx(np.full(5, 3.0))
    coef = np.asarray(model.params["coef"], dtype=float)
    assert coef.size == 0 or np.abs(coef).max() == 0.0
    assert model.params["intercept"] == pytest.approx(3.0)


def test_training_points_reproduced_within_tube_on_separable_data():
    # n=5, large C: the fit should track targets to within epsilon + tol
    X = np.array([[0.0], [1.0], [2.0], [3.0], [4.0]])
    y = np.array([0.0, 1.0, 0.5, -0.5, 0.2])
    spec = ModelSpec(kind="svr", hyperparameters={"C": 1e4, "epsilon": 0.05, "gamma": 1.0})
    model = fit(spec, X, y)
    preds = predict(model, X)
    assert np.abs(preds - y).max() <= 0.05 + 1e-3 + 1e-6


def test_duplicate_rows_equal_targets_match_dedup_solution():
    X = np.array([[0.0], [1.0], [2.0]])
    y = np.array([0.0, 1.0, 0.0])
    Xd = np.array([[0.0], [0.0], [1.0], [1.0], [2.0], [2.0]])
    yd = np.array([0.0, 0.0, 1.0, 1.0, 0.0, 0.0])
    hp = {"C": 10.0, "epsilon": 0.01, "gamma": 1.0}
    queries = np.linspace(-1, 3, 9).reshape(-1, 1)
    p1 = predict(fit(ModelSpec(kind="svr", hyperparameters=hp), X, y), queries)
    p2 = predict(fit(ModelSpec(kind="svr", hyperparameters=hp), Xd, yd), queries)
    assert p2 == pytest.approx(p1, abs=1e-3)


def test_svr_matches_projected_gradient_oracle():
    rng = np.random.default_rng(4)
    for trial in range(6):
        n = int(rng.integers(4, 11))
        X = rng.normal(size=(n, 2))
        y = rng.normal(size=n) * 2.0
        C, eps, gamma = 5.0, 0.1, 0.7
        model = fit(ModelSpec(kind="svr", hyperparameters={"C": C, "epsilon": eps, "gamma": gamma}), X, y)
        mine = predict(model, X)
        K = rbf_kernel(X, X, gamma=gamma)
        beta, b = svr_projected_gradient(K, y, C, eps)
        oracle = K @ beta + b
        assert np.abs(mine - oracle).max() <= eps + 1e-2


def test_convergence_error_carries_best_iterate():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(20, 2))
    y = rng.normal(size=20) * 5
    hp = {"C": 100.0, "epsilon": 0.001, "gamma": 1.0, "tol": 1e-9, "max_iter": 3}
    with pytest.raises(ConvergenceError) as exc_info:
        fit_svr(X, y, hp)
    best = exc_info.value.best
    assert "coef" in best and "intercept" in best and best["n_iter"] == 3


def test_svr_defaults_match_reported_settings():
    hp = ModelSpec(kind="svr").resolved()
    assert hp["C"] == 100.0
    assert hp["epsilon"] == 0.1
    assert hp["gamma"] is None  # data-derived scale rule at fit time


def test_svr_needs_two_rows():
    with pytest.raises(DataError):
        fit(ModelSpec(kind="svr"), np.zeros((1, 2)), np.zeros(1))
