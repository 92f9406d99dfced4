import numpy as np
import pytest

from flucast.models import ModelSpec, fit, predict
from flucast.models.gbt import _leaf_weight, _soft


def make_data(seed=0, n=40, p=4):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    y = X[:, 0] * 3 - X[:, 1] + rng.normal(size=n) * 0.2
    return X, y


def test_soft_threshold_and_leaf_weight():
    assert _soft(5.0, 2.0) == 3.0
    assert _soft(-5.0, 2.0) == -3.0
    assert _soft(1.5, 2.0) == 0.0
    # leaf weight = -T(G) / (H + lambda)
    assert _leaf_weight(5.0, 3.0, 2.0, 1.0) == pytest.approx(-3.0 / 4.0)
    assert _leaf_weight(-5.0, 3.0, 2.0, 1.0) == pytest.approx(3.0 / 4.0)
    assert _leaf_weight(1.0, 3.0, 2.0, 1.0) == 0.0


def test_huge_l1_penalty_collapses_to_mean():
    X, y = make_data(1, n=30)
    # |G| at the root of round 1 is at most sum|y - mean(y)|; any alpha above
    # that kills every leaf, so the prediction is the constant mean.
    alpha = float(np.abs(y - y.mean()).sum()) + 1.0
    spec = ModelSpec(
        kind="gbt",
        hyperparameters={"n_estimators": 10, "reg_alpha": alpha},
    )
    model = fit(spec, X, y)
    assert "stopped_early" in model.flags
    assert len(model.params["trees"]) == 0
    assert predict(model, X) == pytest.approx(np.full(30, y.mean()))


def test_training_mse_never_increases_round_over_round():
    X, y = make_data(2, n=60)
    mses = []
    for rounds in range(1, 12):
        spec = ModelSpec(
            kind="gbt",
            hyperparameters={
                "n_estimators": rounds,
                "learning_rate": 0.3,
                "reg_alpha": 1.0,
                "reg_lambda": 1.0,
                "max_depth": 3,
            },
        )
        preds = predict(fit(spec, X, y), X)
        mses.append(float(((preds - y) ** 2).mean()))
    for a, b in zip(mses, mses[1:]):
        assert b <= a + 1e-12


def test_unit_rate_single_round_exact_fit():
    # lr=1, no regularization, depth covering every row: one round drives the
    # gradient to zero on distinct rows.
    X, y = make_data(3, n=16)
    spec = ModelSpec(
        kind="gbt",
        hyperparameters={
            "n_estimators": 1,
            "learning_rate": 1.0,
            "reg_alpha": 0.0,
            "reg_lambda": 0.0,
            "max_depth": 16,
        },
    )
    assert predict(fit(spec, X, y), X) == pytest.approx(y)


def test_later_rounds_after_early_stop_change_nothing():
    # Small-integer targets with n=16 keep every mean and residual an exact
    # multiple of 1/16, so round 1 fits exactly, round 2 sees a zero gradient,
    # and the early stop fires instead of chasing rounding noise.
    rng = np.random.default_rng(4)
    X = rng.normal(size=(16, 3))
    y = rng.integers(0, 50, size=16).astype(float)
    hp = {"learning_rate": 1.0, "reg_alpha": 0.0, "reg_lambda": 0.0, "max_depth": 16}
    few = fit(ModelSpec(kind="gbt", hyperparameters={**hp, "n_estimators": 1}), X, y)
    many = fit(ModelSpec(kind="gbt", hyperparameters={**hp, "n_estimators": 50}), X, y)
    assert "stopped_early" in many.flags
    assert len(many.params["trees"]) == 1
    q = rng.normal(size=(25, 3))
    assert np.array_equal(predict(few, q), predict(many, q))
    assert np.array_equal(predict(many, X), y)


def test_subsample_requires_seed_and_is_reproducible():
    X, y = make_data(5, n=50)
    from flucast.errors import DataError

    with pytest.raises(DataError):
        ModelSpec(kind="gbt", hyperparameters={"subsample": 0.5})
    spec = ModelSpec(
        kind="gbt", hyperparameters={"n_estimators": 10, "subsample": 0.5}, seed=8
    )
    q = np.random.default_rng(6).normal(size=(30, 4))
    a = predict(fit(spec, X, y), q)
    b = predict(fit(spec, X, y), q)
    assert np.array_equal(a, b)
    other = ModelSpec(
        kind="gbt", hyperparameters={"n_estimators": 10, "subsample": 0.5}, seed=9
    )
    assert not np.array_equal(a, predict(fit(other, X, y), q))


def test_l2_penalty_shrinks_leaf_magnitudes():
    X, y = make_data(6, n=40)
    base = {"n_estimators": 1, "learning_rate": 1.0, "reg_alpha": 0.0, "max_depth": 2}
    soft = fit(ModelSpec(kind="gbt", hyperparameters={**base, "reg_lambda": 0.0}), X, y)
    hard = fit(ModelSpec(kind="gbt", hyperparameters={**base, "reg_lambda": 100.0}), X, y)
    spread_soft = np.abs(predict(soft, X) - y.mean()).max()
    spread_hard = np.abs(predict(hard, X) - y.mean()).max()
    assert spread_hard < spread_soft


def test_gbt_default_settings():
    hp = ModelSpec(kind="gbt").resolved()
    assert hp["n_estimators"] == 300
    assert hp["learning_rate"] == 0.3
    assert hp["reg_alpha"] == 10.0
    assert hp["reg_lambda"] == 1.0
    assert hp["max_depth"] == 6
    assert hp["subsample"] == 1.0
