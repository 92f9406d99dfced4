import numpy as np
import pytest

from flucast.errors import DataError
from flucast.models import ModelSpec, feature_importances, fit


def test_single_split_gives_that_feature_full_share():
    # Feature 1 carries the only signal; a depth-1 tree makes one split there.
    X = np.array([[0.0, 0.0], [0.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
    y = np.array([0.0, 0.0, 8.0, 8.0])
    model = fit(ModelSpec(kind="tree", hyperparameters={"max_depth": 1}), X, y)
    report = feature_importances(model)
    assert dict(report.per_feature) == {"x0": 0.0, "x1": 1.0}


def test_shares_sum_to_one_for_each_supported_kind():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(60, 5))
    y = X[:, 0] * 2 + X[:, 3] + rng.normal(size=60) * 0.1
    specs = [
        ModelSpec(kind="tree", hyperparameters={"max_depth": 4}),
        ModelSpec(kind="random_forest", hyperparameters={"n_estimators": 10, "max_features": 2}, seed=1),
        ModelSpec(kind="gbt", hyperparameters={"n_estimators": 10, "max_depth": 3}),
    ]
    for spec in specs:
        report = feature_importances(fit(spec, X, y))
        shares = [s for _, s in report.per_feature]
        assert len(shares) == 5
        assert abs(sum(shares) - 1.0) <= 1e-9
        assert all(s >= 0.0 for s in shares)


def test_informative_feature_dominates():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(120, 4))
    y = X[:, 2] * 5.0
    model = fit(ModelSpec(kind="gbt", hyperparameters={"n_estimators": 5, "reg_alpha": 0.0}), X, y)
    report = feature_importances(model)
    assert dict(report.per_feature)["x2"] > 0.9


def test_linear_and_neighbor_kinds_are_rejected():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(20, 2))
    y = rng.normal(size=20)
    for kind in ("ols", "ridge", "lasso", "elastic_net", "knn", "svr"):
        with pytest.raises(DataError):
            feature_importances(fit(ModelSpec(kind=kind), X, y))


def test_no_splits_at_all_is_an_error():
    X = np.arange(10, dtype=float).reshape(-1, 1)
    y = np.full(10, 2.0)  # constant target: no split ever helps
    model = fit(ModelSpec(kind="tree"), X, y)
    with pytest.raises(DataError):
        feature_importances(model)


def test_column_names_and_modalities_flow_through():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(50, 3))
    y = X[:, 0] + X[:, 1] * 2 + rng.normal(size=50) * 0.05
    model = fit(
        ModelSpec(kind="tree", hyperparameters={"max_depth": 5}),
        X,
        y,
        columns=("week_of_year", "count_flu", "img_matches"),
        modalities=("date", "hashtag", "image"),
    )
    report = feature_importances(model)
    assert [name for name, _ in report.per_feature] == [
        "week_of_year",
        "count_flu",
        "img_matches",
    ]
    by_modality = dict(report.per_modality)
    assert set(by_modality) == {"date", "hashtag", "image"}
    assert abs(sum(by_modality.values()) - 1.0) <= 1e-9


def test_modality_share_merges_same_tag():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(80, 4))
    y = X @ np.array([1.0, 2.0, 0.5, 1.5])
    model = fit(
        ModelSpec(kind="random_forest", hyperparameters={"n_estimators": 8, "max_features": 2}, seed=2),
        X,
        y,
        columns=("a", "b", "c", "d"),
        modalities=("m1", "m1", "m2", "m2"),
    )
    report = feature_importances(model)
    per_feature = dict(report.per_feature)
    by_modality = dict(report.per_modality)
    assert by_modality["m1"] == pytest.approx(per_feature["a"] + per_feature["b"])
    assert by_modality["m2"] == pytest.approx(per_feature["c"] + per_feature["d"])
