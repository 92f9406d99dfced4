import math
from datetime import date, timedelta

import numpy as np
import pytest

from flucast.errors import DataError
from flucast.evaluation import (
    EvalReport,
    SplitConfig,
    chronological_split,
    clip_nonnegative,
    compute_metrics,
    grid_search,
    kfold_slices,
    pearson_p_value,
    shift_horizon,
    student_t_sf,
    train_eval,
    train_model,
)
from flucast.features import Dataset
from flucast.models import ModelSpec

from oracles import pearson_p_scipy

START = date(2015, 1, 5)  # a Monday


def week(i):
    return START + timedelta(weeks=i)


def make_dataset(n=40, p=3, seed=0, y=None, X=None):
    rng = np.random.default_rng(seed)
    if X is None:
        X = rng.normal(size=(n, p))
    n = X.shape[0]
    if y is None:
        y = X[:, 0] * 4 + 10 + rng.normal(size=n) * 0.1
    return Dataset(
        week_starts=tuple(week(i) for i in range(n)),
        X=np.asarray(X, dtype=float),
        y=np.asarray(y, dtype=float),
        columns=tuple(f"f{j}" for j in range(X.shape[1])),
        modalities=tuple("date" if j == 0 else "hashtag" for j in range(X.shape[1])),
    )


# -- metrics ------------------------------------------------------------------


def test_mae_hand_example():
    m = compute_metrics(np.array([1.0, 2.0, 4.0]), np.array([1.0, 2.0, 3.0]))
    assert m.mae == pytest.approx(1.0 / 3.0)
    assert m.n == 3


def test_perfect_fit_metrics():
    a = np.array([3.0, 7.0, 1.0, 9.0])
    m = compute_metrics(a, a.copy())
    assert m.mae == 0.0
    assert m.r2 == pytest.approx(1.0)
    assert m.pearson_r == pytest.approx(1.0)
    assert m.p_value == pytest.approx(0.0, abs=1e-12)


def test_r2_matches_definition():
    rng = np.random.default_rng(1)
    a = rng.normal(size=25)
    p = a + rng.normal(size=25) * 0.5
    m = compute_metrics(a, p)
    expected = 1.0 - ((a - p) ** 2).sum() / ((a - a.mean()) ** 2).sum()
    assert m.r2 == pytest.approx(expected, abs=1e-12)


def test_constant_actuals_mark_r2_and_r_undefined():
    m = compute_metrics(np.full(5, 2.0), np.arange(5, dtype=float))
    assert m.r2 is None
    assert m.pearson_r is None
    assert m.p_value is None
    assert m.mae == pytest.approx(np.abs(np.arange(5) - 2.0).mean())


def test_constant_predictions_mark_r_undefined_but_keep_r2():
    m = compute_metrics(np.arange(5, dtype=float), np.full(5, 2.0))
    assert m.pearson_r is None
    assert m.p_value is None
    assert m.r2 is not None


def test_metrics_input_validation():
    with pytest.raises(DataError):
        compute_metrics(np.array([1.0]), np.array([1.0]))
    with pytest.raises(DataError):
        compute_metrics(np.array([1.0, 2.0]), np.array([1.0]))
    with pytest.raises(DataError):
        compute_metrics(np.array([1.0, np.nan]), np.array([1.0, 2.0]))


def test_pearson_r_never_leaves_unit_interval():
    a = np.array([1.0, 2.0, 3.0, 4.0])
    m = compute_metrics(a, a * 2.0 + 1.0)
    assert -1.0 <= m.pearson_r <= 1.0
    assert m.pearson_r == pytest.approx(1.0)
    m2 = compute_metrics(a, -a)
    assert -1.0 <= m2.pearson_r <= 1.0
    assert m2.pearson_r == pytest.approx(-1.0)


# -- p-values -----------------------------------------------------------------


def test_t_tail_matches_known_quantile():
    # Standard table: P(T_10 <= 2.228) ~ 0.975
    assert 1.0 - student_t_sf(2.228, 10) == pytest.approx(0.975, abs=1e-3)


def test_p_value_of_zero_correlation_is_one():
    assert pearson_p_value(0.0, 10) == pytest.approx(1.0)


def test_p_value_monotone_in_correlation_strength():
    ps = [pearson_p_value(r, 20) for r in (0.0, 0.2, 0.4, 0.6, 0.8, 0.99)]
    for a, b in zip(ps, ps[1:]):
        assert b < a


def test_p_value_needs_three_pairs():
    assert pearson_p_value(0.5, 2) is None
    assert pearson_p_value(0.5, 3) is not None


def test_p_value_symmetric_in_sign():
    assert pearson_p_value(0.6, 15) == pytest.approx(pearson_p_value(-0.6, 15))


def test_strong_correlation_on_a_year_of_weeks_is_significant():
    assert pearson_p_value(0.963, 52) < 1e-3


def test_p_value_agrees_with_reference_distribution():
    for r in (0.1, 0.3, 0.55, 0.8, 0.95):
        for n in (5, 12, 30, 52):
            assert pearson_p_value(r, n) == pytest.approx(pearson_p_scipy(r, n), abs=1e-12)


# -- clipping -----------------------------------------------------------------


def test_clip_examples():
    assert clip_nonnegative(np.array([-3.0, 0.0, 5.0])).tolist() == [0.0, 0.0, 5.0]
    x = np.array([0.5, 2.0])
    assert clip_nonnegative(x).tolist() == [0.5, 2.0]


def test_clipping_never_hurts_mae_against_nonnegative_actuals():
    rng = np.random.default_rng(3)
    for _ in range(20):
        actual = np.abs(rng.normal(size=30)) * 10
        raw = rng.normal(size=30) * 12
        mae_raw = np.abs(actual - raw).mean()
        mae_clip = np.abs(actual - clip_nonnegative(raw)).mean()
        assert mae_clip <= mae_raw + 1e-12


# -- horizon shift ------------------------------------------------------------


def test_shift_zero_is_identity():
    ds = make_dataset()
    assert shift_horizon(ds, 0) is ds


def test_shift_pairs_features_with_later_targets():
    ds = make_dataset(n=317)
    out = shift_horizon(ds, 2)
    assert out.n_rows == 315
    assert out.y[0] == ds.y[2]
    assert out.y[-1] == ds.y[-1]
    assert np.array_equal(out.X, ds.X[:315])
    assert out.week_starts == ds.week_starts[:315]


def test_shift_rejects_horizon_at_or_past_length():
    ds = make_dataset(n=5)
    with pytest.raises(DataError):
        shift_horizon(ds, 5)
    with pytest.raises(DataError):
        shift_horizon(ds, -1)


# -- chronological split ------------------------------------------------------


def test_split_is_strictly_before():
    ds = make_dataset(n=10)
    train, test = chronological_split(ds, week(6))
    assert train.sum() == 6 and test.sum() == 4
    assert train[:6].all() and test[6:].all()


def test_split_needs_rows_on_both_sides():
    ds = make_dataset(n=4)
    with pytest.raises(DataError):
        chronological_split(ds, week(0))
    with pytest.raises(DataError):
        chronological_split(ds, week(99))


# -- k-fold -------------------------------------------------------------------


def test_ten_singleton_folds():
    folds = kfold_slices(10, 10)
    assert [len(f) for f in folds] == [1] * 10
    assert [int(f[0]) for f in folds] == list(range(10))


def test_paper_sized_folds_split_265_into_27s_then_26s():
    folds = kfold_slices(265, 10)
    assert [len(f) for f in folds] == [27] * 5 + [26] * 5
    flat = np.concatenate(folds)
    assert np.array_equal(np.sort(flat), np.arange(265))
    # contiguous chronological blocks
    for f in folds:
        assert np.array_equal(f, np.arange(f[0], f[0] + len(f)))


def test_fold_partition_property_random_sizes():
    rng = np.random.default_rng(4)
    for _ in range(10):
        n = int(rng.integers(10, 200))
        k = int(rng.integers(2, min(n, 12)))
        folds = kfold_slices(n, k)
        sizes = [len(f) for f in folds]
        assert max(sizes) - min(sizes) <= 1
        assert sorted(sizes, reverse=True) == sizes  # larger folds first
        assert np.array_equal(np.sort(np.concatenate(folds)), np.arange(n))


def test_shuffled_folds_require_seed_and_are_reproducible():
    with pytest.raises(DataError):
        kfold_slices(20, 4, shuffle=True)
    a = kfold_slices(20, 4, shuffle=True, seed=5)
    b = kfold_slices(20, 4, shuffle=True, seed=5)
    for fa, fb in zip(a, b):
        assert np.array_equal(fa, fb)
    assert np.array_equal(np.sort(np.concatenate(a)), np.arange(20))


def test_more_folds_than_rows_is_an_error():
    with pytest.raises(DataError):
        kfold_slices(5, 6)


# -- grid search --------------------------------------------------------------


def test_grid_of_one_returns_that_spec():
    ds = make_dataset(n=30)
    spec = ModelSpec(kind="ols")
    best, table = grid_search(ds, [spec], folds=5)
    assert best == spec
    assert len(table) == 1
    assert table[0]["spec"] == spec.describe()
    assert len(table[0]["fold_mae"]) == 5
    assert table[0]["mean_mae"] == pytest.approx(np.mean(table[0]["fold_mae"]))


def test_adding_a_worse_spec_never_changes_the_winner():
    # the target is linear in the features, so OLS nails every fold while a
    # near-global-mean kNN (k = all 32 fold-training rows) cannot
    ds = make_dataset(n=40)
    good = ModelSpec(kind="ols")
    bad = ModelSpec(kind="knn", hyperparameters={"k": 32})
    best_alone, _ = grid_search(ds, [good], folds=5)
    best_both, table = grid_search(ds, [good, bad], folds=5)
    assert best_alone == best_both == good
    assert table[0]["mean_mae"] < table[1]["mean_mae"]


def test_zero_ridge_penalty_wins_on_noiseless_linear_data():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(50, 3))
    y = X @ np.array([2.0, -1.0, 0.5]) + 7.0
    ds = make_dataset(X=X, y=y)
    grid = [
        ModelSpec(kind="ridge", hyperparameters={"alpha": 0.0}),
        ModelSpec(kind="ridge", hyperparameters={"alpha": 1e6}),
    ]
    best, table = grid_search(ds, grid, folds=5)
    assert best == grid[0]
    assert table[0]["mean_mae"] < 1e-6
    assert table[1]["mean_mae"] > 1.0


def test_tie_goes_to_earliest_grid_position():
    ds = make_dataset(n=30)
    spec = ModelSpec(kind="ols")
    best, table = grid_search(ds, [spec, spec], folds=5)
    assert table[0]["mean_mae"] == table[1]["mean_mae"]
    assert best is not None  # argmin picks index 0 on exact ties
    assert best == spec


def test_grid_search_is_thread_count_invariant():
    ds = make_dataset(n=45, seed=7)
    grid = [
        ModelSpec(kind="ridge", hyperparameters={"alpha": a}) for a in (0.0, 0.5, 10.0)
    ]
    best1, table1 = grid_search(ds, grid, folds=5, threads=1)
    best4, table4 = grid_search(ds, grid, folds=5, threads=4)
    assert best1 == best4
    assert table1 == table4


def test_grid_search_rejects_empty_grid_and_bad_threads():
    ds = make_dataset(n=30)
    with pytest.raises(DataError):
        grid_search(ds, [], folds=5)
    with pytest.raises(DataError):
        grid_search(ds, [ModelSpec(kind="ols")], folds=5, threads=0)


def test_grid_search_fold_mae_matches_hand_computation():
    # Recompute fold 0 by hand: normalizer fitted on the other folds only,
    # model fitted on those normalized rows, clipped predictions scored on
    # the held fold.
    from flucast.features import zscore_apply, zscore_fit
    from flucast.models import fit, predict

    ds = make_dataset(n=25, seed=8)
    spec = ModelSpec(kind="knn", hyperparameters={"k": 3})
    _, table = grid_search(ds, [spec], folds=5)
    folds = kfold_slices(25, 5)
    held = folds[0]
    train_rows = np.setdiff1d(np.arange(25), held)
    norm = zscore_fit(ds.X[train_rows])
    model = fit(spec, zscore_apply(norm, ds.X[train_rows]), ds.y[train_rows])
    preds = clip_nonnegative(predict(model, zscore_apply(norm, ds.X[held])))
    expected = float(np.abs(preds - ds.y[held]).mean())
    assert table[0]["fold_mae"][0] == pytest.approx(expected, abs=1e-12)


# -- split config / training --------------------------------------------------


def test_split_config_validation():
    with pytest.raises(DataError):
        SplitConfig(split_date=week(5), horizon=-1)
    with pytest.raises(DataError):
        SplitConfig(split_date=week(5), folds=1)
    cfg = SplitConfig(split_date=week(5))
    assert cfg.horizon == 0 and cfg.folds == 10


def test_train_model_requires_at_least_folds_training_rows():
    ds = make_dataset(n=12)
    with pytest.raises(DataError, match="fewer than"):
        train_model(ds, ModelSpec(kind="ols"), SplitConfig(split_date=week(5), folds=10))
    model, norm = train_model(
        ds, ModelSpec(kind="ols"), SplitConfig(split_date=week(10), folds=10)
    )
    assert model.n_features == ds.n_features


def test_train_eval_full_protocol_contract():
    ds = make_dataset(n=60, seed=9)
    split = SplitConfig(split_date=week(45), folds=10)
    report = train_eval(ds, ModelSpec(kind="ols"), split)
    assert report.n_train == 45
    assert len(report.week_starts) == 15
    assert report.week_starts[0] == week(45)
    assert (report.predicted >= 0).all()
    assert report.metrics.n == 15
    assert report.model.spec.kind == "ols"


def test_train_eval_is_deterministic():
    ds = make_dataset(n=50, seed=10)
    split = SplitConfig(split_date=week(40))
    spec = ModelSpec(
        kind="random_forest", hyperparameters={"n_estimators": 8, "max_features": 2}, seed=3
    )
    r1 = train_eval(ds, spec, split)
    r2 = train_eval(ds, spec, split)
    assert np.array_equal(r1.predicted, r2.predicted)
    assert r1.metrics == r2.metrics


def test_train_eval_horizon_shortens_test_window():
    ds = make_dataset(n=60, seed=11)
    r0 = train_eval(ds, ModelSpec(kind="ols"), SplitConfig(split_date=week(45), horizon=0))
    r3 = train_eval(ds, ModelSpec(kind="ols"), SplitConfig(split_date=week(45), horizon=3))
    assert r0.metrics.n == 15
    assert r3.metrics.n == 12  # the last 3 feature weeks have no target


def test_no_leakage_from_test_rows():
    # Perturbing only test-week features must leave the fitted normalizer and
    # model untouched.
    ds = make_dataset(n=50, seed=12)
    split = SplitConfig(split_date=week(40))
    spec = ModelSpec(kind="ridge", hyperparameters={"alpha": 1.0})
    model_a, norm_a = train_model(ds, spec, split)
    X2 = ds.X.copy()
    X2[40:] += 100.0
    ds2 = Dataset(
        week_starts=ds.week_starts, X=X2, y=ds.y, columns=ds.columns, modalities=ds.modalities
    )
    model_b, norm_b = train_model(ds2, spec, split)
    assert np.array_equal(norm_a.mean, norm_b.mean)
    assert np.array_equal(norm_a.std, norm_b.std)
    assert np.array_equal(model_a.params["weights"], model_b.params["weights"])
    assert model_a.params["intercept"] == model_b.params["intercept"]
