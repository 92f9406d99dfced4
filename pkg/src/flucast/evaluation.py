"""Evaluation protocol: chronological splits, k-fold CV, grid search,
and regression metrics.

The protocol is strictly leak-free: normalizers are fitted on training
rows only (and refitted per fold inside the grid search), and the
train/test split is chronological.  Forecasting at horizon h pairs the
features of week t with the target of week t+h by shifting the target
back and dropping the last h rows.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import date
from typing import Any, Sequence

import numpy as np
from scipy.special import betainc

from .errors import DataError
from .features import Dataset, Normalizer, zscore_apply, zscore_fit
from .models import ModelSpec, TrainedModel, fit, predict


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Metrics:
    """Point metrics of predictions against actuals.

    r2, pearson_r and p_value are None when undefined (constant actuals
    or, for the correlation, constant predictions; p also needs n >= 3).
    """

    mae: float
    r2: float | None
    pearson_r: float | None
    p_value: float | None
    n: int


def student_t_sf(t: float, dof: int) -> float:
    """P(T >= t) for Student's t with ``dof`` degrees of freedom,
    via the regularized incomplete beta function."""
    if dof < 1:
        raise DataError("degrees of freedom must be >= 1")
    x = dof / (dof + t * t)
    tail = 0.5 * float(betainc(dof / 2.0, 0.5, x))
    return tail if t >= 0 else 1.0 - tail


def pearson_p_value(r: float, n: int) -> float | None:
    """Two-sided p-value for a sample correlation of r over n pairs,
    under the t transform t = r sqrt((n-2) / (1-r^2)) with n-2 dof."""
    if n < 3:
        return None
    if abs(r) >= 1.0:
        return 0.0
    t = abs(r) * math.sqrt((n - 2) / (1.0 - r * r))
    return 2.0 * student_t_sf(t, n - 2)


def compute_metrics(actual: np.ndarray, predicted: np.ndarray) -> Metrics:
    actual = np.asarray(actual, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    if actual.shape != predicted.shape or actual.ndim != 1:
        raise DataError(f"metric arrays are misaligned: {actual.shape} vs {predicted.shape}")
    n = actual.shape[0]
    if n < 2:
        raise DataError("metrics need at least two pairs")
    if not np.all(np.isfinite(actual)) or not np.all(np.isfinite(predicted)):
        raise DataError("metrics need finite values")
    resid = actual - predicted
    mae = float(np.abs(resid).mean())
    ss_tot = float(((actual - actual.mean()) ** 2).sum())
    r2 = None if ss_tot == 0.0 else 1.0 - float((resid**2).sum()) / ss_tot
    pearson = None
    p_value = None
    sa = float(actual.std())
    sp = float(predicted.std())
    if sa > 0.0 and sp > 0.0:
        cov = float(((actual - actual.mean()) * (predicted - predicted.mean())).mean())
        pearson = max(-1.0, min(1.0, cov / (sa * sp)))
        p_value = pearson_p_value(pearson, n)
    return Metrics(mae=mae, r2=r2, pearson_r=pearson, p_value=p_value, n=n)


def clip_nonnegative(predictions: np.ndarray) -> np.ndarray:
    """Incidence counts cannot be negative; floor predictions at zero."""
    return np.maximum(np.asarray(predictions, dtype=float), 0.0)


# ---------------------------------------------------------------------------
# splits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SplitConfig:
    """Evaluation protocol knobs: the chronological split date (train =
    weeks strictly before, test = the rest), the forecast horizon, and
    the CV fold count."""

    split_date: date
    horizon: int = 0
    folds: int = 10

    def __post_init__(self):
        if self.horizon < 0:
            raise DataError("horizon must be >= 0")
        if self.folds < 2:
            raise DataError("need at least 2 folds")


def shift_horizon(dataset: Dataset, horizon: int) -> Dataset:
    """Pair week t's features with week t+h's target.

    The last h rows have no target and are dropped; rows keep the feature
    week's week_start.  h=0 returns the dataset unchanged.
    """
    if horizon < 0:
        raise DataError("horizon must be >= 0")
    if horizon == 0:
        return dataset
    n = dataset.n_rows
    if horizon >= n:
        raise DataError(f"horizon {horizon} leaves no rows (dataset has {n})")
    keep = n - horizon
    return Dataset(
        week_starts=dataset.week_starts[:keep],
        X=dataset.X[:keep].copy(),
        y=dataset.y[horizon:].copy(),
        columns=dataset.columns,
        modalities=dataset.modalities,
    )


def chronological_split(dataset: Dataset, split_date: date) -> tuple[np.ndarray, np.ndarray]:
    """Boolean masks (train, test): weeks strictly before the split date
    train; the rest test."""
    weeks = np.asarray(dataset.week_starts)
    train = weeks < split_date
    test = ~train
    if not train.any():
        raise DataError(f"no training rows before {split_date}")
    if not test.any():
        raise DataError(f"no test rows at or after {split_date}")
    return train, test


def kfold_slices(n: int, k: int, *, shuffle: bool = False, seed: int | None = None) -> list[np.ndarray]:
    """Split row indices 0..n-1 into k folds of near-equal size (sizes
    differ by at most one; larger folds first).

    Default folds are contiguous chronological blocks.  shuffle=True
    permutes rows first and requires an explicit seed.
    """
    if k < 2:
        raise DataError("need at least 2 folds")
    if n < k:
        raise DataError(f"cannot split {n} rows into {k} folds")
    order = np.arange(n)
    if shuffle:
        if seed is None:
            raise DataError("shuffled folds require an explicit seed")
        order = np.random.default_rng(seed).permutation(n)
    base, rem = divmod(n, k)
    folds = []
    start = 0
    for i in range(k):
        size = base + (1 if i < rem else 0)
        folds.append(order[start : start + size])
        start += size
    return folds


# ---------------------------------------------------------------------------
# grid search
# ---------------------------------------------------------------------------


def _fold_mae(dataset: Dataset, spec: ModelSpec, test_idx: np.ndarray) -> float:
    mask = np.ones(dataset.n_rows, dtype=bool)
    mask[test_idx] = False
    X_train, y_train = dataset.X[mask], dataset.y[mask]
    if X_train.shape[0] < 2:
        raise DataError("fold leaves fewer than 2 training rows")
    norm = zscore_fit(X_train)
    model = fit(spec, zscore_apply(norm, X_train), y_train)
    preds = clip_nonnegative(predict(model, zscore_apply(norm, dataset.X[test_idx])))
    return float(np.abs(preds - dataset.y[test_idx]).mean())


def grid_search(
    dataset: Dataset,
    grid: Sequence[ModelSpec],
    *,
    folds: int = 10,
    shuffle: bool = False,
    seed: int | None = None,
    threads: int = 1,
) -> tuple[ModelSpec, list[dict[str, Any]]]:
    """Score every spec by mean fold MAE; return the winner and the table.

    Each (spec, fold) job refits the normalizer on that fold's training
    rows, so no test information leaks into scaling.  Results are reduced
    by (spec, fold) key, making the outcome independent of thread count;
    ties on mean MAE go to the earliest grid position.
    """
    if not grid:
        raise DataError("empty model grid")
    if threads < 1:
        raise DataError("threads must be >= 1")
    fold_idx = kfold_slices(dataset.n_rows, folds, shuffle=shuffle, seed=seed)
    jobs = [(si, fi) for si in range(len(grid)) for fi in range(len(fold_idx))]
    scores = np.empty((len(grid), len(fold_idx)))
    if threads == 1:
        for si, fi in jobs:
            scores[si, fi] = _fold_mae(dataset, grid[si], fold_idx[fi])
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for (si, fi), mae in zip(
                jobs, pool.map(lambda job: _fold_mae(dataset, grid[job[0]], fold_idx[job[1]]), jobs)
            ):
                scores[si, fi] = mae
    table = []
    for si, spec in enumerate(grid):
        table.append(
            {
                "spec": spec.describe(),
                "fold_mae": [float(v) for v in scores[si]],
                "mean_mae": float(scores[si].mean()),
            }
        )
    best = int(np.argmin([row["mean_mae"] for row in table]))
    return grid[best], table


# ---------------------------------------------------------------------------
# train / evaluate
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EvalReport:
    """Held-out evaluation result: metrics plus per-week predictions.

    Carries the fitted model and normalizer so callers can inspect
    importances or reuse the model without refitting.
    """

    spec: ModelSpec
    split: SplitConfig
    n_train: int
    metrics: Metrics
    week_starts: tuple[date, ...]
    actual: np.ndarray
    predicted: np.ndarray
    model: TrainedModel
    normalizer: Normalizer


def train_model(dataset: Dataset, spec: ModelSpec, split: SplitConfig) -> tuple[TrainedModel, Normalizer]:
    """Fit on the training side of the chronological split at the given
    horizon; returns the model and the training-rows normalizer."""
    shifted = shift_horizon(dataset, split.horizon)
    train_mask, test_mask = chronological_split(shifted, split.split_date)
    if int(train_mask.sum()) < split.folds:
        raise DataError(
            f"split leaves {int(train_mask.sum())} training rows, fewer than {split.folds} folds"
        )
    X_train = shifted.X[train_mask]
    norm = zscore_fit(X_train)
    model = fit(
        spec,
        zscore_apply(norm, X_train),
        shifted.y[train_mask],
        columns=shifted.columns,
        modalities=shifted.modalities,
    )
    return model, norm


def train_eval(dataset: Dataset, spec: ModelSpec, split: SplitConfig) -> EvalReport:
    """Full protocol: shift to the horizon, split chronologically, fit on
    train (normalizer included), predict the test weeks, clip at zero,
    and score."""
    shifted = shift_horizon(dataset, split.horizon)
    train_mask, test_mask = chronological_split(shifted, split.split_date)
    model, norm = train_model(dataset, spec, split)
    preds = clip_nonnegative(predict(model, zscore_apply(norm, shifted.X[test_mask])))
    actual = shifted.y[test_mask]
    weeks = tuple(w for w, keep in zip(shifted.week_starts, test_mask) if keep)
    return EvalReport(
        spec=spec,
        split=split,
        n_train=int(train_mask.sum()),
        metrics=compute_metrics(actual, preds),
        week_starts=weeks,
        actual=actual.copy(),
        predicted=preds,
        model=model,
        normalizer=norm,
    )
