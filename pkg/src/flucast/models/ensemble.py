"""Tree ensembles: bootstrap random forest and AdaBoost.R2.

Random forest: each of n_estimators trees trains on a bootstrap resample
with per-node random feature subsets; tree t draws from a generator
seeded with the entropy pair (seed, t), so any prefix of the ensemble is
reproducible independently of build order.

AdaBoost.R2 (Drucker): each round fits a depth-limited tree against the
current weight distribution, measures per-sample linear loss
L_i = |err_i| / max|err|, forms the weighted average loss Lbar, and — if
Lbar < 0.5 — reweights by beta = Lbar / (1 - Lbar) raised to
learning_rate * (1 - L_i).  Round confidence is
learning_rate * ln(1 / beta); the ensemble predicts the weighted median
of per-round predictions (smallest prediction whose cumulative
confidence reaches half the total).  Reweighting enters through the tree
builder's sample weights, so a single round with uniform weights equals a
plain tree fit.
"""

from __future__ import annotations

import numpy as np

from ..errors import DataError
from .tree import TreeArrays, build_tree

# -- random forest ----------------------------------------------------------


def fit_random_forest(X, y, hp, *, seed):
    n, p = X.shape
    n_estimators = hp["n_estimators"]
    max_features = hp["max_features"]
    if max_features is not None:
        if max_features > p:
            raise DataError(f"max_features={max_features} exceeds the {p} features")
        if max_features == p:
            max_features = None
    trees: list[TreeArrays] = []
    for t in range(n_estimators):
        rng = np.random.default_rng([seed, t])
        if hp["bootstrap"]:
            idx = rng.integers(0, n, size=n)
            Xt, yt = X[idx], y[idx]
        else:
            Xt, yt = X, y
        trees.append(
            build_tree(
                Xt,
                yt,
                max_depth=hp["max_depth"],
                min_samples_leaf=hp["min_samples_leaf"],
                max_features=max_features,
                rng=rng,
            )
        )
    return {"trees": trees}, []


def predict_random_forest(params, X):
    preds = np.stack([t.predict(X) for t in params["trees"]])
    return preds.mean(axis=0)


# -- AdaBoost.R2 ------------------------------------------------------------


def _per_sample_loss(err: np.ndarray, loss: str) -> np.ndarray:
    mx = err.max()
    if mx == 0.0:
        return np.zeros_like(err)
    scaled = err / mx
    if loss == "linear":
        return scaled
    if loss == "square":
        return scaled**2
    return 1.0 - np.exp(-scaled)  # exponential


def fit_adaboost_r2(X, y, hp):
    n = X.shape[0]
    n_estimators = hp["n_estimators"]
    learning_rate = hp["learning_rate"]
    loss = hp["loss"]
    max_depth = hp["max_depth"]
    w = np.full(n, 1.0 / n)
    trees: list[TreeArrays] = []
    confidences: list[float] = []
    for _ in range(n_estimators):
        t = build_tree(X, y, sample_weight=w, max_depth=max_depth)
        pred = t.predict(X)
        err = np.abs(pred - y)
        losses = _per_sample_loss(err, loss)
        lbar = float((w * losses).sum())
        if lbar <= 0.0:
            # the round fit perfectly; keep it with full confidence and stop
            trees.append(t)
            confidences.append(1.0)
            break
        if lbar >= 0.5:
            if not trees:
                # nothing useful can be boosted; keep the first tree anyway
                trees.append(t)
                confidences.append(1.0)
            break
        beta = lbar / (1.0 - lbar)
        confidences.append(learning_rate * float(np.log(1.0 / beta)))
        trees.append(t)
        w = w * np.power(beta, learning_rate * (1.0 - losses))
        total = w.sum()
        if total <= 0.0 or not np.isfinite(total):
            break
        w = w / total
    return {"trees": trees, "confidences": np.asarray(confidences)}, []


def weighted_median(values: np.ndarray, weights: np.ndarray) -> float:
    """Smallest value whose cumulative weight reaches half the total."""
    order = np.argsort(values, kind="stable")
    cum = np.cumsum(weights[order])
    cutoff = 0.5 * cum[-1]
    pick = int(np.searchsorted(cum, cutoff))
    return float(values[order[min(pick, len(values) - 1)]])


def predict_adaboost_r2(params, X):
    trees = params["trees"]
    conf = params["confidences"]
    preds = np.stack([t.predict(X) for t in trees])  # rounds x queries
    if preds.shape[0] == 1:
        return preds[0].copy()
    out = np.empty(preds.shape[1])
    for q in range(preds.shape[1]):
        out[q] = weighted_median(preds[:, q], conf)
    return out
