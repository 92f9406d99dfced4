"""Gradient-boosted trees with second-order leaf weights and L1/L2
regularization.

Squared-error loss gives per-row gradient g = yhat - y and hessian h = 1.
Starting from base_score = mean(y), each round grows one tree by exact
greedy search: with G, H the gradient/hessian sums of a node and
T(G) = sign(G) * max(|G| - reg_alpha, 0) the L1 soft threshold, a node
scores T(G)^2 / (H + reg_lambda), a split gains
0.5 * (score_L + score_R - score_parent), and a leaf outputs
-T(G) / (H + reg_lambda).  Splits need positive gain; thresholds are
midpoints between consecutive distinct feature values.  The ensemble
prediction is base_score + learning_rate * sum(tree outputs).  Training
stops early when a round's tree collapses to a single zero leaf (no
remaining gradient beats the L1 term), which leaves every later round
identical.
"""

from __future__ import annotations

import numpy as np

from ..errors import DataError
from .tree import TreeArrays

_EPS_GAIN = 1e-12


def _soft(g: np.ndarray | float, reg_alpha: float):
    return np.sign(g) * np.maximum(np.abs(g) - reg_alpha, 0.0)


def _leaf_weight(gsum: float, hsum: float, reg_alpha: float, reg_lambda: float) -> float:
    return float(-_soft(gsum, reg_alpha) / (hsum + reg_lambda))


def _node_score(gsum, hsum, reg_alpha, reg_lambda):
    t = _soft(gsum, reg_alpha)
    return t * t / (hsum + reg_lambda)


def _build_gbt_tree(
    X: np.ndarray,
    grad: np.ndarray,
    hess: np.ndarray,
    rows: np.ndarray,
    *,
    max_depth: int | None,
    reg_alpha: float,
    reg_lambda: float,
) -> TreeArrays:
    n, p = X.shape
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []
    gain: list[float] = []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(np.nan)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        gain.append(0.0)
        return len(feature) - 1

    root = new_node()
    stack = [(root, rows, 0)]
    while stack:
        node, idx, depth = stack.pop()
        gs = grad[idx]
        hs = hess[idx]
        g_all = float(gs.sum())
        h_all = float(hs.sum())
        value[node] = _leaf_weight(g_all, h_all, reg_alpha, reg_lambda)
        if (max_depth is not None and depth >= max_depth) or idx.shape[0] < 2:
            continue
        parent_score = _node_score(g_all, h_all, reg_alpha, reg_lambda)
        best = None  # (gain, feature, threshold)
        for j in range(p):
            xs = X[idx, j]
            order = np.argsort(xs, kind="stable")
            xs_s = xs[order]
            cg = np.cumsum(gs[order])
            ch = np.cumsum(hs[order])
            bnd = np.nonzero(xs_s[:-1] < xs_s[1:])[0] + 1
            if bnd.size == 0:
                continue
            gl = cg[bnd - 1]
            hl = ch[bnd - 1]
            score_l = _node_score(gl, hl, reg_alpha, reg_lambda)
            score_r = _node_score(g_all - gl, h_all - hl, reg_alpha, reg_lambda)
            gains = 0.5 * (score_l + score_r - parent_score)
            k = int(np.argmax(gains))
            if best is None or gains[k] > best[0]:
                pos = bnd[k]
                best = (float(gains[k]), j, (xs_s[pos - 1] + xs_s[pos]) / 2.0)
        if best is None or best[0] <= _EPS_GAIN:
            continue
        g, j, thr = best
        mask = X[idx, j] <= thr
        left_idx = idx[mask]
        right_idx = idx[~mask]
        if left_idx.size == 0 or right_idx.size == 0:
            continue
        feature[node] = j
        threshold[node] = thr
        gain[node] = g
        lnode = new_node()
        rnode = new_node()
        left[node] = lnode
        right[node] = rnode
        stack.append((rnode, right_idx, depth + 1))
        stack.append((lnode, left_idx, depth + 1))

    return TreeArrays(
        feature=np.asarray(feature, dtype=np.int32),
        threshold=np.asarray(threshold, dtype=float),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        value=np.asarray(value, dtype=float),
        gain=np.asarray(gain, dtype=float),
    )


def fit_gbt(X, y, hp, *, seed=None):
    n = X.shape[0]
    n_estimators = hp["n_estimators"]
    lr = hp["learning_rate"]
    reg_alpha = hp["reg_alpha"]
    reg_lambda = hp["reg_lambda"]
    max_depth = hp["max_depth"]
    subsample = hp["subsample"]
    if subsample <= 0.0:
        raise DataError("subsample must be positive")
    rng = np.random.default_rng(seed) if subsample < 1.0 else None

    base_score = float(y.mean())
    yhat = np.full(n, base_score)
    hess = np.ones(n)
    trees: list[TreeArrays] = []
    flags: list[str] = []
    for _ in range(n_estimators):
        grad = yhat - y
        if rng is not None:
            m = max(1, int(round(subsample * n)))
            rows = np.sort(rng.choice(n, size=m, replace=False))
        else:
            rows = np.arange(n)
        t = _build_gbt_tree(
            X, grad, hess, rows,
            max_depth=max_depth, reg_alpha=reg_alpha, reg_lambda=reg_lambda,
        )
        if t.n_nodes == 1 and t.value[0] == 0.0:
            flags.append("stopped_early")
            break
        trees.append(t)
        yhat = yhat + lr * t.predict(X)
    return {"base_score": base_score, "learning_rate": lr, "trees": trees}, flags


def predict_gbt(params, X):
    out = np.full(X.shape[0], params["base_score"])
    lr = params["learning_rate"]
    for t in params["trees"]:
        out += lr * t.predict(X)
    return out
