"""Regression trees: exact greedy variance-reduction splitting.

Split candidates are midpoints between consecutive distinct sorted values
of one feature.  The chosen split maximizes the (weighted) reduction in
sum of squared errors; ties go to the earliest candidate of the earliest
feature, so building is fully deterministic.  When ``max_features`` is
set, each node scans a random feature subset drawn from the supplied
generator (per-node, depth-first order).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError

_EPS_GAIN = 1e-12


@dataclass(eq=False)
class TreeArrays:
    """Flat array encoding of a binary regression tree.

    feature[i] == -1 marks a leaf; internal nodes route queries with
    x[feature] <= threshold to ``left`` and the rest to ``right``.
    ``gain`` records each split's SSE reduction (0 at leaves) for
    importance attribution.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    gain: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        pending = np.nonzero(self.feature[node] >= 0)[0]
        while pending.size:
            nd = node[pending]
            go_left = X[pending, self.feature[nd]] <= self.threshold[nd]
            node[pending] = np.where(go_left, self.left[nd], self.right[nd])
            pending = pending[self.feature[node[pending]] >= 0]
        return self.value[node].copy()

    def feature_gains(self, p: int) -> np.ndarray:
        """Total split gain per feature index."""
        out = np.zeros(p, dtype=float)
        internal = self.feature >= 0
        np.add.at(out, self.feature[internal], self.gain[internal])
        return out


def _best_split(xs: np.ndarray, ys: np.ndarray, ws: np.ndarray, min_samples_leaf: int):
    """Best (gain, threshold) for one feature, or None.

    Maximizes S_L^2/W_L + S_R^2/W_R - S^2/W, the weighted between-group
    SSE reduction, over boundary positions between distinct values.
    """
    m = xs.shape[0]
    order = np.argsort(xs, kind="stable")
    xs = xs[order]
    wy = (ws * ys)[order]
    ws = ws[order]
    cw = np.cumsum(ws)
    cwy = np.cumsum(wy)
    w_all = cw[-1]
    s_all = cwy[-1]
    boundaries = np.nonzero(xs[:-1] < xs[1:])[0] + 1  # left block sizes
    if boundaries.size == 0:
        return None
    lo, hi = min_samples_leaf, m - min_samples_leaf
    boundaries = boundaries[(boundaries >= lo) & (boundaries <= hi)]
    if boundaries.size == 0:
        return None
    w_l = cw[boundaries - 1]
    s_l = cwy[boundaries - 1]
    w_r = w_all - w_l
    s_r = s_all - s_l
    ok = (w_l > 0) & (w_r > 0)
    if not np.any(ok):
        return None
    gains = np.full(boundaries.shape, -np.inf)
    gains[ok] = s_l[ok] ** 2 / w_l[ok] + s_r[ok] ** 2 / w_r[ok] - s_all**2 / w_all
    best = int(np.argmax(gains))
    if gains[best] <= _EPS_GAIN:
        return None
    pos = boundaries[best]
    threshold = (xs[pos - 1] + xs[pos]) / 2.0
    return float(gains[best]), threshold


def build_tree(
    X: np.ndarray,
    y: np.ndarray,
    *,
    sample_weight: np.ndarray | None = None,
    max_depth: int | None = None,
    min_samples_leaf: int = 1,
    max_features: int | None = None,
    rng: np.random.Generator | None = None,
) -> TreeArrays:
    n, p = X.shape
    if sample_weight is None:
        sample_weight = np.ones(n)
    if max_features is not None and max_features < p and rng is None:
        raise DataError("per-node feature sampling requires a random generator")

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
    # Explicit depth-first stack; left child is processed before right so
    # per-node feature draws happen in a stable preorder.
    stack: list[tuple[int, np.ndarray, int]] = [(root, np.arange(n), 0)]
    while stack:
        node, idx, depth = stack.pop()
        ys = y[idx]
        ws = sample_weight[idx]
        w_sum = ws.sum()
        value[node] = float((ws * ys).sum() / w_sum) if w_sum > 0 else float(ys.mean())
        m = idx.shape[0]
        if (
            (max_depth is not None and depth >= max_depth)
            or m < 2 * min_samples_leaf
            or m < 2
            or np.ptp(ys) == 0.0
        ):
            continue
        if max_features is not None and max_features < p:
            feats = np.sort(rng.choice(p, size=max_features, replace=False))
        else:
            feats = np.arange(p)
        best = None  # (gain, feature, threshold)
        for j in feats:
            found = _best_split(X[idx, j], ys, ws, min_samples_leaf)
            if found is not None and (best is None or found[0] > best[0]):
                best = (found[0], int(j), found[1])
        if best is None:
            continue
        g, j, thr = best
        mask = X[idx, j] <= thr
        left_idx = idx[mask]
        right_idx = idx[~mask]
        if left_idx.size == 0 or right_idx.size == 0:  # degenerate float midpoint
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


def tree_to_jsonable(t: TreeArrays) -> dict:
    return {
        "feature": t.feature.tolist(),
        "threshold": [None if np.isnan(v) else float(v) for v in t.threshold],
        "left": t.left.tolist(),
        "right": t.right.tolist(),
        "value": t.value.tolist(),
        "gain": t.gain.tolist(),
    }


def tree_from_jsonable(obj: dict) -> TreeArrays:
    try:
        return TreeArrays(
            feature=np.asarray(obj["feature"], dtype=np.int32),
            threshold=np.asarray(
                [np.nan if v is None else float(v) for v in obj["threshold"]], dtype=float
            ),
            left=np.asarray(obj["left"], dtype=np.int32),
            right=np.asarray(obj["right"], dtype=np.int32),
            value=np.asarray(obj["value"], dtype=float),
            gain=np.asarray(obj["gain"], dtype=float),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed tree encoding: {exc}") from exc


# -- kind plumbing ----------------------------------------------------------


def fit_tree(X, y, hp, *, seed=None):
    rng = None
    if hp["max_features"] is not None and hp["max_features"] < X.shape[1]:
        rng = np.random.default_rng(seed)
    t = build_tree(
        X,
        y,
        max_depth=hp["max_depth"],
        min_samples_leaf=hp["min_samples_leaf"],
        max_features=hp["max_features"],
        rng=rng,
    )
    return {"tree": t}, []


def predict_tree(params, X):
    return params["tree"].predict(X)
