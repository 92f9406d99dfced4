"""k-nearest-neighbors regression (euclidean, unweighted mean).

Distance ties are broken toward the lower training-row index, which the
stable argsort guarantees, so predictions are deterministic.
"""

from __future__ import annotations

import numpy as np

from ..errors import DataError


def fit_knn(X, y, hp):
    k = hp["k"]
    if k > X.shape[0]:
        raise DataError(f"k={k} exceeds the {X.shape[0]} training rows")
    return {"X": X.copy(), "y": y.copy(), "k": k}, []


def predict_knn(params, X):
    train = params["X"]
    targets = params["y"]
    k = params["k"]
    # squared euclidean distances, queries x training rows
    d2 = ((X[:, None, :] - train[None, :, :]) ** 2).sum(axis=2)
    order = np.argsort(d2, axis=1, kind="stable")
    return targets[order[:, :k]].mean(axis=1)
