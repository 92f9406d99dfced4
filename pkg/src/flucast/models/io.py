"""Model persistence: a single-format JSON document.

Layout:

    {
      "format_version": 1,
      "spec": {"kind": ..., "hyperparameters": {...}, "seed": ...},
      "columns": [...] | null,
      "modalities": [...] | null,
      "flags": [...],
      "parameters": {...}          # kind-specific fitted state
    }

Floats are serialized with Python's repr (shortest exact round-trip), so
a loaded model predicts bit-identically to the one saved.  Key order is
sorted and separators fixed, making the bytes deterministic.
"""

from __future__ import annotations

import json

import numpy as np

from ..errors import CorruptModelError, DataError, ModelVersionError
from .base import KINDS, ModelSpec, TrainedModel
from .tree import tree_from_jsonable, tree_to_jsonable

FORMAT_VERSION = 1


def _params_to_jsonable(kind: str, params: dict) -> dict:
    if kind in ("ols", "ridge", "lasso", "elastic_net"):
        return {"weights": params["weights"].tolist(), "intercept": params["intercept"]}
    if kind == "knn":
        return {"X": params["X"].tolist(), "y": params["y"].tolist(), "k": params["k"]}
    if kind == "svr":
        return {
            "support_vectors": params["support_vectors"].tolist(),
            "coef": params["coef"].tolist(),
            "intercept": params["intercept"],
            "gamma": params["gamma"],
            "n_iter": params["n_iter"],
        }
    if kind == "tree":
        return {"tree": tree_to_jsonable(params["tree"])}
    if kind == "random_forest":
        return {"trees": [tree_to_jsonable(t) for t in params["trees"]]}
    if kind == "adaboost_r2":
        return {
            "trees": [tree_to_jsonable(t) for t in params["trees"]],
            "confidences": params["confidences"].tolist(),
        }
    if kind == "gbt":
        return {
            "base_score": params["base_score"],
            "learning_rate": params["learning_rate"],
            "trees": [tree_to_jsonable(t) for t in params["trees"]],
        }
    raise DataError(f"unknown model kind {kind!r}")  # pragma: no cover


def _params_from_jsonable(kind: str, obj: dict, n_features: int) -> dict:
    def matrix(rows):
        arr = np.asarray(rows, dtype=float)
        if arr.size == 0:
            arr = arr.reshape(0, n_features)
        if arr.ndim != 2 or arr.shape[1] != n_features:
            raise DataError(f"matrix shape {arr.shape} does not match {n_features} features")
        return arr

    if kind in ("ols", "ridge", "lasso", "elastic_net"):
        w = np.asarray(obj["weights"], dtype=float)
        if w.shape != (n_features,):
            raise DataError(f"weight vector shape {w.shape} does not match {n_features} features")
        return {"weights": w, "intercept": float(obj["intercept"])}
    if kind == "knn":
        X = matrix(obj["X"])
        y = np.asarray(obj["y"], dtype=float)
        if y.shape != (X.shape[0],):
            raise DataError("knn target length does not match stored rows")
        return {"X": X, "y": y, "k": int(obj["k"])}
    if kind == "svr":
        svs = matrix(obj["support_vectors"])
        coef = np.asarray(obj["coef"], dtype=float)
        if coef.shape != (svs.shape[0],):
            raise DataError("svr coefficient length does not match support vectors")
        return {
            "support_vectors": svs,
            "coef": coef,
            "intercept": float(obj["intercept"]),
            "gamma": float(obj["gamma"]),
            "n_iter": int(obj["n_iter"]),
        }
    if kind == "tree":
        return {"tree": tree_from_jsonable(obj["tree"])}
    if kind == "random_forest":
        return {"trees": [tree_from_jsonable(t) for t in obj["trees"]]}
    if kind == "adaboost_r2":
        trees = [tree_from_jsonable(t) for t in obj["trees"]]
        conf = np.asarray(obj["confidences"], dtype=float)
        if conf.shape != (len(trees),):
            raise DataError("confidence count does not match round count")
        return {"trees": trees, "confidences": conf}
    if kind == "gbt":
        return {
            "base_score": float(obj["base_score"]),
            "learning_rate": float(obj["learning_rate"]),
            "trees": [tree_from_jsonable(t) for t in obj["trees"]],
        }
    raise DataError(f"unknown model kind {kind!r}")  # pragma: no cover


def save_model(model: TrainedModel) -> bytes:
    doc = {
        "format_version": FORMAT_VERSION,
        "spec": {
            "kind": model.spec.kind,
            "hyperparameters": dict(model.spec.hyperparameters),
            "seed": model.spec.seed,
        },
        "n_features": model.n_features,
        "columns": list(model.columns) if model.columns is not None else None,
        "modalities": list(model.modalities) if model.modalities is not None else None,
        "flags": list(model.flags),
        "parameters": _params_to_jsonable(model.spec.kind, model.params),
    }
    # json emits floats with repr, the shortest exact round-trip form, so a
    # reloaded model predicts bit-identically.
    text = json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return text.encode("utf-8") + b"\n"


def load_model(data: bytes | str) -> TrainedModel:
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CorruptModelError(f"model file is not UTF-8: {exc}") from exc
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise CorruptModelError(f"model file is not valid JSON: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise CorruptModelError("model document is not a JSON object")
    version = doc.get("format_version")
    if version is None:
        raise CorruptModelError("model document lacks format_version")
    if version != FORMAT_VERSION:
        raise ModelVersionError(f"unsupported model format_version {version!r} (supported: {FORMAT_VERSION})")
    try:
        spec_doc = doc["spec"]
        spec = ModelSpec(
            kind=spec_doc["kind"],
            hyperparameters=tuple(sorted(spec_doc.get("hyperparameters", {}).items())),
            seed=spec_doc.get("seed"),
        )
        n_features = doc["n_features"]
        if not isinstance(n_features, int) or n_features < 1:
            raise DataError(f"invalid n_features {n_features!r}")
        params = _params_from_jsonable(spec.kind, doc["parameters"], n_features)
        columns = doc.get("columns")
        modalities = doc.get("modalities")
        model = TrainedModel(
            spec=spec,
            n_features=n_features,
            params=params,
            columns=tuple(columns) if columns is not None else None,
            modalities=tuple(modalities) if modalities is not None else None,
            flags=tuple(doc.get("flags", ())),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptModelError(f"malformed model document: {exc}") from exc
    return model
