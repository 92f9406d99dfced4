"""Gain-based feature importances for tree, random forest, and boosted
trees.

Each split's recorded gain is credited to its feature; ensemble members
are summed.  Shares are normalized to sum to 1.  Per-modality shares
aggregate feature shares by the modality tags stored on the model, when
present.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError
from .base import TrainedModel


@dataclass(frozen=True)
class ImportanceReport:
    per_feature: tuple[tuple[str, float], ...]
    per_modality: tuple[tuple[str, float], ...]


def feature_importances(model: TrainedModel) -> ImportanceReport:
    kind = model.spec.kind
    p = model.n_features
    if kind == "tree":
        gains = model.params["tree"].feature_gains(p)
    elif kind in ("random_forest", "gbt"):
        gains = np.zeros(p)
        for t in model.params["trees"]:
            gains += t.feature_gains(p)
    else:
        raise DataError(f"model kind {kind!r} does not expose gain-based importances")
    total = gains.sum()
    if total <= 0.0:
        raise DataError("model has no split gains to attribute")
    shares = gains / total
    names = model.columns if model.columns is not None else tuple(f"x{i}" for i in range(p))
    per_feature = tuple((name, float(s)) for name, s in zip(names, shares))
    per_modality: tuple[tuple[str, float], ...] = ()
    if model.modalities is not None:
        agg: dict[str, float] = {}
        for tag, s in zip(model.modalities, shares):
            agg[tag] = agg.get(tag, 0.0) + float(s)
        per_modality = tuple(agg.items())
    return ImportanceReport(per_feature=per_feature, per_modality=per_modality)
