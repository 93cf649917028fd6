"""Regression models fitted from scratch: OLS, ridge, CART trees, random
forests, and gradient boosting, plus evaluation metrics and JSON
serialization."""

from __future__ import annotations

import numpy as np

from factorforge.models.ensembles import (
    BoostConfig,
    BoostedModel,
    ForestConfig,
    ForestModel,
    fit_gradient_boosting,
    fit_random_forest,
)
from factorforge.models.io import (
    load_model,
    model_from_dict,
    model_to_dict,
    save_model,
)
from factorforge.models.linear import LinearModel, fit_ols, fit_ridge
from factorforge.models.metrics import EvalMetrics, evaluate
from factorforge.models.trees import Tree, fit_tree, stable_orders

__all__ = [
    "BoostConfig",
    "BoostedModel",
    "EvalMetrics",
    "ForestConfig",
    "ForestModel",
    "LinearModel",
    "Tree",
    "evaluate",
    "fit_gradient_boosting",
    "fit_ols",
    "fit_random_forest",
    "fit_ridge",
    "fit_tree",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "predict",
    "save_model",
    "stable_orders",
]


def predict(model, X) -> np.ndarray:
    """Predict with any fitted model, checking the feature dimension."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"X must be 2-dimensional, got shape {X.shape}")
    expected = getattr(model, "n_features", None)
    if expected is not None and X.shape[1] != expected:
        raise ValueError(
            f"feature dimension mismatch: model expects {expected}, X has {X.shape[1]}"
        )
    return model.predict(X)
