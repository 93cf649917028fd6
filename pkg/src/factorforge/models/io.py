"""Model serialization.

Every model round-trips through JSON without loss: floats are written in
shortest round-trip decimal form (Python's default), and internal tree node
statistics are rebuilt from the leaves on load, so a reloaded model produces
bit-identical predictions and attributions.
"""

from __future__ import annotations

import json
import os

import numpy as np

from factorforge.models.ensembles import (
    BoostConfig,
    BoostedModel,
    ForestConfig,
    ForestModel,
)
from factorforge.models.linear import LinearModel
from factorforge.models.trees import Tree

__all__ = ["load_model", "model_from_dict", "model_to_dict", "save_model"]


def model_to_dict(model) -> dict:
    if isinstance(model, LinearModel):
        return {
            "kind": model.kind,
            "alpha": float(model.alpha),
            "intercept": float(model.intercept),
            "coefficients": [float(c) for c in model.coefficients],
        }
    if isinstance(model, ForestModel):
        cfg = model.config
        return {
            "kind": "random_forest",
            "seed": int(cfg.seed),
            "config": {
                "n_estimators": int(cfg.n_estimators),
                "max_depth": int(cfg.max_depth),
                "min_samples_split": int(cfg.min_samples_split),
                "feature_fraction": float(cfg.feature_fraction),
            },
            "n_features": int(model.n_features),
            "trees": [t.to_dict() for t in model.trees],
        }
    if isinstance(model, BoostedModel):
        cfg = model.config
        return {
            "kind": "gradient_boosting",
            "seed": int(cfg.seed),
            "config": {
                "n_iterations": int(cfg.n_iterations),
                "max_depth": int(cfg.max_depth),
                "learning_rate": float(cfg.learning_rate),
                "min_samples_split": int(cfg.min_samples_split),
            },
            "init": float(model.init),
            "n_features": int(model.n_features),
            "trees": [t.to_dict() for t in model.trees],
        }
    raise TypeError(f"cannot serialize model of type {type(model).__name__}")


def model_from_dict(d: dict):
    kind = d.get("kind")
    if kind in ("ols", "ridge"):
        return LinearModel(
            kind=kind,
            alpha=float(d["alpha"]),
            intercept=float(d["intercept"]),
            coefficients=np.asarray(d["coefficients"], dtype=np.float64),
        )
    if kind == "random_forest":
        cfg = ForestConfig(seed=int(d["seed"]), **{
            k: d["config"][k]
            for k in ("n_estimators", "max_depth", "min_samples_split", "feature_fraction")
        })
        return ForestModel(
            config=cfg,
            trees=[Tree.from_dict(t) for t in d["trees"]],
            n_features=int(d["n_features"]),
        )
    if kind == "gradient_boosting":
        cfg = BoostConfig(seed=int(d["seed"]), **{
            k: d["config"][k]
            for k in ("n_iterations", "max_depth", "learning_rate", "min_samples_split")
        })
        return BoostedModel(
            config=cfg,
            init=float(d["init"]),
            trees=[Tree.from_dict(t) for t in d["trees"]],
            n_features=int(d["n_features"]),
        )
    raise ValueError(f"unknown model kind {kind!r}")


def save_model(model, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=2)
        fh.write("\n")


def load_model(path: str | os.PathLike):
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
