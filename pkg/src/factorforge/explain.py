"""Model attribution: impurity importance and exact per-instance Shapley
values for tree models.

``tree_shap`` runs the polynomial-time path-dependent algorithm in the
kernel backends; ``brute_force_shapley`` evaluates the same quantity from
the definition (subset enumeration over conditional expectations that follow
training cover proportions), which is exponential and capped at 15 features.
The two must agree to rounding; the test suite holds them to 1e-9.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from factorforge import _kernels
from factorforge.models.ensembles import BoostedModel, ForestModel
from factorforge.models.linear import LinearModel
from factorforge.models.trees import Tree

__all__ = [
    "ShapExplanation",
    "brute_force_shapley",
    "impurity_importance",
    "linear_attribution",
    "shap_summary",
    "shap_values",
    "tree_shap",
]

BRUTE_FORCE_FEATURE_LIMIT = 15


@dataclass
class ShapExplanation:
    base_value: float
    phi: np.ndarray

    @property
    def total(self) -> float:
        return self.base_value + float(self.phi.sum())


def _component_trees(model) -> list[Tree]:
    if isinstance(model, Tree):
        return [model]
    if isinstance(model, (ForestModel, BoostedModel)):
        return model.trees
    raise TypeError(
        f"expected a tree model, got {type(model).__name__}; "
        "linear models use linear_attribution"
    )


def _n_features(model, fallback: int) -> int:
    return int(getattr(model, "n_features", fallback))


def impurity_importance(model) -> np.ndarray:
    """Split-gain feature importance, normalized to sum to 1.

    Each internal node credits its split feature with the squared-error
    reduction of the split, reconstructed bottom-up from leaf values and
    covers (so fitted and reloaded models agree exactly).  A model with no
    splits has nothing to credit and returns all zeros unnormalized.
    """
    trees = _component_trees(model)
    d = _n_features(model, max(int(t.feature.max()) for t in trees) + 1)
    imp = np.zeros(d, dtype=np.float64)
    for t in trees:
        for i in range(t.n_nodes):
            f = int(t.feature[i])
            if f < 0:
                continue
            lo, hi = int(t.left[i]), int(t.right[i])
            dl = t.value[lo] - t.value[i]
            dr = t.value[hi] - t.value[i]
            imp[f] += t.cover[lo] * dl * dl + t.cover[hi] * dr * dr
    total = float(imp.sum())
    if total == 0.0:
        return imp
    return imp / total


def tree_shap(model, x) -> ShapExplanation:
    """Exact Shapley attribution of one prediction of a tree model.

    ``base_value + phi.sum()`` equals the model's prediction at ``x`` up to
    floating-point rounding.  Forests average the per-tree attributions;
    boosted models scale them by the learning rate on top of the init.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    trees = _component_trees(model)
    d = _n_features(model, x.shape[0])
    phi = np.zeros(d, dtype=np.float64)
    base = 0.0
    for t in trees:
        p, b = _kernels.tree_shap(
            t.feature, t.threshold, t.left, t.right, t.value, t.cover, x, d
        )
        phi += p
        base += b
    if isinstance(model, BoostedModel):
        lr = model.config.learning_rate
        return ShapExplanation(base_value=model.init + lr * base, phi=lr * phi)
    if isinstance(model, ForestModel):
        k = len(trees)
        return ShapExplanation(base_value=base / k, phi=phi / k)
    return ShapExplanation(base_value=base, phi=phi)


def shap_values(model, X) -> tuple[np.ndarray, float]:
    """Per-row attributions for a matrix; returns (phi matrix, base value)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"X must be 2-dimensional, got shape {X.shape}")
    out = np.empty((X.shape[0], _n_features(model, X.shape[1])), dtype=np.float64)
    base = 0.0
    for i in range(X.shape[0]):
        exp = tree_shap(model, X[i])
        out[i] = exp.phi
        base = exp.base_value
    return out, base


def _tree_cond_exp(t: Tree, x: np.ndarray, known: frozenset, node: int = 0) -> float:
    # expectation of the tree when only features in `known` are fixed to x;
    # elsewhere the walk follows training cover proportions
    f = int(t.feature[node])
    if f < 0:
        return float(t.value[node])
    lo, hi = int(t.left[node]), int(t.right[node])
    if f in known:
        nxt = lo if x[f] <= t.threshold[node] else hi
        return _tree_cond_exp(t, x, known, nxt)
    cl, cr = float(t.cover[lo]), float(t.cover[hi])
    return (
        cl * _tree_cond_exp(t, x, known, lo) + cr * _tree_cond_exp(t, x, known, hi)
    ) / (cl + cr)


def _model_value(model, x, known: frozenset) -> float:
    trees = _component_trees(model)
    acc = 0.0
    for t in trees:
        acc += _tree_cond_exp(t, x, known)
    if isinstance(model, BoostedModel):
        return model.init + model.config.learning_rate * acc
    if isinstance(model, ForestModel):
        return acc / len(trees)
    return acc


def brute_force_shapley(model, x) -> ShapExplanation:
    """Shapley values from the definition; exponential, for verification.

    Errors beyond ``BRUTE_FORCE_FEATURE_LIMIT`` features, by which point the
    subset enumeration is no longer worth waiting for.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    trees = _component_trees(model)
    d = _n_features(model, x.shape[0])
    if d > BRUTE_FORCE_FEATURE_LIMIT:
        raise ValueError(
            f"{d} features exceeds the brute-force limit of {BRUTE_FORCE_FEATURE_LIMIT}"
        )
    del trees
    phi = np.zeros(d, dtype=np.float64)
    fact = [math.factorial(k) for k in range(d + 1)]
    denom = fact[d]
    others = list(range(d))
    for i in range(d):
        rest = [f for f in others if f != i]
        for size in range(d):
            weight = fact[size] * fact[d - size - 1] / denom
            for subset in itertools.combinations(rest, size):
                s = frozenset(subset)
                gain = _model_value(model, x, s | {i}) - _model_value(model, x, s)
                phi[i] += weight * gain
    return ShapExplanation(base_value=_model_value(model, x, frozenset()), phi=phi)


def linear_attribution(model: LinearModel, x, background_mean) -> ShapExplanation:
    """Exact Shapley attribution for a linear model given a background mean.

    For linear functions the Shapley value reduces to coefficient times the
    feature's deviation from the background expectation.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    mu = np.asarray(background_mean, dtype=np.float64).ravel()
    if x.shape[0] != model.n_features or mu.shape[0] != model.n_features:
        raise ValueError(
            f"feature dimension mismatch: model expects {model.n_features}"
        )
    phi = model.coefficients * (x - mu)
    base = model.intercept + float(model.coefficients @ mu)
    return ShapExplanation(base_value=base, phi=phi)


def shap_summary(model, X, feature_names=None) -> pd.DataFrame:
    """Mean absolute attribution per feature, ranked descending.

    Ties keep the input column order (stable sort), and ranks are dense
    1-based positions in the sorted output.
    """
    phis, _ = shap_values(model, X)
    mean_abs = np.abs(phis).mean(axis=0)
    if feature_names is None:
        feature_names = [f"f{i}" for i in range(mean_abs.shape[0])]
    if len(feature_names) != mean_abs.shape[0]:
        raise ValueError(
            f"{len(feature_names)} names for {mean_abs.shape[0]} features"
        )
    order = np.argsort(-mean_abs, kind="stable")
    return pd.DataFrame(
        {
            "feature": [feature_names[i] for i in order],
            "mean_abs_shap": mean_abs[order],
            "rank": np.arange(1, mean_abs.shape[0] + 1),
        }
    )
