"""Tree ensembles: bootstrap-averaged forests and gradient boosting.

Both fitters are deterministic for a given seed on any platform: resampling
comes from the package's portable generator (per-tree seed derived from the
ensemble seed and tree index), and tree construction delegates to the kernel
backends, which are bit-identical to each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from factorforge import _kernels
from factorforge.models.trees import Tree, _tree_from_kernel, stable_orders
from factorforge.rng import derive_seed

__all__ = [
    "BoostConfig",
    "BoostedModel",
    "ForestConfig",
    "ForestModel",
    "fit_gradient_boosting",
    "fit_random_forest",
]


@dataclass
class ForestConfig:
    n_estimators: int = 100
    max_depth: int = 5
    seed: int = 42
    min_samples_split: int = 2
    feature_fraction: float = 1.0


@dataclass
class BoostConfig:
    n_iterations: int = 100
    max_depth: int = 3
    learning_rate: float = 0.1
    seed: int = 42
    min_samples_split: int = 2


@dataclass
class ForestModel:
    config: ForestConfig
    trees: list[Tree]
    n_features: int

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        acc = np.zeros(X.shape[0], dtype=np.float64)
        for t in self.trees:
            acc += t.predict(X)
        return acc / len(self.trees)


@dataclass
class BoostedModel:
    config: BoostConfig
    init: float
    trees: list[Tree]
    n_features: int
    training_mse: list[float] = field(default_factory=list, repr=False, compare=False)

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        acc = np.full(X.shape[0], self.init, dtype=np.float64)
        for t in self.trees:
            acc += self.config.learning_rate * t.predict(X)
        return acc

    def predict_staged(self, X: np.ndarray):
        """Yield predictions after the init and after each boosting stage."""
        X = np.ascontiguousarray(X, dtype=np.float64)
        acc = np.full(X.shape[0], self.init, dtype=np.float64)
        yield acc.copy()
        for t in self.trees:
            acc += self.config.learning_rate * t.predict(X)
            yield acc.copy()


def _check_fit_inputs(X, y):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise ValueError(f"X must be a nonempty 2-d array, got shape {X.shape}")
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"length mismatch: X has {X.shape[0]} rows, y has {y.shape[0]}")
    return X, y


def _seq_mean(v: np.ndarray) -> float:
    # left-to-right accumulation; np.mean sums pairwise, which would break
    # bit-reproducibility guarantees shared with the compiled backend
    return float(np.cumsum(v)[-1]) / v.shape[0]


def fit_random_forest(
    X,
    y,
    config: ForestConfig | None = None,
    *,
    feature_ids=None,
    presorted=None,
) -> ForestModel:
    """Fit a bootstrap-averaged forest of variance-reduction trees.

    Tree ``i`` resamples the rows with replacement using a stream seeded by
    ``derive_seed(config.seed, i)``, so trees are independent of fitting
    order.  ``feature_ids``/``presorted`` let callers restrict columns and
    reuse sort orders across fits on the same matrix; node feature indices
    then refer to positions within ``feature_ids``.
    """
    X, y = _check_fit_inputs(X, y)
    cfg = config if config is not None else ForestConfig()
    if cfg.n_estimators < 1:
        raise ValueError(f"n_estimators must be positive, got {cfg.n_estimators}")
    if not 0.0 < cfg.feature_fraction <= 1.0:
        raise ValueError(f"feature_fraction must be in (0, 1], got {cfg.feature_fraction}")
    if feature_ids is None:
        feature_ids = np.arange(X.shape[1], dtype=np.int64)
    else:
        feature_ids = np.asarray(feature_ids, dtype=np.int64)
    if presorted is None:
        presorted = stable_orders(X, feature_ids)
    d = feature_ids.shape[0]
    k = d if cfg.feature_fraction >= 1.0 else max(1, int(cfg.feature_fraction * d))
    n = X.shape[0]
    trees = []
    for i in range(cfg.n_estimators):
        counts, state = _kernels.bootstrap_counts(derive_seed(cfg.seed, i), n)
        out = _kernels.build_tree(
            X,
            y,
            counts,
            presorted,
            feature_ids,
            cfg.max_depth,
            float(cfg.min_samples_split),
            k,
            state,
        )
        trees.append(_tree_from_kernel(out))
    return ForestModel(config=cfg, trees=trees, n_features=d)


def fit_gradient_boosting(
    X,
    y,
    config: BoostConfig | None = None,
    *,
    feature_ids=None,
    presorted=None,
) -> BoostedModel:
    """Fit a gradient-boosted ensemble for squared error.

    The model starts from the target mean; each stage fits a tree to the
    current residuals and adds ``learning_rate`` times its predictions.
    ``training_mse`` records the in-sample MSE after every stage.
    """
    X, y = _check_fit_inputs(X, y)
    cfg = config if config is not None else BoostConfig()
    if cfg.n_iterations < 1:
        raise ValueError(f"n_iterations must be positive, got {cfg.n_iterations}")
    if not 0.0 < cfg.learning_rate <= 1.0:
        raise ValueError(f"learning_rate must be in (0, 1], got {cfg.learning_rate}")
    if feature_ids is None:
        feature_ids = np.arange(X.shape[1], dtype=np.int64)
    else:
        feature_ids = np.asarray(feature_ids, dtype=np.int64)
    if presorted is None:
        presorted = stable_orders(X, feature_ids)
    n = X.shape[0]
    d = feature_ids.shape[0]
    ones = np.ones(n, dtype=np.float64)
    init = _seq_mean(y)
    preds = np.full(n, init, dtype=np.float64)
    trees = []
    mse_path = []
    for _ in range(cfg.n_iterations):
        resid = y - preds
        out = _kernels.build_tree(
            X,
            resid,
            ones,
            presorted,
            feature_ids,
            cfg.max_depth,
            float(cfg.min_samples_split),
            d,
            None,
        )
        tree = _tree_from_kernel(out)
        trees.append(tree)
        preds = preds + cfg.learning_rate * tree.value[out["leaf_for_row"]]
        err = y - preds
        mse_path.append(float(np.mean(err * err)))
    return BoostedModel(
        config=cfg,
        init=init,
        trees=trees,
        n_features=d,
        training_mse=mse_path,
    )
