"""Regression trees: greedy variance-reduction CART, depth-limited.

The flat-array representation (preorder node ids, left child first) is what
the kernel backends produce and consume.  Internal node values and covers
are normalized bottom-up from the leaves, so a tree rebuilt from its nested
dict form is indistinguishable from the freshly fitted one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from factorforge import _kernels

__all__ = ["Tree", "fit_tree", "stable_orders"]


def stable_orders(X: np.ndarray, feature_ids=None) -> np.ndarray:
    """Per-feature stable argsort of ``X`` rows, shaped (n_features, n)."""
    X = np.asarray(X, dtype=np.float64)
    if feature_ids is None:
        feature_ids = range(X.shape[1])
    return np.stack(
        [np.argsort(X[:, f], kind="stable").astype(np.int64) for f in feature_ids]
    )


@dataclass
class Tree:
    feature: np.ndarray  # int64; -1 marks a leaf; else position in the fit's feature list
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    cover: np.ndarray

    def __post_init__(self):
        self._normalize()

    def _normalize(self) -> None:
        # preorder ids put children after parents, so one descending pass
        # rebuilds every internal value/cover from the leaves
        for i in range(self.feature.shape[0] - 1, -1, -1):
            if self.feature[i] < 0:
                continue
            lo, hi = int(self.left[i]), int(self.right[i])
            cl, cr = float(self.cover[lo]), float(self.cover[hi])
            self.cover[i] = cl + cr
            self.value[i] = (cl * self.value[lo] + cr * self.value[hi]) / (cl + cr)

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())

    @property
    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=np.int64)
        out = 0
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depths[self.left[i]] = depths[i] + 1
                depths[self.right[i]] = depths[i] + 1
            out = max(out, int(depths[i]))
        return out

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError(f"X must be 2-dimensional, got shape {X.shape}")
        used = int(self.feature.max())
        if used >= X.shape[1]:
            raise ValueError(
                f"feature dimension mismatch: tree uses column {used}, X has {X.shape[1]}"
            )
        return _kernels.predict_tree(
            self.feature, self.threshold, self.left, self.right, self.value, X
        )

    def to_dict(self) -> dict:
        def node(i: int) -> dict:
            if self.feature[i] < 0:
                c = float(self.cover[i])
                return {
                    "value": float(self.value[i]),
                    "n": int(c) if c.is_integer() else c,
                }
            return {
                "feature": int(self.feature[i]),
                "threshold": float(self.threshold[i]),
                "left": node(int(self.left[i])),
                "right": node(int(self.right[i])),
            }

        return node(0)

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        feature: list[int] = []
        threshold: list[float] = []
        left: list[int] = []
        right: list[int] = []
        value: list[float] = []
        cover: list[float] = []

        def walk(nd: dict) -> int:
            i = len(feature)
            if "value" in nd:
                feature.append(-1)
                threshold.append(0.0)
                left.append(-1)
                right.append(-1)
                value.append(float(nd["value"]))
                cover.append(float(nd["n"]))
                return i
            feature.append(int(nd["feature"]))
            threshold.append(float(nd["threshold"]))
            left.append(-1)
            right.append(-1)
            value.append(0.0)
            cover.append(0.0)
            left[i] = walk(nd["left"])
            right[i] = walk(nd["right"])
            return i

        walk(d)
        return cls(
            feature=np.array(feature, dtype=np.int64),
            threshold=np.array(threshold, dtype=np.float64),
            left=np.array(left, dtype=np.int64),
            right=np.array(right, dtype=np.int64),
            value=np.array(value, dtype=np.float64),
            cover=np.array(cover, dtype=np.float64),
        )


def _tree_from_kernel(out: dict) -> Tree:
    return Tree(
        feature=out["feature"],
        threshold=out["threshold"],
        left=out["left"],
        right=out["right"],
        value=out["value"],
        cover=out["cover"],
    )


def fit_tree(X, y, max_depth: int, min_samples_split: int = 2) -> Tree:
    """Grow a single regression tree on unweighted data.

    Splits minimize the summed squared error of the two children; candidate
    thresholds are midpoints between consecutive distinct feature values.
    Ties prefer the lowest feature index, then the smallest threshold.  A
    node stops splitting at ``max_depth``, below ``min_samples_split`` rows,
    when its targets are constant, or when no split reduces the error.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError(f"X must be a nonempty 2-d array, got shape {X.shape}")
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"length mismatch: X has {X.shape[0]} rows, y has {y.shape[0]}")
    if max_depth < 0:
        raise ValueError(f"max_depth must be nonnegative, got {max_depth}")
    n, d = X.shape
    out = _kernels.build_tree(
        X,
        y,
        np.ones(n, dtype=np.float64),
        stable_orders(X),
        np.arange(d, dtype=np.int64),
        max_depth,
        float(min_samples_split),
        d,
        None,
    )
    return _tree_from_kernel(out)
