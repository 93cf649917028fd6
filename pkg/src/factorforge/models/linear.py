"""Linear regression models: ordinary least squares and ridge."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["LinearModel", "fit_ols", "fit_ridge"]


@dataclass
class LinearModel:
    kind: str
    alpha: float
    intercept: float
    coefficients: np.ndarray
    rank_deficient: bool = field(default=False, compare=False)

    @property
    def n_features(self) -> int:
        return int(self.coefficients.shape[0])

    def predict(self, X: np.ndarray) -> np.ndarray:
        return X @ self.coefficients + self.intercept


def _check_xy(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"X must be 2-dimensional, got shape {X.shape}")
    if y.ndim != 1:
        raise ValueError(f"y must be 1-dimensional, got shape {y.shape}")
    if X.shape[0] == 0:
        raise ValueError("X has no rows")
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"length mismatch: X has {X.shape[0]} rows, y has {y.shape[0]}")
    return X, y


def fit_ols(X, y) -> LinearModel:
    """Least-squares fit with intercept.

    Solved through an SVD factorization, so a rank-deficient design matrix
    yields the minimum-norm coefficient vector (flagged on the model) rather
    than an error.
    """
    X, y = _check_xy(X, y)
    aug = np.hstack([np.ones((X.shape[0], 1)), X])
    beta, _, rank, _ = np.linalg.lstsq(aug, y, rcond=None)
    return LinearModel(
        kind="ols",
        alpha=0.0,
        intercept=float(beta[0]),
        coefficients=beta[1:].copy(),
        rank_deficient=rank < aug.shape[1],
    )


def fit_ridge(X, y, alpha: float = 1.0) -> LinearModel:
    """Ridge regression with an unpenalized intercept.

    Centering X and y removes the intercept from the penalized system, so
    only the slope coefficients shrink.  ``alpha=0`` falls back to the OLS
    solver and therefore reproduces it exactly.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    X, y = _check_xy(X, y)
    if alpha == 0.0:
        ols = fit_ols(X, y)
        return LinearModel(
            kind="ridge",
            alpha=0.0,
            intercept=ols.intercept,
            coefficients=ols.coefficients,
            rank_deficient=ols.rank_deficient,
        )
    xm = X.mean(axis=0)
    ym = float(y.mean())
    Xc = X - xm
    yc = y - ym
    d = X.shape[1]
    gram = Xc.T @ Xc + alpha * np.eye(d)
    coef = np.linalg.solve(gram, Xc.T @ yc)
    return LinearModel(
        kind="ridge",
        alpha=float(alpha),
        intercept=ym - float(xm @ coef),
        coefficients=coef,
    )
