"""Fit quality metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["EvalMetrics", "evaluate"]


@dataclass
class EvalMetrics:
    mse: float
    r2: float
    degenerate: bool = False


def evaluate(y_true, y_pred) -> EvalMetrics:
    """Mean squared error and R-squared of predictions.

    A constant truth vector has zero total variation, which makes the usual
    R-squared undefined; the result is then 1.0 for an exact fit and 0.0
    otherwise, with ``degenerate`` set so callers can tell.
    """
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    if y_true.ndim != 1 or y_pred.ndim != 1:
        raise ValueError("evaluate expects 1-dimensional arrays")
    if y_true.shape[0] != y_pred.shape[0]:
        raise ValueError(
            f"length mismatch: {y_true.shape[0]} true vs {y_pred.shape[0]} predicted"
        )
    if y_true.shape[0] == 0:
        raise ValueError("cannot evaluate empty arrays")
    resid = y_true - y_pred
    sse = float(resid @ resid)
    mse = sse / y_true.shape[0]
    centered = y_true - y_true.mean()
    sst = float(centered @ centered)
    if sst == 0.0:
        return EvalMetrics(mse=mse, r2=1.0 if sse == 0.0 else 0.0, degenerate=True)
    return EvalMetrics(mse=mse, r2=1.0 - sse / sst)
