"""Regression quality metrics used throughout the evaluation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RegressionMetrics:
    r2: float | None    # None marks the undefined case (constant targets)
    mae: float
    rmse: float
    n: int


def evaluate(predictions, targets):
    """Coefficient of determination, MAE, and RMSE.

    R2 is reported as None when the targets are constant (zero denominator).
    """
    predictions = np.asarray(predictions, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if predictions.shape != targets.shape:
        raise ValueError("length mismatch between predictions and targets")
    n = predictions.size
    if n < 2:
        raise ValueError("need at least 2 samples")
    err = predictions - targets
    mae = float(np.mean(np.abs(err)))
    rmse = float(np.sqrt(np.mean(err ** 2)))
    ss_tot = float(np.sum((np.mean(targets) - targets) ** 2))
    if ss_tot == 0.0:
        r2 = None
    else:
        r2 = 1.0 - float(np.sum(err ** 2)) / ss_tot
    return RegressionMetrics(r2=r2, mae=mae, rmse=rmse, n=n)
