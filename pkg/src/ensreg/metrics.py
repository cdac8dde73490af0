"""Regression error metrics.

All functions take actual values first and predictions second, accept any
sequence convertible to a 1-D float array, and return a plain Python float.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConstantTarget, EmptyInput, LengthMismatch, ZeroDenominator


def _as_pair(f, fhat, min_len=1):
    f = np.asarray(f, dtype=np.float64).ravel()
    fhat = np.asarray(fhat, dtype=np.float64).ravel()
    if f.shape[0] != fhat.shape[0]:
        raise LengthMismatch(
            f"actuals have length {f.shape[0]}, predictions {fhat.shape[0]}"
        )
    if f.shape[0] < min_len:
        raise EmptyInput(f"need at least {min_len} samples, got {f.shape[0]}")
    return f, fhat


def mae(f, fhat):
    """Mean absolute error."""
    f, fhat = _as_pair(f, fhat)
    return float(np.mean(np.abs(f - fhat)))


def mse(f, fhat):
    """Mean squared error."""
    f, fhat = _as_pair(f, fhat)
    d = f - fhat
    return float(np.mean(d * d))


def rmse(f, fhat):
    """Root mean squared error."""
    return math.sqrt(mse(f, fhat))


def r2(f, fhat):
    """Coefficient of determination.

    Requires at least two samples and a non-constant actual vector; a
    constant target makes the ratio undefined and raises ConstantTarget.
    """
    f, fhat = _as_pair(f, fhat, min_len=2)
    resid = f - fhat
    centered = f - f.mean()
    ss_tot = float(centered @ centered)
    if ss_tot == 0.0:
        raise ConstantTarget("actual values are constant, r2 is undefined")
    ss_res = float(resid @ resid)
    return 1.0 - ss_res / ss_tot


def rrmse_pooled(f, fhat):
    """Relative RMSE with a pooled denominator.

    The mean squared residual is scaled by the sum of squared predictions,
    so a single aggregate normalizer covers the whole sample:

        sqrt( (1/n) * sum (f_i - fhat_i)^2 / sum fhat_i^2 )

    Raises ZeroDenominator when every prediction is exactly zero.
    """
    f, fhat = _as_pair(f, fhat)
    denom = float(fhat @ fhat)
    if denom == 0.0:
        raise ZeroDenominator("all predictions are zero")
    d = f - fhat
    return math.sqrt(float(np.mean(d * d)) / denom)


def zero_division_constant(y):
    """Mean absolute deviation of y around its mean.

    Used as the additive shift that keeps per-sample relative errors
    defined when an actual value is zero (or near it). Data-dependent by
    design: the shift scales with the spread of the targets.
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.shape[0] < 1:
        raise EmptyInput("need at least one sample")
    return float(np.mean(np.abs(y - y.mean())))


def rrmse_per_sample(y, y_pred, constant):
    """Relative RMSE with per-sample shifted denominators.

    Each residual is scaled by its own actual value plus ``constant``:

        sqrt( (1/n) * sum ((y_i - y_pred_i) / (y_i + constant))^2 )

    This is the error measure the voting weights are built from.
    Raises ZeroDenominator (with the sample index) when some
    y_i + constant is exactly zero.
    """
    y, y_pred = _as_pair(y, y_pred)
    if constant < 0.0:
        raise ZeroDenominator("constant must be non-negative")
    denom = y + constant
    zero = np.flatnonzero(denom == 0.0)
    if zero.size:
        i = int(zero[0])
        raise ZeroDenominator(f"y[{i}] + constant is zero", index=i)
    rel = (y - y_pred) / denom
    return math.sqrt(float(np.mean(rel * rel)))


@dataclass(frozen=True)
class MetricReport:
    """The four headline metrics for one (dataset, method) evaluation."""

    mae: float
    mse: float
    rmse: float
    r2: float
    n: int

    @classmethod
    def from_predictions(cls, f, fhat):
        f, fhat = _as_pair(f, fhat, min_len=2)
        return cls(
            mae=mae(f, fhat),
            mse=mse(f, fhat),
            rmse=rmse(f, fhat),
            r2=r2(f, fhat),
            n=int(f.shape[0]),
        )

    def as_dict(self):
        return {"mae": self.mae, "mse": self.mse, "rmse": self.rmse, "r2": self.r2}
