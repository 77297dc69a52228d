"""Forecast error metrics and the nRMSE quality bands."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd


class MetricError(ValueError):
    """Inputs for which a metric is undefined."""


def _pair(y, y_hat):
    y = np.asarray(y, dtype=np.float64).ravel()
    y_hat = np.asarray(y_hat, dtype=np.float64).ravel()
    if y.shape != y_hat.shape:
        raise MetricError(f"length mismatch: {y.size} actual vs {y_hat.size} forecast")
    if y.size == 0:
        raise MetricError("empty series")
    if not (np.isfinite(y).all() and np.isfinite(y_hat).all()):
        raise MetricError("non-finite values")
    return y, y_hat


def rmse(y, y_hat) -> float:
    y, y_hat = _pair(y, y_hat)
    return float(np.sqrt(np.mean((y - y_hat) ** 2)))


def mae(y, y_hat) -> float:
    y, y_hat = _pair(y, y_hat)
    return float(np.mean(np.abs(y - y_hat)))


def nrmse(y, y_hat) -> float:
    """RMSE divided by the mean of the actual series."""
    y, y_hat = _pair(y, y_hat)
    mean = y.mean()
    if mean == 0:
        raise MetricError("nRMSE undefined: actual series has zero mean")
    return rmse(y, y_hat) / mean


def mase(y, y_hat) -> float:
    """Forecast MAE over the MAE of the one-step naive forecast.

    ``y`` must be in time order. The numerator averages over all ``n``
    points, the naive denominator over the ``n - 1`` consecutive
    differences.
    """
    y, y_hat = _pair(y, y_hat)
    if y.size < 2:
        raise MetricError("MASE needs at least two points")
    naive = np.mean(np.abs(np.diff(y)))
    if naive == 0:
        raise MetricError("MASE undefined: actual series is constant")
    return float(np.mean(np.abs(y - y_hat)) / naive)


BANDS = ((0.10, "Excellent"), (0.20, "Good"), (0.30, "Fair"))


def classify_nrmse(value: float) -> str:
    """Rate an nRMSE; each band includes its lower edge."""
    if value < 0 or np.isnan(value):
        raise MetricError(f"nRMSE must be non-negative, got {value}")
    for upper, label in BANDS:
        if value < upper:
            return label
    return "Poor"


REPORT_COLUMNS = ["target", "rmse", "mae", "nrmse", "nrmse_rating", "mase"]


@dataclass
class MetricsReport:
    rows: list = field(default_factory=list)  # one dict per target

    def add(self, target: str, y, y_hat) -> dict:
        v = nrmse(y, y_hat)
        row = {
            "target": target,
            "rmse": rmse(y, y_hat),
            "mae": mae(y, y_hat),
            "nrmse": v,
            "nrmse_rating": classify_nrmse(v),
            "mase": mase(y, y_hat),
        }
        self.rows.append(row)
        return row

    def __getitem__(self, target: str) -> dict:
        for row in self.rows:
            if row["target"] == target:
                return row
        raise KeyError(target)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=REPORT_COLUMNS)

    def to_csv(self, path) -> None:
        self.to_frame().to_csv(path, index=False, float_format="%.6f")

    @classmethod
    def read_csv(cls, path) -> "MetricsReport":
        frame = pd.read_csv(path)
        return cls(frame.to_dict(orient="records"))
