"""Exploratory tables: correlation matrix and month-by-hour means."""

from __future__ import annotations

import logging

import numpy as np
import pandas as pd

from .ingest import SUMMARY_VARIABLES, TimeSeries
from .preprocess import filter_daytime

logger = logging.getLogger(__name__)

CORRELATION_VARIABLES = ("surface_albedo", "cloud_type") + SUMMARY_VARIABLES


def correlation_matrix(ts: TimeSeries, variables=CORRELATION_VARIABLES, daytime: bool = True):
    """Pearson correlations between ``variables``.

    Returns ``(matrix, undefined)`` where ``undefined`` lists variables with
    zero variance; their rows and columns are NaN rather than zero.
    """
    if daytime:
        ts = filter_daytime(ts)
    if len(ts) < 2:
        raise ValueError("correlation needs at least two records")
    data = ts.frame[list(variables)].astype(np.float64)
    undefined = [v for v in variables if not data[v].std(ddof=0) > 0]
    if undefined:
        logger.warning("constant variable(s) %s: correlations undefined", undefined)
    corr = data.corr(method="pearson")
    corr = (corr + corr.T) / 2.0
    arr = corr.to_numpy().copy()
    np.fill_diagonal(arr, 1.0)
    corr = pd.DataFrame(np.clip(arr, -1.0, 1.0), index=corr.index, columns=corr.columns)
    for v in undefined:
        corr.loc[v, :] = np.nan
        corr.loc[:, v] = np.nan
    return corr, undefined


def correlation_long(corr: pd.DataFrame) -> pd.DataFrame:
    """Long format ``var_a, var_b, coef``."""
    long = corr.stack(future_stack=True).reset_index()
    long.columns = ["var_a", "var_b", "coef"]
    return long


def month_hour_pivot(ts: TimeSeries, variable: str = "ghi") -> pd.DataFrame:
    """12x24 table of means; cells with no records are NaN."""
    if variable not in ts.frame:
        raise KeyError(variable)
    frame = ts.frame
    means = frame.groupby([frame["month"], frame["hour"]])[variable].mean()
    full = pd.MultiIndex.from_product([range(1, 13), range(24)], names=["month", "hour"])
    return means.reindex(full).unstack("hour")


def pivot_long(pivot: pd.DataFrame) -> pd.DataFrame:
    long = pivot.stack(future_stack=True).rename("mean").reset_index()
    return long[["month", "hour", "mean"]]


def strongest_weather_correlate(corr: pd.DataFrame, target: str = "ghi") -> str:
    """Non-irradiance variable with the largest |r| against ``target``."""
    exclude = {"clearsky_ghi", "clearsky_dni", "clearsky_dhi", "ghi", "dni", "dhi", "cloud_type",
               "surface_albedo"}
    col = corr[target].drop(labels=[v for v in corr.index if v in exclude]).abs()
    return str(col.idxmax())
