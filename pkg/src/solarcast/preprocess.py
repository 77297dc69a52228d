"""Timestamp alignment, daytime filtering, splits, and feature scalers."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .ingest import TimeSeries

logger = logging.getLogger(__name__)

DAY_START_HOUR = 7
DAY_END_HOUR = 18  # inclusive

WET_MONTHS = frozenset(range(5, 11))
DRY_MONTHS = frozenset({11, 12, 1, 2, 3, 4})


@dataclass(frozen=True)
class SplitSpec:
    validation_year: int = 2022
    train_fraction: float = 0.8
    shuffle_seed: int = 0
    wet_months: frozenset = WET_MONTHS
    dry_months: frozenset = DRY_MONTHS
    chronological: bool = False

    def __post_init__(self):
        object.__setattr__(self, "wet_months", frozenset(int(m) for m in self.wet_months))
        object.__setattr__(self, "dry_months", frozenset(int(m) for m in self.dry_months))
        if not 0 < self.train_fraction < 1:
            raise ValueError(f"train_fraction must be in (0, 1), got {self.train_fraction}")
        if self.wet_months & self.dry_months:
            raise ValueError(f"months in both seasons: {sorted(self.wet_months & self.dry_months)}")
        if self.wet_months | self.dry_months != set(range(1, 13)):
            missing = sorted(set(range(1, 13)) - (self.wet_months | self.dry_months))
            raise ValueError(f"months assigned to no season: {missing}")

    @classmethod
    def with_wet_months(cls, wet, **kw) -> "SplitSpec":
        wet = frozenset(wet)
        return cls(wet_months=wet, dry_months=frozenset(range(1, 13)) - wet, **kw)

    def months(self, season: str) -> frozenset:
        if season == "annual":
            return frozenset(range(1, 13))
        if season == "wet":
            return self.wet_months
        if season == "dry":
            return self.dry_months
        raise ValueError(f"unknown season {season!r}")


def parse_month_range(text: str) -> frozenset:
    """``"5-10"`` -> {5..10}; ``"11-4"`` wraps the year; ``"6,7"`` lists."""
    months = set()
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            a, b = (int(x) for x in part.split("-"))
            m = a
            while True:
                months.add(m)
                if m == b:
                    break
                m = m % 12 + 1
        elif part:
            months.add(int(part))
    bad = sorted(m for m in months if not 1 <= m <= 12)
    if bad:
        raise ValueError(f"invalid month(s) {bad}")
    return frozenset(months)


def _with_index(ts: TimeSeries, index: pd.DatetimeIndex) -> TimeSeries:
    frame = ts.frame.copy()
    frame.index = pd.DatetimeIndex(index, name="timestamp")
    frame["year"] = frame.index.year.astype(np.int64)
    frame["month"] = frame.index.month.astype(np.int64)
    frame["day"] = frame.index.day.astype(np.int64)
    frame["hour"] = frame.index.hour.astype(np.int64)
    frame["minute"] = frame.index.minute.astype(np.int64)
    return ts.replace(frame)


def shift_timestamps(ts: TimeSeries, minutes: int = 30) -> TimeSeries:
    """Advance every timestamp by ``minutes`` (06:30 -> 07:00 by default).

    The calendar fields are rewritten from the shifted index, so rollovers
    across midnight, month and year ends come out right. Measurement
    values are untouched.
    """
    off = int((ts.frame["minute"] != 30).sum())
    if off:
        logger.warning("%d record(s) are not stamped at half past the hour", off)
    return _with_index(ts, ts.index + pd.Timedelta(minutes=minutes))


def filter_daytime(ts: TimeSeries, start_hour: int = DAY_START_HOUR, end_hour: int = DAY_END_HOUR) -> TimeSeries:
    """Keep hours ``start_hour..end_hour`` inclusive (07:00-18:00)."""
    hours = ts.frame["hour"]
    return ts.replace(ts.frame[(hours >= start_hour) & (hours <= end_hour)])


def drop_missing_cloud(ts: TimeSeries) -> TimeSeries:
    return ts.replace(ts.frame[ts.frame["cloud_type"].notna()])


def select_months(ts: TimeSeries, months) -> TimeSeries:
    return ts.replace(ts.frame[ts.frame["month"].isin(sorted(months))])


@dataclass
class Splits:
    validation: TimeSeries
    train: TimeSeries
    test: TimeSeries

    def counts(self) -> dict:
        return {"train": len(self.train), "test": len(self.test), "validation": len(self.validation)}


def split_holdout_and_train_test(ts: TimeSeries, spec: SplitSpec) -> Splits:
    """Isolate ``spec.validation_year``, then split the rest into train/test.

    The default split is a seeded uniform shuffle; ``spec.chronological``
    takes the earliest ``train_fraction`` rows for training instead. Both
    partitions come back in chronological order.
    """
    if len(ts) == 0:
        raise ValueError("cannot split an empty series")
    frame = ts.frame
    holdout = frame["year"] == spec.validation_year
    if not holdout.any():
        logger.warning("validation year %d absent; validation set is empty", spec.validation_year)
    rest = frame[~holdout]
    n = len(rest)
    n_train = int(round(n * spec.train_fraction))
    if spec.chronological:
        order = np.arange(n)
    else:
        order = np.random.default_rng(spec.shuffle_seed).permutation(n)
    train_pos = np.sort(order[:n_train])
    test_pos = np.sort(order[n_train:])
    return Splits(
        validation=ts.replace(frame[holdout]),
        train=ts.replace(rest.iloc[train_pos]),
        test=ts.replace(rest.iloc[test_pos]),
    )


def season_partition(ts: TimeSeries, spec: SplitSpec) -> dict:
    """Split by calendar month into ``{'wet': ..., 'dry': ...}``."""
    return {"wet": select_months(ts, spec.wet_months), "dry": select_months(ts, spec.dry_months)}


class NotFittedError(RuntimeError):
    pass


class ConstantColumnError(ValueError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"column {column!r} is constant; cannot scale it")


def _as_2d(x):
    arr = np.asarray(x, dtype=np.float64)
    return arr.reshape(-1, 1) if arr.ndim == 1 else arr


def _column_names(x, n):
    if isinstance(x, pd.DataFrame):
        return [str(c) for c in x.columns]
    if isinstance(x, pd.Series) and x.name is not None:
        return [str(x.name)]
    return [str(i) for i in range(n)]


@dataclass
class StandardScaler:
    """z = (x - mean) / std per column, std with ddof=0."""

    mean_: np.ndarray | None = None
    scale_: np.ndarray | None = None
    columns: list = field(default_factory=list)

    def fit(self, x) -> "StandardScaler":
        arr = _as_2d(x)
        names = _column_names(x, arr.shape[1])
        std = arr.std(axis=0)
        for name, s in zip(names, std):
            if not s > 0:
                raise ConstantColumnError(name)
        self.mean_, self.scale_, self.columns = arr.mean(axis=0), std, names
        return self

    def _check(self):
        if self.mean_ is None:
            raise NotFittedError("StandardScaler used before fit()")

    def transform(self, x) -> np.ndarray:
        self._check()
        return (_as_2d(x) - self.mean_) / self.scale_

    def inverse_transform(self, z) -> np.ndarray:
        self._check()
        return _as_2d(z) * self.scale_ + self.mean_


@dataclass
class MinMaxScaler:
    """x' = (x - min) / (max - min) per column."""

    min_: np.ndarray | None = None
    max_: np.ndarray | None = None
    columns: list = field(default_factory=list)

    def fit(self, x) -> "MinMaxScaler":
        arr = _as_2d(x)
        names = _column_names(x, arr.shape[1])
        lo, hi = arr.min(axis=0), arr.max(axis=0)
        for name, a, b in zip(names, lo, hi):
            if not b > a:
                raise ConstantColumnError(name)
        self.min_, self.max_, self.columns = lo, hi, names
        return self

    def _check(self):
        if self.min_ is None:
            raise NotFittedError("MinMaxScaler used before fit()")

    def transform(self, x) -> np.ndarray:
        self._check()
        return (_as_2d(x) - self.min_) / (self.max_ - self.min_)

    def inverse_transform(self, z) -> np.ndarray:
        self._check()
        return _as_2d(z) * (self.max_ - self.min_) + self.min_
