"""Reading, validating and summarising hourly NSRDB-style weather files."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Iterator

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

# canonical column -> printed NSRDB header
COLUMNS = {
    "year": "Year",
    "month": "Month",
    "day": "Day",
    "hour": "Hour",
    "minute": "Minute",
    "solar_zenith_angle": "Solar Zenith Angle",
    "surface_albedo": "Surface Albedo",
    "precipitable_water": "Precipitable Water",
    "clearsky_dhi": "Clearsky DHI",
    "clearsky_dni": "Clearsky DNI",
    "clearsky_ghi": "Clearsky GHI",
    "cloud_type": "Cloud Type",
    "dew_point": "Dew Point",
    "relative_humidity": "Relative Humidity",
    "pressure": "Pressure",
    "dhi": "DHI",
    "dni": "DNI",
    "fill_flag": "Fill Flag",
    "ghi": "GHI",
    "temperature": "Temperature",
    "wind_direction": "Wind Direction",
    "wind_speed": "Wind Speed",
}
OPTIONAL_COLUMNS = {"minute"}
INTEGER_COLUMNS = ("year", "month", "day", "hour", "minute", "fill_flag")
IRRADIANCE_COLUMNS = ("clearsky_dhi", "clearsky_dni", "clearsky_ghi", "dhi", "dni", "ghi")

# Row order of the published summary table.
SUMMARY_VARIABLES = (
    "precipitable_water",
    "dew_point",
    "relative_humidity",
    "pressure",
    "temperature",
    "wind_direction",
    "wind_speed",
    "clearsky_dhi",
    "clearsky_dni",
    "clearsky_ghi",
    "dhi",
    "dni",
    "ghi",
)

# (low, high) inclusive bounds checked by validate(); None means unbounded.
RANGES = {
    "month": (1, 12),
    "day": (1, 31),
    "hour": (0, 23),
    "minute": (0, 59),
    "solar_zenith_angle": (0.0, 180.0),
    "surface_albedo": (0.0, 1.0),
    "relative_humidity": (0.0, 100.0),
    "wind_direction": (0.0, 360.0),
    "wind_speed": (0.0, None),
    "cloud_type": (0, None),
    **{c: (0.0, None) for c in IRRADIANCE_COLUMNS},
}


class IngestError(Exception):
    """Base class for data-file problems."""


class SchemaError(IngestError):
    def __init__(self, column: str, path=None):
        self.column = column
        where = f" in {path}" if path else ""
        super().__init__(f"missing mandatory column {column!r}{where}")


class RowError(IngestError):
    def __init__(self, line: int, column: str, value: str):
        self.line = line
        self.column = column
        super().__init__(f"line {line}: cannot parse {column}={value!r} as a number")


class EmptyFileError(IngestError):
    pass


@dataclass(frozen=True)
class HourlyRecord:
    year: int
    month: int
    day: int
    hour: int
    minute: int
    solar_zenith_angle: float
    surface_albedo: float
    precipitable_water: float
    clearsky_dhi: float
    clearsky_dni: float
    clearsky_ghi: float
    cloud_type: int | None
    dew_point: float
    relative_humidity: float
    pressure: float
    dhi: float
    dni: float
    fill_flag: int
    ghi: float
    temperature: float
    wind_direction: float
    wind_speed: float

    @property
    def timestamp(self) -> pd.Timestamp:
        return pd.Timestamp(self.year, self.month, self.day, self.hour, self.minute)


@dataclass(frozen=True)
class TimeSeries:
    """Chronologically ordered hourly records backed by a DataFrame.

    ``frame`` has one column per :data:`COLUMNS` key and a naive
    ``DatetimeIndex`` in the file's local clock. ``cloud_type`` uses the
    nullable ``Int64`` dtype so a missing code is ``<NA>``, never a number.
    Treat the frame as read-only; every transform returns a new series.
    """

    frame: pd.DataFrame
    source_id: str = ""
    timezone_offset_hours: int | None = None
    metadata: dict = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return len(self.frame)

    def __eq__(self, other):
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return (
            self.source_id == other.source_id
            and self.timezone_offset_hours == other.timezone_offset_hours
            and self.frame.equals(other.frame)
            and self.frame.index.equals(other.frame.index)
        )

    __hash__ = None

    @property
    def index(self) -> pd.DatetimeIndex:
        return self.frame.index

    def replace(self, frame: pd.DataFrame) -> "TimeSeries":
        return TimeSeries(frame, self.source_id, self.timezone_offset_hours, self.metadata)

    def records(self) -> Iterator[HourlyRecord]:
        names = [f.name for f in fields(HourlyRecord)]
        for row in self.frame[names].itertuples(index=False):
            values = dict(zip(names, row))
            ct = values["cloud_type"]
            values["cloud_type"] = None if pd.isna(ct) else int(ct)
            for c in INTEGER_COLUMNS:
                values[c] = int(values[c])
            yield HourlyRecord(**values)

    @classmethod
    def from_records(cls, records, source_id: str = "", timezone_offset_hours=None) -> "TimeSeries":
        names = [f.name for f in fields(HourlyRecord)]
        rows = [[getattr(r, n) for n in names] for r in records]
        frame = pd.DataFrame(rows, columns=names)
        return cls(_finish_frame(frame), source_id, timezone_offset_hours)


def _finish_frame(frame: pd.DataFrame) -> pd.DataFrame:
    """Coerce dtypes, build the timestamp index and sort chronologically."""
    frame = frame.copy()
    if "minute" not in frame:
        frame["minute"] = 0
    for c in INTEGER_COLUMNS:
        frame[c] = frame[c].astype(np.int64)
    frame["cloud_type"] = frame["cloud_type"].astype("Int64")
    for c in COLUMNS:
        if c not in INTEGER_COLUMNS and c != "cloud_type":
            frame[c] = frame[c].astype(np.float64)
    frame = frame[list(COLUMNS)]
    index = pd.to_datetime(frame[["year", "month", "day", "hour", "minute"]])
    frame.index = pd.DatetimeIndex(index, name="timestamp")
    return frame.sort_index(kind="mergesort")


def _norm(name: str) -> str:
    return " ".join(name.strip().lower().replace("_", " ").split())


_LOOKUP = {_norm(v): k for k, v in COLUMNS.items()}
_LOOKUP.update({_norm(k): k for k in COLUMNS})


def _looks_like_header(line: str) -> bool:
    cells = {_norm(c) for c in next(csv.reader([line]), [])}
    return {"year", "month", "day", "hour"} <= cells


def sniff_header_mode(first_line: str) -> str:
    return "plain" if _looks_like_header(first_line) else "nsrdb"


def parse_csv(path, header_mode: str = "auto") -> TimeSeries:
    """Parse an hourly weather CSV into a :class:`TimeSeries`.

    Parameters
    ----------
    path : path-like
        CSV file with the NSRDB columns (matched case-insensitively).
    header_mode : {'auto', 'plain', 'nsrdb'}
        ``plain`` means the first line is the header. ``nsrdb`` means the
        header is preceded by the metadata key/value lines NSRDB exports
        carry. ``auto`` decides by sniffing the first line.

    Raises
    ------
    EmptyFileError, SchemaError, RowError
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8-sig")
    lines = text.splitlines()
    if not any(line.strip() for line in lines):
        raise EmptyFileError(f"{path} is empty")

    if header_mode == "auto":
        header_mode = sniff_header_mode(lines[0])
    metadata = {}
    if header_mode == "plain":
        skip = 0
    elif header_mode == "nsrdb":
        skip = next((i for i, line in enumerate(lines[:5]) if _looks_like_header(line)), None)
        if skip is None:
            raise SchemaError("Year", path)
        if skip >= 2:
            keys, vals = list(csv.reader(lines[skip - 2 : skip]))
            metadata = {k.strip(): v.strip() for k, v in zip(keys, vals) if k.strip()}
    else:
        raise ValueError(f"unknown header_mode {header_mode!r}")

    raw = pd.read_csv(io.StringIO("\n".join(lines[skip:])), dtype=str, keep_default_na=False)
    if raw.empty:
        raise EmptyFileError(f"{path} has a header but no data rows")

    rename = {}
    for col in raw.columns:
        key = _LOOKUP.get(_norm(col))
        if key is None:
            if not col.startswith("Unnamed"):
                logger.info("ignoring unknown column %r in %s", col, path.name)
            continue
        rename[col] = key
    raw = raw[list(rename)].rename(columns=rename)
    for key, printed in COLUMNS.items():
        if key not in raw and key not in OPTIONAL_COLUMNS:
            raise SchemaError(printed, path)

    data = {}
    first_data_line = skip + 2  # 1-based line number of the first data row
    for col in raw.columns:
        cells = raw[col].str.strip()
        values = pd.to_numeric(cells.where(cells != ""), errors="coerce")
        bad = values.isna() & (cells != "")
        if col != "cloud_type":
            bad |= cells == ""
        if bad.any():
            pos = int(np.flatnonzero(bad.to_numpy())[0])
            raise RowError(first_data_line + pos, COLUMNS[col], raw[col].iloc[pos])
        data[col] = values
    frame = pd.DataFrame(data)

    tz = None
    for key in ("Time Zone", "Local Time Zone"):
        if key in metadata:
            try:
                tz = int(float(metadata[key]))
                break
            except ValueError:
                pass
    return TimeSeries(_finish_frame(frame), source_id=path.name, timezone_offset_hours=tz, metadata=metadata)


def to_csv(ts: TimeSeries, path) -> None:
    """Write a series back out with plain NSRDB headers."""
    out = ts.frame.rename(columns=COLUMNS)
    out.to_csv(path, index=False, float_format="%.17g")


def read_many(paths, header_mode: str = "auto") -> TimeSeries:
    """Parse several yearly files and concatenate them in time order."""
    parts = [parse_csv(p, header_mode) for p in paths]
    if not parts:
        raise EmptyFileError("no input files")
    frame = pd.concat([p.frame for p in parts]).sort_index(kind="mergesort")
    tzs = {p.timezone_offset_hours for p in parts} - {None}
    tz = tzs.pop() if len(tzs) == 1 else None
    return TimeSeries(frame, source_id=",".join(p.source_id for p in parts), timezone_offset_hours=tz,
                      metadata=parts[0].metadata)


def load_dataset(path, header_mode: str = "auto") -> TimeSeries:
    """Load a single CSV or every ``*.csv`` under a directory."""
    path = Path(path)
    if path.is_dir():
        files = sorted(path.glob("*.csv"))
        if not files:
            raise EmptyFileError(f"no CSV files under {path}")
        return read_many(files, header_mode)
    return parse_csv(path, header_mode)


SUMMARY_COLUMNS = ["count", "mean", "std", "min", "25%", "50%", "75%", "max"]


def summary_stats(ts: TimeSeries, variables=SUMMARY_VARIABLES) -> pd.DataFrame:
    """Count, mean, sample std and linear-interpolated quartiles per variable.

    Computed over every record (no night filtering). Returns a frame indexed
    by variable name with the columns of :data:`SUMMARY_COLUMNS`.
    """
    if len(ts) == 0:
        raise ValueError("summary_stats needs a non-empty series")
    rows = {}
    for var in variables:
        v = ts.frame[var].dropna().to_numpy(dtype=np.float64)
        q25, q50, q75 = np.quantile(v, [0.25, 0.5, 0.75], method="linear")
        rows[var] = [len(v), v.mean(), v.std(ddof=1) if len(v) > 1 else 0.0,
                     v.min(), q25, q50, q75, v.max()]
    table = pd.DataFrame.from_dict(rows, orient="index", columns=SUMMARY_COLUMNS)
    table.index.name = "variable"
    table["count"] = table["count"].astype(np.int64)
    return table


def write_summary(table: pd.DataFrame, path) -> None:
    table.to_csv(path, float_format="%.6f")


@dataclass
class ValidationReport:
    range_violations: dict = field(default_factory=dict)  # column -> count
    missing_cloud_type: int = 0
    missing_values: int = 0  # rows with any absent cell
    duplicate_timestamps: int = 0
    non_monotone_timestamps: int = 0
    off_half_hour: int = 0  # rows whose minute is not 30

    @property
    def ok(self) -> bool:
        return not (self.range_violations or self.missing_values
                    or self.duplicate_timestamps or self.non_monotone_timestamps)

    def lines(self) -> list[str]:
        out = [f"{col}: {n} out-of-range value(s)" for col, n in sorted(self.range_violations.items())]
        out.append(f"rows with missing values: {self.missing_values}")
        out.append(f"rows with missing cloud type: {self.missing_cloud_type}")
        out.append(f"duplicate timestamps: {self.duplicate_timestamps}")
        out.append(f"non-monotone timestamps: {self.non_monotone_timestamps}")
        return out


def validate(ts: TimeSeries) -> ValidationReport:
    """Report range, missingness and timestamp-order problems. Never raises."""
    frame = ts.frame
    report = ValidationReport()
    for col, (lo, hi) in RANGES.items():
        v = frame[col]
        bad = pd.Series(False, index=v.index)
        if lo is not None:
            bad |= (v < lo).fillna(False)
        if hi is not None:
            bad |= (v > hi).fillna(False)
        n = int(bad.sum())
        if n:
            report.range_violations[col] = n
    report.missing_cloud_type = int(frame["cloud_type"].isna().sum())
    # cloud type is allowed to be absent and is counted separately
    report.missing_values = int(frame.drop(columns="cloud_type").isna().any(axis=1).sum())
    idx = frame.index
    report.duplicate_timestamps = int(idx.duplicated().sum())
    if len(idx) > 1:
        report.non_monotone_timestamps = int((np.diff(idx.asi8) < 0).sum())
    report.off_half_hour = int((frame["minute"] != 30).sum())
    return report
