import numpy as np
import pandas as pd
import pytest

from synthetic import make_frame, write_nsrdb

from solarcast.ingest import (
    COLUMNS,
    SUMMARY_VARIABLES,
    EmptyFileError,
    RowError,
    SchemaError,
    TimeSeries,
    load_dataset,
    parse_csv,
    summary_stats,
    to_csv,
    validate,
)


def test_two_line_metadata_header(synthetic_ts):
    assert len(synthetic_ts) == 8760
    assert synthetic_ts.timezone_offset_hours == 1
    assert synthetic_ts.metadata["Source"] == "NSRDB"
    assert synthetic_ts.index.is_monotonic_increasing
    assert str(synthetic_ts.frame["cloud_type"].dtype) == "Int64"


def test_plain_header_sniffed(tmp_path):
    path = tmp_path / "plain.csv"
    write_nsrdb(make_frame(years=(2021,), missing_cloud=0)[:48], path, two_line=False)
    ts = parse_csv(path)
    assert len(ts) == 48
    assert ts.timezone_offset_hours is None
    assert ts.frame["cloud_type"].notna().all()


def test_case_insensitive_headers(tmp_path):
    frame = make_frame(years=(2021,), missing_cloud=0)[:24]
    frame.columns = [c.upper() for c in frame.columns]
    path = tmp_path / "upper.csv"
    write_nsrdb(frame, path, two_line=False)
    assert len(parse_csv(path)) == 24


def test_round_trip(tmp_path, synthetic_ts):
    out = tmp_path / "rt.csv"
    to_csv(synthetic_ts, out)
    back = parse_csv(out, "plain")
    pd.testing.assert_frame_equal(back.frame, synthetic_ts.frame)
    # records -> from_records is the other round trip
    again = TimeSeries.from_records(list(synthetic_ts.records())[:100])
    pd.testing.assert_frame_equal(again.frame, synthetic_ts.frame.iloc[:100])


def test_missing_cloud_type_is_na_not_zero(synthetic_ts):
    missing = synthetic_ts.frame["cloud_type"].isna()
    assert 0 < missing.sum() < 0.05 * len(synthetic_ts)
    rec = next(r for r, m in zip(synthetic_ts.records(), missing) if m)
    assert rec.cloud_type is None


def test_row_permutation_gives_same_series(tmp_path):
    frame = make_frame(years=(2021,), seed=5)[:500]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_nsrdb(frame, a)
    write_nsrdb(frame.sample(frac=1, random_state=1), b)
    ta, tb = parse_csv(a), parse_csv(b)
    ta = TimeSeries(ta.frame, "x", ta.timezone_offset_hours)
    tb = TimeSeries(tb.frame, "x", tb.timezone_offset_hours)
    assert ta == tb


def test_schema_error_names_column(tmp_path):
    frame = make_frame(years=(2021,))[:24].drop(columns="Temperature")
    path = tmp_path / "bad.csv"
    write_nsrdb(frame, path)
    with pytest.raises(SchemaError, match="Temperature") as info:
        parse_csv(path)
    assert info.value.column == "Temperature"


def test_empty_file(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    with pytest.raises(EmptyFileError):
        parse_csv(path)
    header_only = tmp_path / "header.csv"
    header_only.write_text(",".join(COLUMNS.values()) + "\n")
    with pytest.raises(EmptyFileError):
        parse_csv(header_only)


def test_row_error_reports_line(tmp_path):
    frame = make_frame(years=(2021,), missing_cloud=0)[:10].astype(object)
    frame.loc[4, "GHI"] = "n/a"
    path = tmp_path / "row.csv"
    write_nsrdb(frame, path)
    with pytest.raises(RowError) as info:
        parse_csv(path)
    # 2 metadata lines + header line, then data row index 4 is line 8
    assert info.value.line == 8
    assert info.value.column == "GHI"


def test_validate_flags_out_of_range_and_duplicates(tmp_path, synthetic_ts):
    frame = synthetic_ts.frame.iloc[:50].copy()
    frame.iloc[3, frame.columns.get_loc("relative_humidity")] = 120.0
    dup = pd.concat([frame, frame.iloc[[7]]]).sort_index(kind="mergesort")
    report = validate(synthetic_ts.replace(dup))
    assert report.range_violations == {"relative_humidity": 1}
    assert report.duplicate_timestamps == 1
    assert not report.ok
    assert validate(synthetic_ts).ok


def test_load_dataset_directory_concatenates(synthetic_dir):
    ts = load_dataset(synthetic_dir)
    assert len(ts) == 3 * 8760 + 24
    assert ts.index.is_monotonic_increasing
    assert not ts.index.duplicated().any()


def _linear_quantile(values, q):
    # closest-rank linear interpolation, written out by hand
    s = sorted(values)
    pos = q * (len(s) - 1)
    lo = int(np.floor(pos))
    hi = min(lo + 1, len(s) - 1)
    return s[lo] + (s[hi] - s[lo]) * (pos - lo)


def test_summary_matches_brute_force(synthetic_ts):
    table = summary_stats(synthetic_ts)
    assert list(table.index) == list(SUMMARY_VARIABLES)
    for var in ("ghi", "temperature", "relative_humidity", "wind_speed"):
        v = synthetic_ts.frame[var].tolist()
        n = len(v)
        mean = sum(v) / n
        std = (sum((x - mean) ** 2 for x in v) / (n - 1)) ** 0.5
        row = table.loc[var]
        assert row["count"] == n
        assert row["mean"] == pytest.approx(mean, rel=1e-12)
        assert row["std"] == pytest.approx(std, rel=1e-10)
        assert row["min"] == min(v) and row["max"] == max(v)
        for label, q in (("25%", 0.25), ("50%", 0.5), ("75%", 0.75)):
            assert row[label] == pytest.approx(_linear_quantile(v, q), rel=1e-12, abs=1e-12)
