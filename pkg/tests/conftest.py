import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from synthetic import make_frame, write_nsrdb  # noqa: E402

from solarcast.ingest import parse_csv  # noqa: E402


@pytest.fixture(scope="session")
def synthetic_dir(tmp_path_factory):
    """Three synthetic years (2020-2022) as per-year NSRDB-style files."""
    d = tmp_path_factory.mktemp("synthetic")
    frame = make_frame()
    for year, part in frame.groupby("Year"):
        write_nsrdb(part, d / f"ibadan_{year}.csv")
    return d


@pytest.fixture(scope="session")
def synthetic_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("one") / "one_year.csv"
    write_nsrdb(make_frame(years=(2021,), seed=3), path)
    return path


@pytest.fixture(scope="session")
def synthetic_ts(synthetic_csv):
    return parse_csv(synthetic_csv)


def dataset_path():
    """Location of the real NSRDB Ibadan files, or None."""
    candidates = [os.environ.get("SOLARCAST_DATA"), Path(__file__).parents[1] / "data"]
    for c in candidates:
        if c and Path(c).exists() and (Path(c).is_file() or any(Path(c).glob("*.csv"))):
            return Path(c)
    return None


def pytest_terminal_summary(terminalreporter):
    from criteria_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
