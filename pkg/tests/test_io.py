import csv
import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nigar.errors import (
    EmptyAfterCleaningError,
    MissingColumnError,
    MissingFileError,
    UnparseableDateError,
)
from nigar.io import OHLCV_COLUMNS, format_float, ingest_csv, ingest_csv_report, write_series_csv

HEADER = ",".join(OHLCV_COLUMNS)


def write(tmp_path, text, name="prices.csv"):
    path = tmp_path / name
    path.write_bytes(text.encode("utf-8"))
    return path


def row(date, close, adj=None):
    adj = close if adj is None else adj
    return f"{date},1,2,0.5,{close},{adj},100"


def test_bundled_sample(data_dir):
    series = ingest_csv(data_dir / "sample_prices.csv")
    with open(data_dir / "sample_prices.csv", newline="") as handle:
        expected = [float(r["Close"]) for r in csv.DictReader(handle)]
    assert len(series) == 10
    assert series.values.tolist() == expected
    assert series.labels[0] == "2014-12-31"


def test_blank_cell_dropped(tmp_path, caplog):
    lines = [HEADER] + [row(f"2020-01-{d:02d}", 10 + d) for d in range(1, 11)]
    lines[4] = "2020-01-04,1,2,0.5,,3,100"
    with caplog.at_level(logging.WARNING):
        report = ingest_csv_report(write(tmp_path, "\n".join(lines) + "\n"))
    assert len(report.series) == 9 and report.dropped == 1
    assert "dropped 1" in caplog.text


def test_non_numeric_dropped(tmp_path):
    lines = [HEADER, row("2020-01-01", "abc"), row("2020-01-02", "nan"), row("2020-01-03", 5)]
    report = ingest_csv_report(write(tmp_path, "\n".join(lines)))
    assert report.series.values.tolist() == [5.0] and report.dropped == 2


def test_missing_column_names_available(tmp_path):
    path = write(tmp_path, HEADER + "\n" + row("2020-01-01", 1) + "\n")
    with pytest.raises(MissingColumnError) as info:
        ingest_csv(path, column="Klose")
    msg = str(info.value)
    assert "Klose" in msg and "Adj Close" in msg and "Volume" in msg
    assert isinstance(info.value, KeyError)


def test_missing_file(tmp_path):
    with pytest.raises(MissingFileError):
        ingest_csv(tmp_path / "none.csv")
    with pytest.raises(FileNotFoundError):
        ingest_csv(tmp_path / "none.csv")


def test_empty_after_cleaning(tmp_path):
    path = write(tmp_path, HEADER + "\n" + row("2020-01-01", "") + "\n")
    with pytest.raises(EmptyAfterCleaningError):
        ingest_csv(path)
    with pytest.raises(EmptyAfterCleaningError):
        ingest_csv(write(tmp_path, "", name="empty.csv"))


def test_unparseable_dates_aggregated(tmp_path):
    lines = [HEADER, row("2020-01-01", 1), row("01/02/2020", 2), row("2020-01-03", 3), row("soon", 4)]
    with pytest.raises(UnparseableDateError) as info:
        ingest_csv(write(tmp_path, "\n".join(lines)))
    assert [line for line, _ in info.value.rows] == [3, 5]
    assert "2 unparseable" in str(info.value)


def test_sorted_and_duplicates_last_wins(tmp_path, caplog):
    lines = [HEADER, row("2020-01-03", 3), row("2020-01-01", 1), row("2020-01-02", 2), row("2020-01-01", 9)]
    with caplog.at_level(logging.WARNING):
        report = ingest_csv_report(write(tmp_path, "\n".join(lines)))
    assert report.series.labels == ("2020-01-01", "2020-01-02", "2020-01-03")
    assert report.series.values.tolist() == [9.0, 2.0, 3.0]
    assert report.duplicates == 1 and "duplicate" in caplog.text


def test_crlf_and_bom(tmp_path):
    text = "﻿" + HEADER + "\r\n" + row("2020-01-01", 1.5) + "\r\n" + row("2020-01-02", 2.5) + "\r\n"
    assert ingest_csv(write(tmp_path, text)).values.tolist() == [1.5, 2.5]


def test_adj_close_and_case(tmp_path):
    path = write(tmp_path, HEADER + "\n" + row("2020-01-01", 1, adj=7) + "\n")
    assert ingest_csv(path, "Adj Close").values.tolist() == [7.0]
    assert ingest_csv(path, "close").values.tolist() == [1.0]


def test_without_date_column_keeps_order(tmp_path):
    path = write(tmp_path, "index,value\n0,3\n1,1\n\n2,2\n")
    s = ingest_csv(path, "value")
    assert s.values.tolist() == [3.0, 1.0, 2.0] and s.labels is None


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=1, max_size=50))
@settings(max_examples=50, deadline=None)
def test_round_trip_exact(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("rt") / "s.csv"
    write_series_csv(path, values)
    got = ingest_csv(path, "value").values
    assert np.array_equal(got, np.array(values, dtype=float))


def test_format_float_digits():
    x = 0.1 + 0.2
    assert float(format_float(x)) == x
    assert len(format_float(x).replace(".", "").lstrip("0")) <= 17


def test_labelled_writer(tmp_path):
    path = tmp_path / "l.csv"
    write_series_csv(path, [1.0, 2.0], labels=["2020-01-01", "2020-01-02"])
    s = ingest_csv(path, "value")
    assert s.labels == ("2020-01-01", "2020-01-02")
