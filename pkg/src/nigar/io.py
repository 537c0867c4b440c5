"""CSV ingestion in the Yahoo daily-export layout and full-precision writers."""

import csv
import datetime as _dt
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Tuple

from .errors import (
    EmptyAfterCleaningError,
    MissingColumnError,
    MissingFileError,
    UnparseableDateError,
)
from .model import TimeSeries

__all__ = [
    "OHLCV_COLUMNS",
    "IngestReport",
    "ingest_csv",
    "ingest_csv_report",
    "write_series_csv",
    "format_float",
]

logger = logging.getLogger(__name__)

OHLCV_COLUMNS = ("Date", "Open", "High", "Low", "Close", "Adj Close", "Volume")
_DATE_COLUMN = "date"


def format_float(x):
    """Shortest text that round-trips a double (at most 17 significant digits)."""
    return repr(float(x))


@dataclass
class IngestReport:
    series: TimeSeries
    dropped: int = 0
    duplicates: int = 0
    column: str = "Close"
    warnings: List[str] = field(default_factory=list)


def _resolve_column(header, column):
    if column in header:
        return header.index(column)
    folded = [h.casefold() for h in header]
    if column.casefold() in folded:
        return folded.index(column.casefold())
    raise MissingColumnError(column, header)


def _parse_date(text):
    return _dt.date.fromisoformat(text.strip()).isoformat()


def _parse_value(text):
    try:
        value = float(text)
    except (TypeError, ValueError):
        return None
    return value if math.isfinite(value) else None


def ingest_csv_report(path, column="Close"):
    """Read one numeric column, returning the series plus cleaning counts.

    Rows whose selected cell is blank or non-numeric are dropped and
    counted.  When a ``Date`` column exists the rows are sorted by date and
    a repeated date keeps its last row; every unparseable date is collected
    and reported in one :class:`UnparseableDateError`.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8-sig") as handle:
        reader = csv.reader(handle)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise EmptyAfterCleaningError(f"{path} has no header row") from None
        col = _resolve_column(header, column)
        folded = [h.casefold() for h in header]
        date_col = folded.index(_DATE_COLUMN) if _DATE_COLUMN in folded else None

        rows: List[Tuple[object, float]] = []
        bad_dates = []
        dropped = 0
        for line_no, row in enumerate(reader, start=2):
            if not any(cell.strip() for cell in row):
                continue
            cell = row[col] if col < len(row) else ""
            value = _parse_value(cell)
            key = line_no
            if date_col is not None:
                text = row[date_col] if date_col < len(row) else ""
                try:
                    key = _parse_date(text)
                except ValueError:
                    bad_dates.append((line_no, text))
                    continue
            if value is None:
                dropped += 1
                continue
            rows.append((key, value))

    if bad_dates:
        raise UnparseableDateError(bad_dates)
    warnings = []
    if dropped:
        msg = f"dropped {dropped} row(s) with a missing or non-numeric {header[col]!r} value"
        logger.warning(msg)
        warnings.append(msg)

    duplicates = 0
    labels = None
    if date_col is not None:
        by_date = {}
        for key, value in rows:
            if key in by_date:
                duplicates += 1
            by_date[key] = value
        if duplicates:
            msg = f"{duplicates} duplicate date(s); kept the last row for each"
            logger.warning(msg)
            warnings.append(msg)
        labels = sorted(by_date)
        values = [by_date[d] for d in labels]
    else:
        values = [value for _, value in rows]

    if not values:
        raise EmptyAfterCleaningError(f"no usable {header[col]!r} values in {path}")
    series = TimeSeries(values, labels=tuple(labels) if labels is not None else None)
    return IngestReport(series, dropped, duplicates, header[col], warnings)


def ingest_csv(path, column="Close"):
    """Read the ``column`` values of a CSV file as a date-ordered :class:`TimeSeries`."""
    return ingest_csv_report(path, column).series


def write_series_csv(path_or_handle, values, labels=None):
    """Write ``index,value`` rows (or ``Date,value`` when labels are given)."""
    own = not hasattr(path_or_handle, "write")
    handle = open(path_or_handle, "w", newline="", encoding="utf-8") if own else path_or_handle
    try:
        writer = csv.writer(handle, lineterminator="\n")
        if labels is None:
            writer.writerow(["index", "value"])
            writer.writerows((i, format_float(v)) for i, v in enumerate(values))
        else:
            writer.writerow(["Date", "value"])
            writer.writerows((d, format_float(v)) for d, v in zip(labels, values))
    finally:
        if own:
            handle.close()
