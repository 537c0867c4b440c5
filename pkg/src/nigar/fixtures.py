"""Synthetic price fixtures in the Yahoo daily-export layout.

The generator simulates the process at given parameters and adds a
constant ``offset`` so that every close is positive.  Shifting a path by
``c`` keeps ``rho`` and the innovation shape but moves the innovation
location to ``mu + c*(1 - rho)``; the sidecar metadata records both.
"""

import argparse
import csv
import datetime as _dt
import json
import math
from pathlib import Path

import numpy as np

from .distributions import NigParams, RngStream
from .io import OHLCV_COLUMNS, format_float
from .model import NigArModel, simulate_path

__all__ = ["REAL_DATA_MODEL", "business_days", "price_fixture", "write_price_fixture", "main"]

REAL_DATA_MODEL = NigArModel(0.9941, NigParams.from_gamma(0.0201, 0.0, 0.226, 9.365))
REAL_DATA_ROWS = 1594
REAL_DATA_START = _dt.date(2014, 12, 31)
_MIN_CLOSE = 50.0


def business_days(start, count):
    """``count`` consecutive weekdays starting at ``start`` (inclusive if a weekday)."""
    days = []
    day = start
    while len(days) < count:
        if day.weekday() < 5:
            days.append(day)
        day += _dt.timedelta(days=1)
    return days


def price_fixture(model=REAL_DATA_MODEL, n=REAL_DATA_ROWS, seed=0, min_close=_MIN_CLOSE):
    """Simulate closes and build OHLCV rows; returns ``(rows, metadata)``."""
    rng = RngStream(seed, 0)
    path = simulate_path(model, n, rng).values
    offset = float(min_close - path.min()) if path.min() < min_close else 0.0
    close = path + offset
    # cosmetic columns; only Close carries the model
    aux = rng.substream(1).generator
    spread = np.abs(aux.normal(0.0, 0.005, size=(n, 3))) * close[:, None]
    open_ = np.concatenate([[close[0]], close[:-1]])
    high = np.maximum(open_, close) + spread[:, 0]
    low = np.maximum(np.minimum(open_, close) - spread[:, 1], 0.5 * np.minimum(open_, close))
    volume = aux.integers(500_000, 5_000_000, size=n)
    dates = business_days(REAL_DATA_START, n)
    rows = [
        (d.isoformat(), o, h, lo, c, c, int(v))
        for d, o, h, lo, c, v in zip(dates, open_, high, low, close, volume)
    ]
    innov = model.innov
    meta = {
        "generator": "nigar.fixtures.price_fixture",
        "seed": seed,
        "rows": n,
        "model": model.as_dict(),
        "offset": offset,
        "effective_mu": innov.mu + offset * (1.0 - model.rho),
    }
    return rows, meta


def write_price_fixture(path, model=REAL_DATA_MODEL, n=REAL_DATA_ROWS, seed=0):
    """Write the CSV and a ``.meta.json`` sidecar next to it; returns the metadata."""
    rows, meta = price_fixture(model, n, seed)
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(OHLCV_COLUMNS)
        for date, *prices, volume in rows:
            writer.writerow([date, *(format_float(p) for p in prices), volume])
    sidecar = path.with_name(path.name + ".meta.json")
    sidecar.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return meta


def main(argv=None):
    parser = argparse.ArgumentParser(prog="nigar-fixture", description="Write a synthetic OHLCV price fixture.")
    parser.add_argument("output")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--n", type=int, default=REAL_DATA_ROWS)
    args = parser.parse_args(argv)
    if args.n < 1 or not math.isfinite(args.n):
        parser.error("--n must be positive")
    meta = write_price_fixture(args.output, n=args.n, seed=args.seed)
    print(json.dumps(meta, sort_keys=True))
    return 0


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
