"""CSV files written and read by the command line.

Columns are fixed and always in the order below; floats are written with
Python's shortest round-trip ``repr`` so a file read back reproduces the
run exactly and two identical runs give identical bytes.
"""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .engine import INT_FIELDS, RECORD_FIELDS, DailyRecord, Ensemble

TRADE_FIELDS = ("step", "buy_id", "sell_id", "price", "quantity", "buyer", "seller")


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_rows(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_run_csv(path, records: list[DailyRecord]) -> None:
    write_rows(path, RECORD_FIELDS, ([getattr(r, f) for f in RECORD_FIELDS] for r in records))


def write_trades_csv(path, trades) -> None:
    write_rows(path, TRADE_FIELDS, trades)


def write_ensemble_csv(path, ens: Ensemble) -> None:
    fields = [f for f in RECORD_FIELDS if f != "step"]
    header = ["step"] + [f"{f}_{stat}" for f in fields for stat in ("mean", "std")]
    steps = ens.mean["step"].astype(int)
    rows = ([int(steps[k])] + [float(col[k]) for f in fields for col in (ens.mean[f], ens.std[f])]
            for k in range(steps.shape[0]))
    write_rows(path, header, rows)


def read_run_csv(path) -> dict[str, np.ndarray]:
    """Columns of a ``run_<seed>.csv`` file keyed by field name."""
    with open(path, newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty file")
        missing = [f for f in ("step", "close") if f not in header]
        if missing:
            raise ValueError(f"{path}: missing columns {missing}")
        rows = list(reader)
    cols = {}
    for j, name in enumerate(header):
        dtype = np.int64 if name in INT_FIELDS else float
        cols[name] = np.array([row[j] for row in rows], dtype=dtype)
    return cols


def read_price_csv(path) -> np.ndarray:
    """Daily prices from a CSV with a ``price`` or ``close`` column (first match wins)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty file")
        names = {n.strip().lower(): n for n in reader.fieldnames}
        key = names.get("price") or names.get("close")
        if key is None:
            raise ValueError(f"{path}: needs a 'price' or 'close' column")
        values = [float(row[key]) for row in reader if row[key].strip()]
    return np.array(values)


def seed_from_name(path) -> str:
    stem = Path(path).stem
    return stem.split("_", 1)[1] if "_" in stem else stem
