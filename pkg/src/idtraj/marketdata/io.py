"""CSV ingestion and the on-disk grid store."""

import csv
import datetime as dt
import json
import logging
import warnings
from collections import defaultdict
from pathlib import Path

import numpy as np

from ..errors import DataError, InputError
from .grid import GridSpec, GridStore, ProductPanel, TradeRecord, build_price_grid

log = logging.getLogger(__name__)

TRADES_HEADER = ["delivery_day", "delivery_hour", "exec_ts", "price", "volume"]
FUNDAMENTALS_HEADER = ["day", "hour", "da_load", "da_solar", "da_wind_on", "da_wind_off"]
DA_HEADER = ["day", "hour", "da_price"]
STORE_FORMAT = "idtraj-grid-store"
STORE_VERSION = 1


def fmt(x):
    """Fixed float formatting (17 significant digits) for byte-stable files."""
    return format(float(x), ".17g")


def _read_rows(path, header):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            got = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        if [h.strip() for h in got] != header:
            raise InputError(f"{path}: expected header {','.join(header)}, got {','.join(got)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise InputError(f"{path}:{lineno}: expected {len(header)} fields")
            yield lineno, row


def _naive(ts):
    return ts.replace(tzinfo=None) if ts.tzinfo is not None else ts


def read_trades_csv(path):
    trades = []
    for lineno, row in _read_rows(path, TRADES_HEADER):
        try:
            trades.append(TradeRecord(
                dt.date.fromisoformat(row[0]),
                int(row[1]),
                _naive(dt.datetime.fromisoformat(row[2])),
                float(row[3]),
                float(row[4]),
            ))
        except ValueError as exc:
            raise InputError(f"{path}:{lineno}: {exc}") from exc
    return trades


def read_fundamentals_csv(path):
    out = {}
    for lineno, row in _read_rows(path, FUNDAMENTALS_HEADER):
        try:
            key = (dt.date.fromisoformat(row[0]), int(row[1]))
            vals = np.array([float(v) for v in row[2:]])
        except ValueError as exc:
            raise InputError(f"{path}:{lineno}: {exc}") from exc
        if not np.all(np.isfinite(vals)) or not vals[0] > 0:
            raise InputError(f"{path}:{lineno}: fundamentals must be finite with positive load")
        out[key] = vals
    return out


def read_da_prices_csv(path):
    out = defaultdict(list)
    for lineno, row in _read_rows(path, DA_HEADER):
        try:
            out[dt.date.fromisoformat(row[0])].append((int(row[1]), float(row[2])))
        except ValueError as exc:
            raise InputError(f"{path}:{lineno}: {exc}") from exc
    return out


def ingest(trades_path, da_path, fundamentals_path, spec=None):
    """Build a :class:`GridStore` from raw trade, day-ahead and fundamentals CSVs.

    Days whose day-ahead file does not list exactly the 24 hours 0..23 once
    (clock-change days) are dropped with a warning, as are product-days with
    no fundamentals row.
    """
    spec = spec or GridSpec()
    da = read_da_prices_csv(da_path)
    fund = read_fundamentals_csv(fundamentals_path)
    trades = read_trades_csv(trades_path)

    da_by_key = {}
    for day, rows in sorted(da.items()):
        hours = [h for h, _ in rows]
        if sorted(hours) != list(range(24)):
            warnings.warn(f"dropping {day}: {len(hours)} day-ahead hours (clock change?)")
            continue
        for h, p in rows:
            da_by_key[(day, h)] = p

    by_key = defaultdict(list)
    for tr in trades:
        by_key[(tr.delivery_day, tr.delivery_hour)].append(tr)

    panels = defaultdict(lambda: ([], []))
    missing = []
    for key in sorted(da_by_key):
        day, hour = key
        if key not in fund:
            missing.append(key)
            continue
        grid = build_price_grid(by_key.get(key, []), da_by_key[key], spec, day, hour)
        panels[hour][0].append(grid)
        panels[hour][1].append(fund[key])
    if missing:
        warnings.warn(f"dropping {len(missing)} product-days without fundamentals "
                      f"(first: {missing[0][0]} h{missing[0][1]})")
    if not panels:
        raise DataError("no complete product-days after ingestion")
    store = GridStore(spec, {h: ProductPanel.from_grids(g, f) for h, (g, f) in panels.items()})
    log.info("ingested %d products, %d days", len(store.panels), store.n_days())
    return store


def write_raw_csvs(store, trades, directory):
    """Write trades, day-ahead prices and fundamentals in the ingestion format.

    Day-ahead rows are written for all 24 hours; hours without a panel get
    the day's mean product price so the day is not mistaken for a clock
    change, and are dropped again on ingestion for lack of fundamentals.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {k: directory / f"{k}.csv" for k in ("trades", "da_prices", "fundamentals")}
    with open(paths["trades"], "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(TRADES_HEADER)
        for tr in trades:
            wr.writerow([tr.delivery_day.isoformat(), tr.delivery_hour,
                         tr.exec_time.isoformat(), fmt(tr.price), fmt(tr.volume)])
    days = sorted({d for p in store.panels.values() for d in p.days.tolist()})
    da = {}
    for hour in store.hours:
        p = store.panels[hour]
        for i, d in enumerate(p.days.tolist()):
            da[(d, hour)] = p.da_price[i]
    with open(paths["da_prices"], "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(DA_HEADER)
        for d in days:
            known = [v for (dd, _), v in da.items() if dd == d]
            fill = float(np.mean(known))
            for h in range(24):
                wr.writerow([d.isoformat(), h, fmt(da.get((d, h), fill))])
    with open(paths["fundamentals"], "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(FUNDAMENTALS_HEADER)
        for hour in store.hours:
            p = store.panels[hour]
            for i, d in enumerate(p.days.tolist()):
                wr.writerow([d.isoformat(), hour] + [fmt(v) for v in p.fundamentals[i]])
    return paths


def save_store(store, directory, extra_meta=None):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    w = store.spec.width
    meta = {"format": STORE_FORMAT, "version": STORE_VERSION, "spec": store.spec.to_dict()}
    if extra_meta:
        meta.update(extra_meta)
    (directory / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    with open(directory / "grids.csv", "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["day", "hour", "da_price"] + [f"p{i}" for i in range(w)] + [f"a{i}" for i in range(w)])
        for hour in store.hours:
            p = store.panels[hour]
            for i in range(len(p)):
                wr.writerow([str(p.days[i]), hour, fmt(p.da_price[i])]
                            + [fmt(v) for v in p.prices[i]] + [int(a) for a in p.traded[i]])
    with open(directory / "fundamentals.csv", "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(FUNDAMENTALS_HEADER)
        for hour in store.hours:
            p = store.panels[hour]
            for i in range(len(p)):
                wr.writerow([str(p.days[i]), hour] + [fmt(v) for v in p.fundamentals[i]])


def load_store(directory):
    directory = Path(directory)
    try:
        meta = json.loads((directory / "meta.json").read_text())
    except FileNotFoundError:
        raise DataError(f"{directory} is not a grid store (no meta.json)") from None
    if meta.get("format") != STORE_FORMAT:
        raise DataError(f"{directory}: unknown store format {meta.get('format')!r}")
    spec = GridSpec(**meta["spec"])
    w = spec.width
    fund = read_fundamentals_csv(directory / "fundamentals.csv")
    rows = defaultdict(list)
    with open(directory / "grids.csv", newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            day = dt.date.fromisoformat(row[0])
            hour = int(row[1])
            rows[hour].append((
                day,
                float(row[2]),
                np.array(row[3:3 + w], dtype=float),
                np.array(row[3 + w:3 + 2 * w], dtype=int).astype(bool),
            ))
    panels = {}
    for hour, items in rows.items():
        try:
            f = np.stack([fund[(d, hour)] for d, *_ in items])
        except KeyError as exc:
            raise DataError(f"missing fundamentals for {exc.args[0]}") from None
        panels[hour] = ProductPanel(
            hour,
            np.array([np.datetime64(d, "D") for d, *_ in items]),
            np.stack([it[2] for it in items]),
            np.stack([it[3] for it in items]),
            np.array([it[1] for it in items]),
            f,
            spec,
        )
    return GridStore(spec, panels), meta
