"""Trades, 5-minute VWAP grids and product panels."""

import datetime as dt
from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError, InputError

TRADING_OPEN_HOUR = 15  # previous day, local time


@dataclass(frozen=True)
class GridSpec:
    """Layout of the extended grid.

    Column ``i`` is the window ending ``gate + (n_lags + n_steps - i) * step``
    minutes before delivery.  Column ``n_lags`` is the forecast origin and
    columns ``n_lags + 1 .. n_lags + n_steps`` are the forecast steps.
    """

    n_lags: int = 12
    n_steps: int = 31
    step_minutes: int = 5
    gate_minutes: int = 30

    @property
    def width(self):
        return self.n_lags + 1 + self.n_steps

    @property
    def origin_index(self):
        return self.n_lags

    @property
    def origin_minutes(self):
        return self.window_end_minutes(self.origin_index)

    def window_end_minutes(self, i):
        return self.gate_minutes + (self.n_lags + self.n_steps - i) * self.step_minutes

    def to_dict(self):
        return {"n_lags": self.n_lags, "n_steps": self.n_steps,
                "step_minutes": self.step_minutes, "gate_minutes": self.gate_minutes}


@dataclass(frozen=True)
class TradeRecord:
    delivery_day: dt.date
    delivery_hour: int
    exec_time: dt.datetime
    price: float
    volume: float

    def __post_init__(self):
        if not 0 <= self.delivery_hour <= 23:
            raise InputError(f"delivery hour {self.delivery_hour} outside 0..23")
        if not self.volume > 0:
            raise InputError(f"trade volume must be positive, got {self.volume}")
        if not self.exec_time < self.delivery_start:
            raise InputError("trade executed at or after delivery start")

    @property
    def delivery_start(self):
        return dt.datetime.combine(self.delivery_day, dt.time(self.delivery_hour))

    @property
    def minutes_before_delivery(self):
        return (self.delivery_start - self.exec_time).total_seconds() / 60.0


@dataclass(frozen=True)
class FundamentalRow:
    day: dt.date
    hour: int
    da_load: float
    da_solar: float
    da_wind_onshore: float
    da_wind_offshore: float

    def __post_init__(self):
        vals = self.as_array()
        if not np.all(np.isfinite(vals)):
            raise InputError("fundamentals must be finite")
        if not self.da_load > 0:
            raise InputError("day-ahead load forecast must be positive")

    def as_array(self):
        return np.array([self.da_load, self.da_solar, self.da_wind_onshore, self.da_wind_offshore])


def aggregate_vwap(trades):
    """Volume-weighted average price of ``(price, volume)`` pairs, ``None`` if empty."""
    trades = list(trades)
    if not trades:
        return None
    p = np.array([float(t[0]) for t in trades])
    v = np.array([float(t[1]) for t in trades])
    if np.any(~(v > 0)):
        raise InputError("trade volumes must be positive")
    return float(np.sum(v * p) / np.sum(v))


@dataclass
class PriceGrid:
    """5-minute VWAP prices of one product-day on the extended grid."""

    day: dt.date
    hour: int
    prices: np.ndarray
    traded: np.ndarray
    da_price: float
    spec: GridSpec = field(default_factory=GridSpec)

    def __post_init__(self):
        self.prices = np.asarray(self.prices, dtype=float)
        self.traded = np.asarray(self.traded, dtype=bool)
        if self.prices.shape != (self.spec.width,) or self.traded.shape != (self.spec.width,):
            raise InputError(f"grid arrays must have length {self.spec.width}")

    @property
    def diffs(self):
        """``prices[t] - prices[t-1]``; the first entry has no predecessor and is 0."""
        return np.concatenate(([0.0], np.diff(self.prices)))

    @property
    def origin_index(self):
        return self.spec.origin_index

    @property
    def n_steps(self):
        return self.spec.n_steps

    @property
    def origin_price(self):
        return float(self.prices[self.spec.origin_index])

    @property
    def product(self):
        return (self.day, self.hour)


def _as_trade_tuples(trades, delivery_start):
    out = []
    for tr in trades:
        if isinstance(tr, TradeRecord):
            out.append((tr.exec_time, tr.price, tr.volume))
        else:
            ts, price, vol = tr
            out.append((ts, float(price), float(vol)))
    for ts, _, vol in out:
        if not vol > 0:
            raise InputError("trade volumes must be positive")
        if not ts < delivery_start:
            raise InputError("trade executed at or after delivery start")
    return out


def build_price_grid(trades, da_price, spec=None, day=None, hour=None):
    """Aggregate the trades of one product-day onto the extended grid.

    ``trades`` holds :class:`TradeRecord` objects or ``(exec_time, price,
    volume)`` tuples.  A window without trades repeats the previous observed
    5-minute VWAP (looking back to the opening of trading if necessary); with
    no trade at all since the opening the day-ahead price is used.
    """
    spec = spec or GridSpec()
    trades = list(trades)
    if day is None or hour is None:
        if not trades or not isinstance(trades[0], TradeRecord):
            raise InputError("day and hour are required unless TradeRecords are given")
        day, hour = trades[0].delivery_day, trades[0].delivery_hour
    start = dt.datetime.combine(day, dt.time(hour))
    tuples = _as_trade_tuples(trades, start)
    step = dt.timedelta(minutes=spec.step_minutes)
    opening = dt.datetime.combine(day - dt.timedelta(days=1), dt.time(TRADING_OPEN_HOUR))
    grid_end = start - dt.timedelta(minutes=spec.gate_minutes)
    grid_start = grid_end - spec.width * step

    # windows are [end - step, end), indexed from the grid start
    buckets = [[] for _ in range(spec.width)]
    earlier = {}
    for ts, price, vol in tuples:
        if ts < opening or ts >= grid_end:
            continue
        k = int((ts - grid_start) // step)
        if k >= 0:
            buckets[k].append((price, vol))
        else:
            earlier.setdefault(k, []).append((price, vol))

    if earlier:
        last = aggregate_vwap(earlier[max(earlier)])
    elif da_price is None or not np.isfinite(da_price):
        last = None
    else:
        last = float(da_price)

    prices = np.empty(spec.width)
    traded = np.zeros(spec.width, dtype=bool)
    for i, bucket in enumerate(buckets):
        v = aggregate_vwap(bucket)
        if v is not None:
            last = v
            traded[i] = True
        elif last is None:
            raise DataError(f"no trades before window {i} of {day} h{hour} and no day-ahead price")
        prices[i] = last
    return PriceGrid(day, hour, prices, traded, float(da_price) if da_price is not None else np.nan, spec)


@dataclass
class ProductPanel:
    """All product-days of one delivery hour, stacked as arrays."""

    hour: int
    days: np.ndarray  # datetime64[D]
    prices: np.ndarray  # (n_days, width)
    traded: np.ndarray  # (n_days, width) bool
    da_price: np.ndarray  # (n_days,)
    fundamentals: np.ndarray  # (n_days, 4)
    spec: GridSpec = field(default_factory=GridSpec)

    def __post_init__(self):
        self.days = np.asarray(self.days, dtype="datetime64[D]")
        self.prices = np.asarray(self.prices, dtype=float)
        self.traded = np.asarray(self.traded, dtype=bool)
        self.da_price = np.asarray(self.da_price, dtype=float)
        self.fundamentals = np.asarray(self.fundamentals, dtype=float).reshape(-1, 4)
        n = self.days.shape[0]
        if self.prices.shape != (n, self.spec.width) or self.traded.shape != self.prices.shape:
            raise InputError("panel arrays do not match the grid spec")
        if not np.all(np.isfinite(self.fundamentals)):
            raise DataError(f"non-finite fundamentals for hour {self.hour}")

    def __len__(self):
        return self.days.shape[0]

    @property
    def diffs(self):
        return np.concatenate([np.zeros((len(self), 1)), np.diff(self.prices, axis=1)], axis=1)

    def grid(self, i):
        return PriceGrid(self.days[i].astype(dt.date), self.hour, self.prices[i],
                         self.traded[i], float(self.da_price[i]), self.spec)

    def subset(self, idx):
        idx = np.asarray(idx)
        return ProductPanel(self.hour, self.days[idx], self.prices[idx], self.traded[idx],
                            self.da_price[idx], self.fundamentals[idx], self.spec)

    @classmethod
    def from_grids(cls, grids, fundamentals):
        grids = list(grids)
        if not grids:
            raise DataError("empty panel")
        spec = grids[0].spec
        return cls(
            grids[0].hour,
            np.array([np.datetime64(g.day, "D") for g in grids]),
            np.stack([g.prices for g in grids]),
            np.stack([g.traded for g in grids]),
            np.array([g.da_price for g in grids]),
            np.asarray(fundamentals, float),
            spec,
        )


@dataclass
class GridStore:
    """Grid panels for every product plus the grid layout."""

    spec: GridSpec
    panels: dict  # hour -> ProductPanel

    @property
    def hours(self):
        return sorted(self.panels)

    def n_days(self):
        return min(len(p) for p in self.panels.values())
