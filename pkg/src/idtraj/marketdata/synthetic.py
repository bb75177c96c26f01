"""Synthetic intraday markets drawn from a known zero-inflated t process.

The generator runs the same recursion as the fitted mixture models, with
true coefficients for the trade probability, location and scale predictors,
so estimators can be checked for recovery and the whole forecasting pipeline
can be exercised without proprietary trade data.
"""

import datetime as dt
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from ..designmatrix import (
    FUNDAMENTAL_NAMES,
    SIGMA_FEATURE_NAMES,
    logit_feature_names,
    weekday_flags,
)
from ..errors import ConfigError
from ..recursion import MixComponents, simulate_paths
from ..statcore.links import link_g2_inverse
from .grid import GridSpec, GridStore, ProductPanel, TradeRecord

# nominal centre/scale of the fundamentals; truth coefficients act on
# (x - centre) / scale so their magnitudes are comparable across regressors
FUNDAMENTAL_CENTRE = np.array([52000.0, 4000.0, 12000.0, 2500.0])
FUNDAMENTAL_SCALE = np.array([6000.0, 5000.0, 8000.0, 1500.0])


def _default_logit(n_steps):
    c = {"intercept": -0.3, "adP_l1": 0.15, "sat": -0.25, "sun": -0.4,
         "da_wind_on": 0.2, "abar_1": 0.7, "abar_6": 0.5}
    for j in range(1, n_steps + 1):
        c[f"ttm_{j}"] = 1.6 * (j - 1) / max(n_steps - 1, 1)
    return c


def _default_sigma():
    return {"intercept": 0.2, "adP_l1": 0.22, "adP_l2": 0.1, "adP_l3": 0.05,
            "adP_l4": 0.03, "adP_l5": 0.03, "adP_l6": 0.02, "adP_sum7_12": 0.01,
            "mon": 0.05, "sat": 0.15, "sun": 0.2,
            "da_load": 0.02, "da_solar": 0.03, "da_wind_on": 0.12, "da_wind_off": 0.02,
            "alpha_l1": -0.35, "alpha_l2": -0.15}


@dataclass
class SyntheticConfig:
    n_days: int = 130
    n_products: int = 2
    hours: tuple | None = None
    start_day: dt.date = dt.date(2016, 1, 4)
    spec: GridSpec = field(default_factory=GridSpec)
    burn_in: int = 24
    logit_coefs: dict | None = None  # nominal units; None -> defaults
    mu_coefs: tuple = (-0.25, -0.12, -0.05)
    sigma_coefs: dict | None = None
    price_smooth: tuple = (0.3, 40.0, 25.0, 1.5)  # amplitude, centre, width, cap
    step_smooth: tuple = (0.9, 2.5)  # amplitude, decay (steps)
    nu: float = 4.5
    fixed_pi: float | None = None
    fixed_sigma: float | None = None

    def resolved_hours(self):
        if self.hours is not None:
            hours = tuple(int(h) for h in self.hours)
        elif self.n_products == 1:
            hours = (12,)
        else:
            hours = tuple(int(round(h)) for h in np.linspace(8, 20, self.n_products))
        if len(set(hours)) != len(hours) or not all(0 <= h <= 23 for h in hours):
            raise ConfigError(f"invalid product hours {hours}")
        return hours


def _raw_vector(names, nominal):
    """Convert nominal-unit coefficients into raw-regressor coefficients."""
    unknown = set(nominal) - set(names)
    if unknown:
        raise ConfigError(f"unknown coefficient names {sorted(unknown)}")
    beta = np.array([float(nominal.get(n, 0.0)) for n in names])
    for k, fname in enumerate(FUNDAMENTAL_NAMES):
        j = names.index(fname)
        b = beta[j]
        beta[j] = b / FUNDAMENTAL_SCALE[k]
        beta[names.index("intercept")] -= b * FUNDAMENTAL_CENTRE[k] / FUNDAMENTAL_SCALE[k]
    return beta


@dataclass
class MarketTruth:
    """True parameter maps of a synthetic market (raw-regressor coefficients)."""

    logit: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray
    price_smooth: tuple
    step_smooth: tuple
    nu: float
    n_steps: int
    fixed_pi: float | None = None
    fixed_sigma: float | None = None

    def h1(self, p):
        amp, centre, width, cap = self.price_smooth
        return np.minimum(amp * ((np.asarray(p) - centre) / width) ** 2, cap)

    def h2(self, t):
        amp, decay = self.step_smooth
        return amp * np.exp((np.asarray(t, float) - self.n_steps) / decay)

    def pi(self, logit_rows):
        if self.fixed_pi is not None:
            return np.full(logit_rows.shape[0], float(self.fixed_pi))
        return expit(logit_rows @ self.logit)

    def mean(self, mu_rows):
        return mu_rows @ self.mu

    def sd(self, sigma_rows, p_prev, t):
        if self.fixed_sigma is not None:
            return np.full(sigma_rows.shape[0], float(self.fixed_sigma))
        return link_g2_inverse(sigma_rows @ self.sigma + self.h1(p_prev) + self.h2(t))

    def components(self):
        return MixComponents(self.pi, self.mean, self.sd, self.nu)

    def to_dict(self):
        return {
            "logit_coefs": dict(zip(logit_feature_names(self.n_steps), self.logit.tolist())),
            "mu_coefs": self.mu.tolist(),
            "sigma_coefs": dict(zip(SIGMA_FEATURE_NAMES, self.sigma.tolist())),
            "price_smooth": list(self.price_smooth),
            "step_smooth": list(self.step_smooth),
            "nu": self.nu,
            "n_steps": self.n_steps,
            "fixed_pi": self.fixed_pi,
            "fixed_sigma": self.fixed_sigma,
        }

    @classmethod
    def from_dict(cls, d):
        n_steps = int(d["n_steps"])
        return cls(
            np.array([d["logit_coefs"][n] for n in logit_feature_names(n_steps)]),
            np.asarray(d["mu_coefs"], float),
            np.array([d["sigma_coefs"][n] for n in SIGMA_FEATURE_NAMES]),
            tuple(d["price_smooth"]),
            tuple(d["step_smooth"]),
            float(d["nu"]),
            n_steps,
            d.get("fixed_pi"),
            d.get("fixed_sigma"),
        )


def make_truth(config):
    if not config.nu > 2:
        raise ConfigError("nu must exceed 2")
    n_steps = config.spec.n_steps
    logit = _raw_vector(logit_feature_names(n_steps), config.logit_coefs or _default_logit(n_steps))
    sigma = _raw_vector(SIGMA_FEATURE_NAMES, config.sigma_coefs or _default_sigma())
    if config.fixed_pi is not None and not 0 <= config.fixed_pi <= 1:
        raise ConfigError("fixed_pi must lie in [0, 1]")
    if config.fixed_sigma is not None and not config.fixed_sigma > 0:
        raise ConfigError("fixed_sigma must be positive")
    return MarketTruth(logit, np.asarray(config.mu_coefs, float), sigma,
                       tuple(config.price_smooth), tuple(config.step_smooth),
                       float(config.nu), n_steps, config.fixed_pi, config.fixed_sigma)


def _fundamentals(days, hours, rng):
    """Day-ahead load, solar, wind onshore and offshore forecasts (MWh)."""
    n = len(days)
    doy = np.array([d.timetuple().tm_yday for d in days])
    season = np.sin(2 * np.pi * (doy - 80) / 365.25)
    weekend = np.array([d.weekday() >= 5 for d in days], dtype=float)
    w = np.empty(n)
    w[0] = rng.normal(0, 0.7)
    for i in range(1, n):
        w[i] = 0.7 * w[i - 1] + rng.normal(0, 0.5)
    out = {}
    for h in hours:
        day_shape = np.exp(-0.5 * ((h - 13.5) / 4.5) ** 2)
        load = 46000 + 12000 * day_shape - 5000 * weekend - 2500 * season + rng.normal(0, 1500, n)
        sun = max(0.0, np.sin(np.pi * (h - 6) / 14)) if 6 <= h <= 20 else 0.0
        solar = 18000 * sun * (0.6 + 0.4 * season) * rng.uniform(0.3, 1.0, n)
        wind_on = 12000 * np.exp(w - 0.3) * (1 + rng.normal(0, 0.05, n)).clip(0.5)
        wind_off = 2500 * np.exp(0.8 * w - 0.2) * (1 + rng.normal(0, 0.08, n)).clip(0.5)
        out[h] = np.column_stack([np.maximum(load, 1000.0), solar, wind_on, wind_off])
    return out


def generate_synthetic_market(config=None, seed=0):
    """Draw a synthetic market.

    Returns ``(store, truth)``: a :class:`GridStore` with one panel per
    product and the :class:`MarketTruth` the grids were drawn from.
    """
    config = config or SyntheticConfig()
    if config.n_days < 1:
        raise ConfigError("n_days must be positive")
    if config.burn_in < 13:
        raise ConfigError("burn_in must cover the 12 lags plus one step")
    spec = config.spec
    truth = make_truth(config)
    hours = config.resolved_hours()
    rng = np.random.default_rng(seed)
    days = [config.start_day + dt.timedelta(days=i) for i in range(config.n_days)]
    fund = _fundamentals(days, hours, rng)
    wk = weekday_flags(days)
    comps = truth.components()
    b = config.burn_in
    lag = spec.n_lags
    panels = {}
    for h in hours:
        f = fund[h]
        da = 40 + 0.0006 * (f[:, 0] - 52000) - 0.0005 * (f[:, 2] - 12000) + rng.normal(0, 4, config.n_days)
        width = b + spec.width
        prices = np.repeat(da[:, None], width, axis=1)
        diffs = np.zeros((config.n_days, width))
        traded = np.zeros((config.n_days, width), dtype=bool)

        def step_of(col):
            return int(min(max(col - (b + lag), 1), spec.n_steps))

        simulate_paths(comps, diffs, traded, prices, wk, f, 13, step_of, spec.n_steps, rng)
        panels[h] = ProductPanel(h, np.array(days, dtype="datetime64[D]"), prices[:, b:],
                                 traded[:, b:], da, f, spec)
    return GridStore(spec, panels), truth


def render_trades(store):
    """One unit-volume trade per traded window, at the window midpoint.

    Aggregating these trades reproduces the store's grids exactly; an extra
    trade just before the grid start pins the first column when it was not
    traded.
    """
    spec = store.spec
    trades = []
    step = dt.timedelta(minutes=spec.step_minutes)
    for h in store.hours:
        p = store.panels[h]
        for i in range(len(p)):
            day = p.days[i].astype(dt.date)
            start = dt.datetime.combine(day, dt.time(h))
            grid_start = start - dt.timedelta(minutes=spec.gate_minutes) - spec.width * step
            if not p.traded[i, 0] and p.prices[i, 0] != p.da_price[i]:
                trades.append(TradeRecord(day, h, grid_start - step / 2, float(p.prices[i, 0]), 1.0))
            for k in np.flatnonzero(p.traded[i]):
                ts = grid_start + int(k) * step + step / 2
                trades.append(TradeRecord(day, h, ts, float(p.prices[i, k]), 1.0))
    return trades
