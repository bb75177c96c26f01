"""Regressor matrices for the trade-probability, location, scale and
quantile-regression models.

All builders come in two flavours: a vectorised core operating on stacked
histories (``diffs``/``traded``/``prices`` arrays of shape ``(n, width)``) and
a per-grid wrapper returning a single row.  The current step ``t`` (1-based)
sits at column ``n_lags + t`` of the grid; lags ``t-1 ... t-12`` are read
from the columns to its left.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, PreconditionError

MAX_LAG = 12
FUNDAMENTAL_NAMES = ("da_load", "da_solar", "da_wind_on", "da_wind_off")
WEEKDAY_NAMES = ("mon", "sat", "sun")


def _lag_names(prefix, n):
    return tuple(f"{prefix}_l{j}" for j in range(1, n + 1))


def logit_feature_names(n_steps=31):
    return (
        ("intercept",)
        + _lag_names("dP", 3)
        + _lag_names("adP", 6)
        + ("adP_sum7_12",)
        + WEEKDAY_NAMES
        + tuple(f"ttm_{j}" for j in range(1, n_steps + 1))
        + FUNDAMENTAL_NAMES
        + tuple(f"abar_{j}" for j in range(1, MAX_LAG + 1))
    )


SIGMA_FEATURE_NAMES = (
    ("intercept",)
    + _lag_names("adP", 6)
    + ("adP_sum7_12",)
    + WEEKDAY_NAMES
    + FUNDAMENTAL_NAMES
    + ("alpha_l1", "alpha_l2")
)
MU_FEATURE_NAMES = _lag_names("dP", 3)
LQR_FEATURE_NAMES = (
    ("intercept",)
    + _lag_names("dP", 3)
    + _lag_names("adP", 6)
    + ("adP_sum7_12", "P0")
    + WEEKDAY_NAMES
    + ("alpha_l1", "alpha_l2")
    + FUNDAMENTAL_NAMES
)


def weekday_flags(days):
    """``(n, 3)`` Monday/Saturday/Sunday indicators for dates or datetime64 days."""
    d = np.asarray(days, dtype="datetime64[D]")
    # 1970-01-01 was a Thursday -> Monday == 0
    dow = (d.astype(np.int64) + 3) % 7
    return np.stack([dow == 0, dow == 5, dow == 6], axis=-1).astype(float)


@dataclass
class StandardizationStats:
    names: tuple
    mean: np.ndarray
    sd: np.ndarray
    scaled: np.ndarray  # bool; False for constant columns (incl. the intercept)

    def to_dict(self):
        return {
            "names": list(self.names),
            "mean": self.mean.tolist(),
            "sd": self.sd.tolist(),
            "scaled": self.scaled.astype(bool).tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["names"]), np.asarray(d["mean"], float), np.asarray(d["sd"], float),
                   np.asarray(d["scaled"], bool))


@dataclass
class FeatureMatrix:
    values: np.ndarray
    names: tuple
    standardization: StandardizationStats | None = field(default=None)

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        self.names = tuple(self.names)
        if self.values.shape[1] != len(self.names):
            raise ContractError(
                f"{self.values.shape[1]} columns but {len(self.names)} names"
            )

    @property
    def rows(self):
        return self.values.shape[0]

    def column(self, name):
        return self.values[:, self.names.index(name)]


def standardize(matrix, fit_stats=None):
    """Column-wise ``(x - mean) / sd`` with sample (n-1) standard deviations.

    Constant columns are left as they are and flagged ``scaled=False``; with
    ``fit_stats`` the stored in-sample moments are reused for new rows.
    """
    if fit_stats is None:
        x = matrix.values
        if x.shape[0] < 2:
            raise PreconditionError("need at least two rows to estimate scaling")
        mean = x.mean(axis=0)
        sd = x.std(axis=0, ddof=1)
        scaled = np.ptp(x, axis=0) > 0
        mean = np.where(scaled, mean, 0.0)
        sd = np.where(scaled, sd, 1.0)
        fit_stats = StandardizationStats(matrix.names, mean, sd, scaled)
    elif tuple(fit_stats.names) != tuple(matrix.names):
        raise ContractError("column names do not match the stored standardisation")
    out = np.where(fit_stats.scaled, (matrix.values - fit_stats.mean) / fit_stats.sd, matrix.values)
    return FeatureMatrix(out, matrix.names, fit_stats), fit_stats


# ---------------------------------------------------------------------------
# vectorised cores


def _check_lags(pos, width):
    if pos - MAX_LAG < 1:
        raise PreconditionError(
            f"step at column {pos} needs {MAX_LAG} lags; extend the pre-origin grid"
        )
    if pos > width:
        raise PreconditionError("step lies beyond the grid")


def _abs_lag_block(diffs, pos):
    a = np.abs(diffs[:, pos - 6:pos][:, ::-1])
    s = np.abs(diffs[:, pos - MAX_LAG:pos - 6]).sum(axis=1, keepdims=True)
    return a, s


def logit_block(diffs, traded, pos, weekday, fundamentals, t, n_steps):
    """Logit regressors for the step at column ``pos`` (``t`` is its 1-based step)."""
    _check_lags(pos, diffs.shape[1])
    n = diffs.shape[0]
    d3 = diffs[:, pos - 3:pos][:, ::-1]
    a6, s712 = _abs_lag_block(diffs, pos)
    ttm = np.zeros((n, n_steps))
    ttm[:, t - 1] = 1.0
    alags = traded[:, pos - MAX_LAG:pos][:, ::-1].astype(float)
    abar = np.cumsum(alags, axis=1) / np.arange(1, MAX_LAG + 1)
    return np.hstack([np.ones((n, 1)), d3, a6, s712, weekday, ttm, fundamentals, abar])


def sigma_block(diffs, traded, prices, pos, weekday, fundamentals):
    """Linear scale regressors plus the raw spline inputs ``P_{t-1}``."""
    _check_lags(pos, diffs.shape[1])
    n = diffs.shape[0]
    a6, s712 = _abs_lag_block(diffs, pos)
    al = traded[:, [pos - 1, pos - 2]].astype(float)
    lin = np.hstack([np.ones((n, 1)), a6, s712, weekday, fundamentals, al])
    return lin, prices[:, pos - 1].copy()


def mu_block(diffs, pos):
    if pos - 3 < 1:
        raise PreconditionError("need three lagged differences")
    return diffs[:, pos - 3:pos][:, ::-1].copy()


def lqr_block(diffs, traded, prices, origin, weekday, fundamentals):
    """Regressors observable at the forecast origin (column ``origin``)."""
    pos = origin + 1
    _check_lags(pos, diffs.shape[1])
    n = diffs.shape[0]
    d3 = diffs[:, pos - 3:pos][:, ::-1]
    a6, s712 = _abs_lag_block(diffs, pos)
    p0 = prices[:, origin:origin + 1]
    al = traded[:, [pos - 1, pos - 2]].astype(float)
    return np.hstack([np.ones((n, 1)), d3, a6, s712, p0, weekday, al, fundamentals])


# ---------------------------------------------------------------------------
# per-grid wrappers


def _grid_arrays(grid):
    return (
        np.asarray(grid.diffs, float)[None, :],
        np.asarray(grid.traded, bool)[None, :],
        np.asarray(grid.prices, float)[None, :],
    )


def _fund_row(fundamentals):
    if hasattr(fundamentals, "as_array"):
        return fundamentals.as_array()[None, :]
    return np.asarray(fundamentals, float).reshape(1, 4)


def build_logit_features(grid, fundamentals, t):
    diffs, traded, _ = _grid_arrays(grid)
    pos = grid.origin_index + t
    wk = weekday_flags([grid.day])
    return logit_block(diffs, traded, pos, wk, _fund_row(fundamentals), t, grid.n_steps)[0]


def build_sigma_features(grid, fundamentals, t):
    diffs, traded, prices = _grid_arrays(grid)
    pos = grid.origin_index + t
    wk = weekday_flags([grid.day])
    lin, p_prev = sigma_block(diffs, traded, prices, pos, wk, _fund_row(fundamentals))
    return lin[0], (float(p_prev[0]), t)


def build_mu_features(grid, t):
    diffs, _, _ = _grid_arrays(grid)
    return mu_block(diffs, grid.origin_index + t)[0]


def build_lqr_features(grid, fundamentals):
    diffs, traded, prices = _grid_arrays(grid)
    wk = weekday_flags([grid.day])
    return lqr_block(diffs, traded, prices, grid.origin_index, wk, _fund_row(fundamentals))[0]


# ---------------------------------------------------------------------------
# stacked in-sample designs (rows ordered day-major, then step)


@dataclass
class StackedDesign:
    """In-sample regressors for steps ``1..T`` of ``n_days`` product-days."""

    logit: FeatureMatrix
    sigma: FeatureMatrix
    spline_price: np.ndarray
    spline_step: np.ndarray
    mu: FeatureMatrix
    target: np.ndarray
    traded: np.ndarray
    day_index: np.ndarray


def stack_design(diffs, traded, prices, origin, weekday, fundamentals, n_steps):
    """Build every per-step design over all days of a window."""
    blocks = {"logit": [], "sigma": [], "pprev": [], "mu": []}
    for t in range(1, n_steps + 1):
        pos = origin + t
        blocks["logit"].append(logit_block(diffs, traded, pos, weekday, fundamentals, t, n_steps))
        lin, pp = sigma_block(diffs, traded, prices, pos, weekday, fundamentals)
        blocks["sigma"].append(lin)
        blocks["pprev"].append(pp)
        blocks["mu"].append(mu_block(diffs, pos))

    def day_major(arrs):
        return np.stack(arrs, axis=1).reshape((-1,) + arrs[0].shape[1:])

    n = diffs.shape[0]
    steps = np.tile(np.arange(1, n_steps + 1, dtype=float), n)
    return StackedDesign(
        logit=FeatureMatrix(day_major(blocks["logit"]), logit_feature_names(n_steps)),
        sigma=FeatureMatrix(day_major(blocks["sigma"]), SIGMA_FEATURE_NAMES),
        spline_price=day_major(blocks["pprev"]),
        spline_step=steps,
        mu=FeatureMatrix(day_major(blocks["mu"]), MU_FEATURE_NAMES),
        target=diffs[:, origin + 1:origin + 1 + n_steps].reshape(-1).copy(),
        traded=traded[:, origin + 1:origin + 1 + n_steps].reshape(-1).astype(bool),
        day_index=np.repeat(np.arange(n), n_steps),
    )
