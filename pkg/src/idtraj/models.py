"""The twelve trajectory models behind one fit/simulate interface.

``fit_model(model_id, panel)`` estimates a model on an in-sample
:class:`~idtraj.marketdata.ProductPanel` and returns a fitted object whose
``simulate(state, n_members, rng)`` draws an ``M x T`` matrix of price paths
for a target product-day.  Fits that several models share (the trade
probability lasso, the quantile regressions) are memoised in a per-window
cache dict.
"""

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit, ndtri

from .designmatrix import (
    LQR_FEATURE_NAMES,
    FeatureMatrix,
    lqr_block,
    stack_design,
    standardize,
    weekday_flags,
)
from .errors import ContractError, DataError, EstimationError, IdtrajError
from .estimators import fit_logit_lasso, fit_lqr, fit_mv, fit_t_gamlss
from .estimators.logit_lasso import ETA_CLAMP
from .estimators.lqr import MIN_DAYS, build_marginal_cdf
from .marketdata.io import fmt
from .recursion import MixComponents, simulate_paths
from .statcore.copulas import copula_transform, repair_correlation

log = logging.getLogger(__name__)

MODEL_IDS = (
    "Naive", "MV.N", "MV.t", "RW.N", "RW.t", "RW.t.mix.D", "LQR.Gauss", "LQR.ind",
    "Mix.RW.t", "Mix.t.mu", "Mix.t.sigma", "Mix.t.mu.sigma",
)
MIX_VARIANT = {
    "Mix.RW.t": "const_sigma",
    "Mix.t.mu": "mu_only",
    "Mix.t.sigma": "sigma_only",
    "Mix.t.mu.sigma": "mu_and_sigma",
}
PI_CLAMP = 1e-6


@dataclass(frozen=True)
class ModelSpec:
    id: str
    n_members: int = 1000

    def __post_init__(self):
        if self.id not in MODEL_IDS:
            raise ContractError(f"unknown model id {self.id!r}; choose from {', '.join(MODEL_IDS)}")
        if self.n_members < 1:
            raise ContractError("n_members must be positive")


@dataclass
class TargetState:
    """Everything observable at the forecast origin of one product-day."""

    day: np.datetime64
    hour: int
    prices: np.ndarray  # columns 0..origin
    traded: np.ndarray
    weekday: np.ndarray  # (3,)
    fundamentals: np.ndarray  # (4,)
    n_steps: int

    @property
    def origin(self):
        return self.prices.shape[0] - 1

    @property
    def origin_price(self):
        return float(self.prices[-1])

    @property
    def diffs(self):
        return np.concatenate(([0.0], np.diff(self.prices)))

    @classmethod
    def from_panel(cls, panel, i):
        o = panel.spec.origin_index
        if not np.all(np.isfinite(panel.fundamentals[i])):
            raise DataError(f"missing fundamentals for {panel.days[i]} h{panel.hour}")
        return cls(panel.days[i], panel.hour, panel.prices[i, :o + 1].copy(),
                   panel.traded[i, :o + 1].copy(), weekday_flags(panel.days[i:i + 1])[0],
                   panel.fundamentals[i].copy(), panel.spec.n_steps)


@dataclass
class Ensemble:
    values: np.ndarray  # (M, T)
    origin_price: float
    day: str
    hour: int
    model_id: str
    seed: object = None

    def __post_init__(self):
        self.values = np.asarray(self.values, float)
        if self.values.ndim != 2 or not np.all(np.isfinite(self.values)):
            raise ContractError("ensemble must be a finite M x T matrix")

    @property
    def product(self):
        return (self.day, self.hour)

    def write(self, path):
        """CSV ``member,t1..tT`` plus a ``.meta.json`` sidecar next to it."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        m, t = self.values.shape
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["member"] + [f"t{j}" for j in range(1, t + 1)])
            for j in range(m):
                wr.writerow([j] + [fmt(v) for v in self.values[j]])
        meta = {"model": self.model_id, "day": self.day, "hour": self.hour,
                "origin_price": fmt(self.origin_price), "seed": self.seed, "members": m}
        path.with_suffix(".meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")

    @classmethod
    def read(cls, path):
        path = Path(path)
        meta = json.loads(path.with_suffix(".meta.json").read_text())
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        values = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
        return cls(values, float(meta["origin_price"]), meta["day"], int(meta["hour"]),
                   meta["model"], meta.get("seed"))


# ---------------------------------------------------------------------------
# fitted models


class FittedModel:
    model_id = "?"

    def simulate(self, state, n_members, rng):  # pragma: no cover - interface
        raise NotImplementedError

    def ensemble(self, state, n_members, rng, seed=None):
        values = self.simulate(state, n_members, rng)
        return Ensemble(values, state.origin_price, str(state.day), int(state.hour),
                        self.model_id, seed)


@dataclass
class NaiveModel(FittedModel):
    trajectories: np.ndarray  # (D, T) in-sample differences
    model_id: str = "Naive"

    def simulate(self, state, n_members, rng):
        idx = rng.integers(0, self.trajectories.shape[0], n_members)
        return state.origin_price + np.cumsum(self.trajectories[idx], axis=1)


@dataclass
class MvModel(FittedModel):
    fit: object
    model_id: str = "MV.N"

    def simulate(self, state, n_members, rng):
        return state.origin_price + np.cumsum(self.fit.sample(rng, n_members), axis=1)


@dataclass
class RandomWalkModel(FittedModel):
    """I.i.d. steps: zero-inflated (``pi < 1``) t or normal (``nu`` infinite)."""

    sigma: float
    nu: float
    pi: float = 1.0
    n_steps: int = 31
    model_id: str = "RW.t"

    def simulate(self, state, n_members, rng):
        shape = (n_members, self.n_steps)
        alpha = rng.random(shape) < self.pi
        if np.isfinite(self.nu):
            z = rng.standard_t(self.nu, size=shape) * np.sqrt((self.nu - 2) / self.nu)
        else:
            z = rng.standard_normal(shape)
        steps = np.where(alpha, self.sigma * z, 0.0)
        return state.origin_price + np.cumsum(steps, axis=1)


@dataclass
class MixModel(FittedModel):
    """Recursive zero-inflated t simulation from parameter maps."""

    components: MixComponents
    n_steps: int = 31
    model_id: str = "Mix.t.mu.sigma"
    fits: dict = field(default_factory=dict)

    def simulate(self, state, n_members, rng):
        o = state.origin
        width = o + 1 + self.n_steps
        prices = np.empty((n_members, width))
        prices[:, :o + 1] = state.prices
        diffs = np.zeros((n_members, width))
        diffs[:, :o + 1] = state.diffs
        traded = np.zeros((n_members, width), bool)
        traded[:, :o + 1] = state.traded
        wk = np.repeat(state.weekday[None, :], n_members, axis=0)
        fund = np.repeat(state.fundamentals[None, :], n_members, axis=0)
        simulate_paths(self.components, diffs, traded, prices, wk, fund, o + 1,
                       lambda col: col - o, self.n_steps, rng)
        return prices[:, o + 1:]


@dataclass
class LqrModel(FittedModel):
    fit: object
    copula: str  # "gaussian" or "independence"
    correlation: np.ndarray | None = None
    model_id: str = "LQR.Gauss"

    def simulate(self, state, n_members, rng):
        row = lqr_block(state.diffs[None, :], state.traded[None, :], state.prices[None, :],
                        state.origin, state.weekday[None, :], state.fundamentals[None, :])[0]
        u = copula_transform(rng.random((n_members, self.fit.n_steps)), self.copula,
                             self.correlation)
        out = np.empty_like(u)
        for t in range(1, self.fit.n_steps + 1):
            cdf = build_marginal_cdf(self.fit, row, t)
            out[:, t - 1] = cdf.inverse(u[:, t - 1])
        return state.origin_price + out


# ---------------------------------------------------------------------------
# fitting


def _cached(cache, key, fn):
    if cache is None:
        return fn()
    if key not in cache:
        cache[key] = fn()
    return cache[key]


def _window_steps(panel):
    o, T = panel.spec.origin_index, panel.spec.n_steps
    return panel.diffs[:, o + 1:o + 1 + T], panel.traded[:, o + 1:o + 1 + T]


def _design(panel, cache):
    return _cached(cache, "design", lambda: stack_design(
        panel.diffs, panel.traded, panel.prices, panel.spec.origin_index,
        weekday_flags(panel.days), panel.fundamentals, panel.spec.n_steps))


def _logit(panel, cache):
    def run():
        d = _design(panel, cache)
        X, _ = standardize(d.logit)
        return fit_logit_lasso(X, d.traded.astype(float))
    return _cached(cache, "logit", run)


def clamped_pi(fit):
    coef, off = fit.raw_coefficients()

    def pi(rows):
        eta = np.clip(rows @ coef + off, -ETA_CLAMP, ETA_CLAMP)
        return np.clip(expit(eta), PI_CLAMP, 1 - PI_CLAMP)
    return pi


def mix_components_from_fits(logit_fit, gam_fit):
    def mu(rows):
        return gam_fit.mu(rows)

    if gam_fit.uses_sigma_regressors:
        coef, off = gam_fit.raw_sigma_coefficients()
        h_price, h_step = gam_fit.h_price, gam_fit.h_step

        def sigma(lin, p_prev, t):
            from .statcore.links import link_g2_inverse
            eta = lin @ coef + off + h_price(p_prev) + h_step(np.full(lin.shape[0], float(t)))
            return link_g2_inverse(eta)
    else:
        const = float(gam_fit.sigma(np.ones((1, gam_fit.sigma_linear_coefs.size)))[0])

        def sigma(lin, p_prev, t):
            return np.full(lin.shape[0], const)
    return MixComponents(clamped_pi(logit_fit), mu, sigma, gam_fit.nu)


def lqr_correlation(targets):
    """Correlation of normal scores of the per-step targets (a Gaussian-copula estimate)."""
    D, T = targets.shape
    ranks = np.argsort(np.argsort(targets, axis=0, kind="stable"), axis=0, kind="stable")
    z = ndtri((ranks + 1) / (D + 1))
    with np.errstate(invalid="ignore", divide="ignore"):
        R = np.corrcoef(z, rowvar=False)
    const = np.ptp(targets, axis=0) == 0
    R[const, :] = 0.0
    R[:, const] = 0.0
    R = np.nan_to_num(R)
    np.fill_diagonal(R, 1.0)
    return repair_correlation(R)


def _fit(model_id, panel, cache):
    o, T = panel.spec.origin_index, panel.spec.n_steps
    steps, alpha = _window_steps(panel)
    D = len(panel)
    if model_id == "Naive":
        return NaiveModel(steps.copy())
    if model_id in ("MV.N", "MV.t"):
        return MvModel(fit_mv(steps, "normal" if model_id == "MV.N" else "t"), model_id)
    if model_id == "RW.N":
        sigma = float(np.sqrt(np.mean(steps ** 2)))
        if not sigma > 0:
            raise EstimationError("all in-sample differences are zero")
        return RandomWalkModel(sigma, np.inf, 1.0, T, model_id)
    if model_id == "RW.t":
        g = fit_t_gamlss(steps.ravel(), "const_sigma")
        return RandomWalkModel(float(g.sigma(np.ones((1, g.sigma_linear_coefs.size)))[0]),
                               g.nu, 1.0, T, model_id)
    if model_id == "RW.t.mix.D":
        pi = float(alpha.mean())
        if pi == 0.0:
            return RandomWalkModel(1.0, np.inf, 0.0, T, model_id)
        g = fit_t_gamlss(steps[alpha], "const_sigma")
        return RandomWalkModel(float(g.sigma(np.ones((1, g.sigma_linear_coefs.size)))[0]),
                               g.nu, pi, T, model_id)
    if model_id in ("LQR.Gauss", "LQR.ind"):
        def run():
            X = lqr_block(panel.diffs, panel.traded, panel.prices, o,
                          weekday_flags(panel.days), panel.fundamentals)
            targets = panel.prices[:, o + 1:o + 1 + T] - panel.prices[:, [o]]
            min_days = min(MIN_DAYS, D)
            if D < MIN_DAYS:
                log.info("quantile regression on %d < %d days", D, MIN_DAYS)
            return fit_lqr(X, targets, min_days=min_days), lqr_correlation(targets)
        lfit, R = _cached(cache, "lqr", run)
        if model_id == "LQR.Gauss":
            return LqrModel(lfit, "gaussian", R, model_id)
        return LqrModel(lfit, "independence", None, model_id)
    variant = MIX_VARIANT[model_id]
    d = _design(panel, cache)
    lf = _logit(panel, cache)
    m = d.traded
    g = fit_t_gamlss(d.target[m], variant, d.mu.values[m], d.sigma.values[m],
                     d.spline_price[m], d.spline_step[m])
    return MixModel(mix_components_from_fits(lf, g), T, model_id, {"logit": lf, "t": g})


def fit_model(model, panel, cache=None):
    """Fit ``model`` (an id or :class:`ModelSpec`) on the in-sample ``panel``.

    Estimation errors are re-raised with the model id prepended.
    """
    model_id = model.id if isinstance(model, ModelSpec) else ModelSpec(model).id
    try:
        return _fit(model_id, panel, cache)
    except IdtrajError as exc:
        exc.args = (f"{model_id}: {exc.args[0] if exc.args else exc}",) + exc.args[1:]
        raise


def true_model(truth, n_steps=31):
    """Simulator of a synthetic market's data-generating process (no clamping)."""
    return MixModel(truth.components(), n_steps, "truth")


__all__ = [
    "MODEL_IDS", "ModelSpec", "TargetState", "Ensemble", "FittedModel", "NaiveModel",
    "MvModel", "RandomWalkModel", "MixModel", "LqrModel", "fit_model", "true_model",
    "mix_components_from_fits", "lqr_correlation", "clamped_pi",
]
