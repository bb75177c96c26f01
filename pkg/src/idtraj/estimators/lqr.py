"""Linear quantile regression per horizon and quantile level, and the
monotone marginal CDFs built from its fitted quantiles."""

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from ..designmatrix import LQR_FEATURE_NAMES
from ..errors import ContractError, EstimationError, PreconditionError
from ..statcore.hyman import MonotoneCdf

log = logging.getLogger(__name__)

TAUS = np.round(np.arange(1, 100) / 100.0, 2)
MIN_DAYS = 150
SMOOTHING = (1e-4, 1e-5, 1e-6)
_JITTER = 1e-8
_SEPARATION = 1e-9
_PERTURB = 1e-9


def pinball_loss(residuals, tau):
    """Mean check loss ``rho_tau(r) = r * (tau - 1{r < 0})`` (columns may carry their own tau)."""
    r = np.asarray(residuals, float)
    return np.mean(r * (tau - (r < 0)), axis=0)


@dataclass
class LqrFit:
    """Raw-scale quantile coefficients, shape ``(n_steps, n_taus, n_features)``."""

    coefs: np.ndarray
    taus: np.ndarray
    support_min: np.ndarray
    support_max: np.ndarray
    names: tuple = LQR_FEATURE_NAMES

    @property
    def n_steps(self):
        return self.coefs.shape[0]

    def quantiles(self, row, t=None):
        """Fitted quantiles for one regressor row: all steps ``(T, n_taus)`` or step ``t``."""
        row = np.asarray(row, float)
        if row.shape[-1] != self.coefs.shape[2]:
            raise ContractError(f"expected {self.coefs.shape[2]} regressors")
        if t is None:
            return self.coefs @ row
        return self.coefs[t - 1] @ row

    def to_dict(self):
        return {"kind": "lqr", "coefs": self.coefs.tolist(), "taus": self.taus.tolist(),
                "support_min": self.support_min.tolist(), "support_max": self.support_max.tolist(),
                "names": list(self.names)}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["coefs"], float), np.asarray(d["taus"], float),
                   np.asarray(d["support_min"], float), np.asarray(d["support_max"], float),
                   tuple(d["names"]))


def _start_basis(X, r):
    """Rows with the smallest |residual| forming a nonsingular square system."""
    p = X.shape[1]
    chosen = []
    Q = np.zeros((0, p))
    for i in np.argsort(np.abs(r), kind="stable"):
        x = X[i] - Q.T @ (Q @ X[i])
        nrm = np.linalg.norm(x)
        if nrm > 1e-9 * (1 + np.linalg.norm(X[i])):
            chosen.append(i)
            Q = np.vstack([Q, x / nrm])
            if len(chosen) == p:
                return np.array(chosen)
    return None


def _simplex_polish(X, y, tau, basis, max_pivots=1000):
    """Exact pinball minimiser by basis exchange from the vertex ``basis``.

    Walks along descent edges (one basis row leaves, the row at the
    line-search minimum enters) until the subgradient optimality condition
    holds.  Returns ``(beta, basis)`` or ``None`` when the walk breaks down
    or the pivot cap is hit.
    """
    n, p = X.shape
    if basis is None:
        return None
    for _ in range(max_pivots):
        XB = X[basis]
        try:
            b = np.linalg.solve(XB, y[basis])
        except np.linalg.LinAlgError:
            return None
        r = y - X @ b
        nonb = np.ones(n, bool)
        nonb[basis] = False
        psi = tau - (r[nonb] < 0)
        v = np.linalg.solve(XB.T, -(X[nonb].T @ psi))
        over, under = v - tau, (tau - 1) - v
        viol = np.maximum(over, under)
        j = int(np.argmax(viol))
        if viol[j] <= 1e-10:
            return b, basis
        sign = 1.0 if over[j] > 0 else -1.0
        slope = -(viol[j])
        # direction keeping the other basis residuals at zero, moving row j off by `sign`
        e = np.zeros(p)
        e[j] = -sign
        d = np.linalg.solve(XB, e)
        idx = np.flatnonzero(nonb)
        xd = X[idx] @ d
        with np.errstate(divide="ignore", invalid="ignore"):
            step = r[idx] / xd
        ok = (np.abs(xd) > 1e-14) & (step >= -1e-14)
        if not np.any(ok):
            return None
        cand, steps, gains = idx[ok], step[ok], np.abs(xd[ok])
        order = np.argsort(steps, kind="stable")
        cum = slope + np.cumsum(gains[order])
        k = int(np.searchsorted(cum >= 0, True))
        if k >= order.size:
            return None
        basis = basis.copy()
        basis[j] = cand[order[k]]
    return None


def _irls_batch(X, y, taus, beta, h, max_iter=200, tol=1e-10):
    """Majorise-minimise the smoothed check loss for all ``taus`` at once.

    ``beta`` has shape ``(n_taus, p)``.  Uses the quadratic bound of
    ``sqrt(r^2 + h^2)``; each iteration solves
    ``X'WX b = X'Wy + (tau - 1/2) X'1`` per quantile level.
    """
    ridge = _JITTER * np.eye(X.shape[1])
    xsum = X.sum(axis=0)
    Xt = X.T
    for _ in range(max_iter):
        r = y[:, None] - X @ beta.T  # (n, k)
        w = 0.5 / np.sqrt(r * r + h * h)
        G = (Xt[None, :, :] * w.T[:, None, :]) @ X + ridge
        rhs = (w.T @ (X * y[:, None])) + (taus - 0.5)[:, None] * xsum
        new = np.linalg.solve(G, rhs[..., None])[..., 0]
        move = np.max(np.abs(new - beta))
        beta = new
        if move < tol * (1 + np.max(np.abs(beta))):
            break
    return beta


def quantile_regression(X, y, taus, exact=True):
    """Coefficients ``(n_taus, p)`` minimising the pinball loss for each tau.

    Smoothed-check IRLS (half-width shrinking from the residual scale)
    locates the median fit.  With ``exact`` the median is finished by basis
    exchange to an optimal vertex, and the other levels are walked to in
    order, each starting from its neighbour's optimal basis.  Levels where
    the exchange breaks down fall back to the fine ``SMOOTHING`` stages of
    IRLS.
    """
    X = np.asarray(X, float)
    y_orig = np.asarray(y, float)
    taus = np.atleast_1d(np.asarray(taus, float))
    if np.ptp(y_orig) == 0 and np.all(X[:, 0] == 1.0):
        beta = np.zeros((taus.size, X.shape[1]))
        beta[:, 0] = y_orig[0]
        return beta
    y = y_orig
    if exact:
        # tied responses make the vertex walk degenerate; a tiny deterministic
        # perturbation breaks the ties without measurably changing the loss
        n = y.size
        y = y + _PERTURB * (1.0 + np.max(np.abs(y))) * (((np.arange(n) * 0.6180339887498949) % 1.0) - 0.5)
    beta0 = np.linalg.lstsq(X, y, rcond=None)[0]
    scale = float(np.median(np.abs(y - X @ beta0))) or 1.0
    beta = np.tile(beta0, (taus.size, 1))
    pending = np.arange(taus.size)
    if exact:
        mid = int(np.argmin(np.abs(taus - 0.5)))
        b = beta0[None, :]
        for h in scale * 10.0 ** -np.arange(0, 3):
            b = _irls_batch(X, y, taus[mid:mid + 1], b, max(h, SMOOTHING[0]), max_iter=20)
        start = _start_basis(X, y - X @ b[0])
        left = []
        for order in (range(mid, taus.size), range(mid - 1, -1, -1)):
            basis = start
            for k in order:
                res = _simplex_polish(X, y, taus[k], basis)
                if res is None:
                    left.append(k)
                    continue
                beta[k], basis = res
                if k == mid:
                    start = basis
        pending = np.array(sorted(left), dtype=int)
    if pending.size:
        y = y_orig
        for h in [h for h in scale * 10.0 ** -np.arange(0, 3) if h > SMOOTHING[0]] + list(SMOOTHING):
            beta[pending] = _irls_batch(X, y, taus[pending], beta[pending], h)
    return beta


def _scaled(X):
    """Column scaling (intercept untouched) for conditioning; returns ``(Xs, centre, scale)``."""
    centre = X.mean(axis=0)
    scale = X.std(axis=0)
    const = scale == 0
    centre = np.where(const, 0.0, centre)
    scale = np.where(const, 1.0, scale)
    return (X - centre) / scale, centre, scale, const


def fit_lqr(X, targets, taus=TAUS, min_days=MIN_DAYS, exact=True):
    """Fit one linear quantile regression per step and quantile level.

    Parameters
    ----------
    X : array_like, shape (n_days, p)
        Origin-time regressors, intercept first.
    targets : array_like, shape (n_days, n_steps)
        Price change from the origin to each step.
    min_days : int
        Minimum number of in-sample days.

    Returns
    -------
    LqrFit
    """
    X = np.asarray(X, float)
    Y = np.asarray(targets, float)
    if Y.ndim == 1:
        Y = Y[:, None]
    n, p = X.shape
    if n < min_days:
        raise PreconditionError(f"quantile regression needs at least {min_days} days, got {n}")
    if Y.shape[0] != n:
        raise ContractError("regressor and target rows differ")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise EstimationError("non-finite regressors or targets")
    Xs, centre, scale, const = _scaled(X)
    # constant non-intercept columns cannot be separated from the intercept
    keep = ~const
    keep[0] = True
    Xk = Xs[:, keep]
    if np.linalg.matrix_rank(Xk) < Xk.shape[1]:
        warnings.warn("rank-deficient quantile-regression design; ridge jitter applied")
    taus = np.asarray(taus, float)
    coefs = np.zeros((Y.shape[1], taus.size, p))
    for t in range(Y.shape[1]):
        b = np.zeros((taus.size, p))
        b[:, keep] = quantile_regression(Xk, Y[:, t], taus, exact=exact)
        # back to raw regressors: x_s = (x - c) / s
        raw = np.where(keep, b / scale, 0.0)
        raw[:, 0] = b[:, 0] - np.sum(np.where(keep, b * centre / scale, 0.0)[:, 1:], axis=1)
        coefs[t] = raw
    return LqrFit(coefs, taus, Y.min(axis=0), Y.max(axis=0))


def build_marginal_cdf(fit, row, t):
    """Monotone CDF of the step-``t`` price change for one regressor row.

    Fitted quantiles are sorted (rearrangement), those outside the in-sample
    support are dropped, the support end points are attached with
    probabilities 0 and 1, and a Hyman-filtered cubic spline is fitted.
    """
    q = np.sort(fit.quantiles(row, t))
    lo, hi = float(fit.support_min[t - 1]), float(fit.support_max[t - 1])
    inside = (q > lo) & (q < hi)
    if not np.any(inside):
        if lo == hi:
            return MonotoneCdf(np.array([lo, lo + _SEPARATION]), np.array([0.0, 1.0]))
        raise EstimationError(f"all fitted quantiles of step {t} lie outside the support")
    xs = np.concatenate([[lo], q[inside], [hi]])
    ys = np.concatenate([[0.0], fit.taus[inside], [1.0]])
    for i in range(1, xs.size):
        if xs[i] < xs[i - 1] + _SEPARATION:
            xs[i] = xs[i - 1] + _SEPARATION
    return MonotoneCdf(xs, ys)
