"""Lasso-penalised logistic regression with a BIC-selected penalty."""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, log_expit

from ..designmatrix import FeatureMatrix, StandardizationStats
from ..errors import ContractError, ConvergenceError, EstimationError
from ..kernels import lasso_cd_gram

log = logging.getLogger(__name__)

MAX_PASSES = 10_000
ETA_CLAMP = 30.0
_WEIGHT_FLOOR = 1e-5


@dataclass
class LogitLassoFit:
    """Coefficients on the standardised scale plus the selection path.

    ``beta`` multiplies standardised columns; the intercept column is left
    unscaled and unpenalised.
    """

    beta: np.ndarray
    names: tuple
    lambda_selected: float
    lambdas: np.ndarray
    bic_path: np.ndarray
    df_path: np.ndarray
    standardization: StandardizationStats | None
    n_obs: int

    def raw_coefficients(self):
        """``(coef, offset)`` such that ``raw_rows @ coef + offset`` is the linear predictor."""
        st = self.standardization
        if st is None:
            return self.beta.copy(), 0.0
        coef = np.where(st.scaled, self.beta / st.sd, self.beta)
        offset = -float(np.sum(np.where(st.scaled, self.beta * st.mean / st.sd, 0.0)))
        return coef, offset

    def to_dict(self):
        return {
            "kind": "logit_lasso",
            "beta": self.beta.tolist(),
            "names": list(self.names),
            "lambda_selected": self.lambda_selected,
            "lambdas": self.lambdas.tolist(),
            "bic_path": self.bic_path.tolist(),
            "df_path": self.df_path.tolist(),
            "standardization": None if self.standardization is None else self.standardization.to_dict(),
            "n_obs": self.n_obs,
        }

    @classmethod
    def from_dict(cls, d):
        st = d.get("standardization")
        return cls(np.asarray(d["beta"], float), tuple(d["names"]), float(d["lambda_selected"]),
                   np.asarray(d["lambdas"], float), np.asarray(d["bic_path"], float),
                   np.asarray(d["df_path"], int),
                   None if st is None else StandardizationStats.from_dict(st), int(d["n_obs"]))


def _loglik(X, y, beta):
    eta = X @ beta
    return float(np.sum(y * log_expit(eta) + (1 - y) * log_expit(-eta)))


def _objective(X, y, beta, pen):
    return -_loglik(X, y, beta) / X.shape[0] + float(np.sum(pen * np.abs(beta)))


def kkt_violation(X, y, beta, pen):
    """Largest violation of the lasso optimality conditions (scaled objective)."""
    grad = -X.T @ (y - expit(X @ beta)) / X.shape[0]
    nz = beta != 0
    v_nz = np.abs(grad[nz] + pen[nz] * np.sign(beta[nz]))
    v_z = np.maximum(np.abs(grad[~nz]) - pen[~nz], 0.0)
    return float(max(v_nz.max(initial=0.0), v_z.max(initial=0.0)))


def _solve(X, y, beta, pen, passes_left):
    """Proximal Newton: quadratic majorisation, coordinate descent, backtracking."""
    n = X.shape[0]
    obj = _objective(X, y, beta, pen)
    passes = 0
    while passes < passes_left:
        p = expit(X @ beta)
        w = np.maximum(p * (1 - p), _WEIGHT_FLOOR)
        G = (X.T * w) @ X / n
        c = G @ beta + X.T @ (y - p) / n
        new, sweeps, ok = lasso_cd_gram(G, c, beta, pen, 1e-12, passes_left - passes)
        passes += sweeps
        if not ok:
            break
        direction = new - beta
        step = 1.0
        cand, cobj = new, _objective(X, y, new, pen)
        while cobj > obj and step > 1e-10:
            step *= 0.5
            cand = beta + step * direction
            cobj = _objective(X, y, cand, pen)
        if cobj > obj:
            break
        moved = np.max(np.abs(cand - beta), initial=0.0)
        beta, obj = cand, cobj
        if kkt_violation(X, y, beta, pen) < 1e-8 or moved < 1e-13:
            break
    return beta, passes, kkt_violation(X, y, beta, pen) < 1e-6


def fit_logit_lasso(X, y, grid_size=100, lambdas=None, penalize=None):
    """Fit the lasso path and keep the BIC-minimising penalty.

    Parameters
    ----------
    X : FeatureMatrix or ndarray
        Standardised design.  A column named ``intercept`` (or, for bare
        arrays, the first column when it is constant one) is unpenalised.
    y : array_like of {0, 1}
    grid_size : int
        Number of penalties on the exponential grid from ``lambda_max`` down
        to ``lambda_max * 1e-4``.
    lambdas : sequence of float, optional
        Explicit penalty path (overrides the grid); ``[0.0]`` gives the
        unpenalised maximum-likelihood fit.
    penalize : ndarray of bool, optional
        Which coefficients carry the penalty.

    Returns
    -------
    LogitLassoFit
    """
    if isinstance(X, FeatureMatrix):
        names, st, Xv = X.names, X.standardization, X.values
    else:
        Xv = np.atleast_2d(np.asarray(X, float))
        names, st = tuple(f"x{j}" for j in range(Xv.shape[1])), None
        if np.all(Xv[:, 0] == 1.0):
            names = ("intercept",) + names[1:]
    y = np.asarray(y, float).ravel()
    n, p = Xv.shape
    if y.shape[0] != n:
        raise ContractError("labels and design rows differ in length")
    if not np.all((y == 0) | (y == 1)):
        raise EstimationError("labels must be 0/1")
    ybar = y.mean()
    if ybar == 0 or ybar == 1:
        raise EstimationError("labels are all equal; the trade probability is not identified")
    if penalize is None:
        penalize = np.array([nm != "intercept" for nm in names])
    penalize = np.asarray(penalize, bool)
    has_int = "intercept" in names
    beta = np.zeros(p)
    if has_int:
        beta[names.index("intercept")] = np.log(ybar / (1 - ybar))
    # null-model gradient gives the smallest penalty that zeros every penalised coefficient
    grad0 = np.abs(Xv.T @ (y - expit(Xv @ beta))) / n
    lam_max = float(np.max(grad0[penalize], initial=0.0))
    if lambdas is None:
        if lam_max <= 0:
            lambdas = np.zeros(1)
        else:
            lambdas = lam_max * np.logspace(0, -4, grid_size)
    lambdas = np.asarray(lambdas, float)
    if not has_int and lambdas.size and lam_max > 0:
        beta[:] = 0.0

    bics, dfs, betas = [], [], []
    passes_used = 0
    for lam in lambdas:
        pen = lam * penalize
        beta, passes, ok = _solve(Xv, y, beta, pen, MAX_PASSES)
        passes_used += passes
        if not ok or not np.all(np.isfinite(beta)):
            raise ConvergenceError(
                f"logit lasso did not converge at lambda={lam:.3g}",
                {"lambda": float(lam), "passes": passes,
                 "kkt": kkt_violation(Xv, y, beta, pen)},
            )
        k = int(np.count_nonzero(beta))
        bics.append(-2 * _loglik(Xv, y, beta) + k * np.log(n))
        dfs.append(k)
        betas.append(beta.copy())
    best = int(np.argmin(bics))
    log.debug("logit lasso: %d lambdas, best %d (df=%d), %d CD passes",
              len(lambdas), best, dfs[best], passes_used)
    return LogitLassoFit(betas[best], tuple(names), float(lambdas[best]), lambdas,
                         np.asarray(bics), np.asarray(dfs, int), st, n)


def linear_predictor(fit, rows, names=None):
    """``rows @ beta`` for standardised rows, checking the feature layout."""
    if isinstance(rows, FeatureMatrix):
        names, rows = rows.names, rows.values
    if names is not None and tuple(names) != tuple(fit.names):
        raise ContractError("feature names differ from the fitted model")
    rows = np.asarray(rows, float)
    if rows.shape[-1] != fit.beta.shape[0]:
        raise ContractError(f"expected {fit.beta.shape[0]} features, got {rows.shape[-1]}")
    return rows @ fit.beta


def predict_pi(fit, rows, names=None):
    """Trade probability for standardised rows (linear predictor clamped to +-30).

    A single 1-d row gives a float, a 2-d block an array.
    """
    eta = np.clip(linear_predictor(fit, rows, names), -ETA_CLAMP, ETA_CLAMP)
    return float(expit(eta)) if np.ndim(eta) == 0 else expit(eta)
