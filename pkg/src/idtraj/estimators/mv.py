"""Zero-mean multivariate normal and t laws for whole difference trajectories."""

import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from ..errors import ContractError, EstimationError

log = logging.getLogger(__name__)

NU_GRID = (2.1, 2.5, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 15.0, 20.0, 30.0)
_EM_TOL = 1e-8
_EM_MAX = 500


@dataclass
class MvFit:
    """``cov`` is the covariance (not the t scatter); ``nu`` is ``None`` for the normal."""

    family: str
    cov: np.ndarray
    nu: float | None = None
    shrinkage: float = 0.0

    @property
    def mean(self):
        return np.zeros(self.cov.shape[0])

    @property
    def scatter(self):
        if self.nu is None:
            return self.cov
        return self.cov * (self.nu - 2.0) / self.nu

    def sample(self, rng, size):
        """``size`` draws of the difference vector, shape ``(size, T)``."""
        L = np.linalg.cholesky(self.scatter)
        z = rng.standard_normal((size, L.shape[0])) @ L.T
        if self.nu is None:
            return z
        w = rng.chisquare(self.nu, size) / self.nu
        return z / np.sqrt(w)[:, None]

    def to_dict(self):
        return {"kind": "mv", "family": self.family, "cov": self.cov.tolist(), "nu": self.nu,
                "shrinkage": self.shrinkage}

    @classmethod
    def from_dict(cls, d):
        return cls(d["family"], np.asarray(d["cov"], float), d["nu"], float(d["shrinkage"]))


def _is_pd(S):
    try:
        np.linalg.cholesky(S)
        return True
    except np.linalg.LinAlgError:
        return False


def shrink_to_diagonal(S, n_obs):
    """Shrink towards the diagonal until positive definite.

    Starts from a Ledoit-Wolf-style intensity ``min(1, T / n_obs)`` and
    doubles it as needed; zero variances are floored at a small fraction of
    the mean variance.  Returns ``(matrix, intensity)``.
    """
    T = S.shape[0]
    d = np.diag(S).copy()
    floor = 1e-8 * max(float(np.mean(d)), 1e-300)
    d = np.maximum(d, floor)
    target = np.diag(d)
    delta = min(1.0, T / max(n_obs, 1)) if not _is_pd(S) else 0.0
    delta = max(delta, 1e-6) if not _is_pd(S) else 0.0
    while delta < 1.0:
        cand = (1 - delta) * S + delta * target
        if _is_pd(cand):
            return cand, delta
        delta = min(1.0, 2 * delta)
    return target, 1.0


def _t_loglik(X, scatter, nu):
    n, T = X.shape
    L = np.linalg.cholesky(scatter)
    z = np.linalg.solve(L, X.T)
    q = np.sum(z * z, axis=0)
    logdet = 2 * np.sum(np.log(np.diag(L)))
    return float(n * (gammaln((nu + T) / 2) - gammaln(nu / 2) - 0.5 * T * np.log(nu * np.pi))
                 - 0.5 * n * logdet - 0.5 * (nu + T) * np.sum(np.log1p(q / nu)))


def _em_scatter(X, nu, start):
    """EM for the zero-mean t scatter matrix at fixed ``nu``."""
    n, T = X.shape
    S = start
    for _ in range(_EM_MAX):
        L = np.linalg.cholesky(S)
        z = np.linalg.solve(L, X.T)
        q = np.sum(z * z, axis=0)
        w = (nu + T) / (nu + q)
        new = (X.T * w) @ X / n
        if not _is_pd(new):
            new, _ = shrink_to_diagonal(new, n)
        change = np.max(np.abs(new - S)) / max(np.max(np.abs(S)), 1e-300)
        S = new
        if change < _EM_TOL:
            break
    return S


def fit_mv(diffs, family="normal", nu_grid=NU_GRID):
    """Fit a zero-mean multivariate law to ``(D, T)`` difference trajectories.

    ``normal`` uses the zero-mean sample covariance ``X'X / D``.  ``t``
    profiles the likelihood over ``nu_grid`` with an EM scatter estimate at
    each value and reports the covariance ``nu / (nu - 2) * scatter``.
    Singular estimates are shrunk towards their diagonal (with a warning).
    """
    if family not in ("normal", "t"):
        raise ContractError(f"unknown family {family!r}")
    X = np.asarray(diffs, float)
    if X.ndim != 2:
        raise ContractError("expected a (days, steps) matrix")
    n, T = X.shape
    if not np.all(np.isfinite(X)):
        raise EstimationError("non-finite differences")
    if not np.any(X != 0):
        raise EstimationError("all differences are zero; covariance is degenerate")
    S = X.T @ X / n
    shrink = 0.0
    if not _is_pd(S):
        warnings.warn("singular sample covariance; shrinking towards the diagonal")
        S, shrink = shrink_to_diagonal(S, n)
    if family == "normal":
        return MvFit("normal", S, None, shrink)
    best = None
    for nu in nu_grid:
        scatter = _em_scatter(X, nu, S * (nu - 2) / nu)
        ll = _t_loglik(X, scatter, nu)
        if best is None or ll > best[0]:
            best = (ll, nu, scatter)
    _, nu, scatter = best
    log.debug("multivariate t: nu=%s", nu)
    return MvFit("t", scatter * nu / (nu - 2), float(nu), shrink)
