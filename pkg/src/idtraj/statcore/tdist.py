"""Three-parameter Student t in mean / standard-deviation / shape form, and
its zero-inflated mixture with a point mass at zero.

``X = mu + sigma * sqrt((nu - 2) / nu) * T_nu`` so that ``sd(X) == sigma``.
"""

from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from ..errors import DomainError


def _check(sigma, nu):
    if np.any(~(np.asarray(sigma) > 0)):
        raise DomainError("sigma must be > 0")
    if np.any(~(np.asarray(nu) > 2)):
        raise DomainError("nu must be > 2")


def t3_scale(sigma, nu):
    """Scale of the underlying standard t given the standard deviation."""
    nu = np.asarray(nu, dtype=float)
    return np.asarray(sigma, dtype=float) * np.sqrt((nu - 2.0) / nu)


def t3_logpdf(x, mu, sigma, nu):
    _check(sigma, nu)
    nu = np.asarray(nu, dtype=float)
    s = t3_scale(sigma, nu)
    z = (np.asarray(x, dtype=float) - mu) / s
    return (
        special.gammaln((nu + 1.0) / 2.0)
        - special.gammaln(nu / 2.0)
        - 0.5 * np.log(nu * np.pi)
        - np.log(s)
        - (nu + 1.0) / 2.0 * np.log1p(z * z / nu)
    )


def t3_density(x, mu, sigma, nu):
    return np.exp(t3_logpdf(x, mu, sigma, nu))


def t3_cdf(x, mu, sigma, nu):
    _check(sigma, nu)
    return stats.t.cdf(x, df=nu, loc=mu, scale=t3_scale(sigma, nu))


def t3_quantile(q, mu, sigma, nu):
    _check(sigma, nu)
    return stats.t.ppf(q, df=nu, loc=mu, scale=t3_scale(sigma, nu))


def t3_sample(mu, sigma, nu, rng, size=None):
    _check(sigma, nu)
    return mu + t3_scale(sigma, nu) * rng.standard_t(nu, size=size)


@dataclass(frozen=True)
class ZeroInflatedTParams:
    """Parameters of ``(1 - pi) * delta_0 + pi * t3(mu, sigma, nu)``."""

    pi: float
    mu: float
    sigma: float
    nu: float

    def __post_init__(self):
        if not 0.0 <= self.pi <= 1.0:
            raise DomainError(f"pi must lie in [0, 1], got {self.pi}")
        _check(self.sigma, self.nu)


def zit_sample(params, rng, size=None):
    """Draw ``(alpha, diff)`` pairs from the zero-inflated t.

    ``alpha`` is the Bernoulli trade indicator; ``diff`` is exactly 0 whenever
    ``alpha`` is 0.
    """
    alpha = np.asarray(rng.random(size) < params.pi, dtype=np.int8)
    draw = t3_sample(params.mu, params.sigma, params.nu, rng, size=size)
    diff = np.where(alpha == 1, draw, 0.0)
    if size is None:
        return int(alpha), float(diff)
    return alpha, diff
