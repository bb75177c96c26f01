"""Recursive simulation of zero-inflated t price paths.

One routine drives both the synthetic market (rows are days) and the
ensemble simulator of the fitted mixture models (rows are members): at each
step it rebuilds the regressors from every row's own history, draws the trade
indicator, then the price difference, and accumulates the price.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .designmatrix import logit_block, mu_block, sigma_block
from .errors import ConfigError


@dataclass
class MixComponents:
    """Parameter maps of a zero-inflated t model.

    ``pi(logit_rows)``, ``mu(mu_rows)`` and ``sigma(sigma_rows, p_prev, t)``
    receive raw (unstandardised) regressor blocks and return one value per
    row; ``nu`` is constant.
    """

    pi: Callable
    mu: Callable
    sigma: Callable
    nu: float


def simulate_paths(components, diffs, traded, prices, weekday, fundamentals,
                   start_col, step_of, n_steps, rng):
    """Fill columns ``start_col:`` of the history arrays in place.

    ``step_of(col)`` maps a column to the 1-based step fed to the time-to-
    maturity regressors.  Returns the drawn differences, shape ``(n, n_cols)``.
    """
    n, width = prices.shape
    drawn = np.zeros((n, width - start_col))
    nu = components.nu
    for col in range(start_col, width):
        t = step_of(col)
        pi = components.pi(logit_block(diffs, traded, col, weekday, fundamentals, t, n_steps))
        mu = components.mu(mu_block(diffs, col))
        lin, p_prev = sigma_block(diffs, traded, prices, col, weekday, fundamentals)
        sigma = components.sigma(lin, p_prev, t)
        if not np.all(np.isfinite(sigma)) or np.any(sigma <= 0):
            raise ConfigError(f"scale predictor produced invalid sigma at step {t}")
        u = rng.random(n)
        z = rng.standard_t(nu, size=n) if np.isfinite(nu) else rng.standard_normal(n)
        alpha = u < pi
        scale = sigma * np.sqrt((nu - 2.0) / nu) if np.isfinite(nu) else sigma
        step = np.where(alpha, mu + scale * z, 0.0)
        prices[:, col] = prices[:, col - 1] + step
        diffs[:, col] = prices[:, col] - prices[:, col - 1]
        traded[:, col] = alpha
        drawn[:, col - start_col] = step
    return drawn


__all__ = ["MixComponents", "simulate_paths"]
