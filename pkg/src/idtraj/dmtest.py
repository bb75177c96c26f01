"""Multivariate Diebold-Mariano comparison of daily loss vectors."""

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import ndtr

from .errors import ContractError


@dataclass(frozen=True)
class DmResult:
    """One-sided p-values; ``p_a_better`` tests ``E[L_A - L_B] < 0``."""

    p_a_better: float
    p_b_better: float
    statistic: float
    degenerate: bool = False
    lag: int = 0
    n: int = 0


def default_lag(n):
    """Newey-West truncation ``floor(n^(1/3))``."""
    return int(math.floor(n ** (1.0 / 3.0) + 1e-12))


def newey_west_variance(x, lag):
    """Bartlett-weighted long-run variance of a demeaned series."""
    x = np.asarray(x, float)
    n = x.size
    e = x - x.mean()
    v = float(e @ e) / n
    for k in range(1, min(lag, n - 1) + 1):
        v += 2.0 * (1.0 - k / (lag + 1.0)) * float(e[k:] @ e[:-k]) / n
    return v


def dm_test(loss_a, loss_b, lag=None, min_days=30):
    """Compare two ``N x S`` loss panels through ``Delta_d = |L_A^d|_1 - |L_B^d|_1``.

    Parameters
    ----------
    loss_a, loss_b : array_like, shape (N, S) or (N,)
        Non-negative daily losses per product.
    lag : int, optional
        Newey-West lag; ``floor(N^(1/3))`` by default, 0 for the plain
        variance.

    Returns
    -------
    DmResult
        With a zero long-run variance the result is flagged degenerate and
        both p-values are NaN.
    """
    a = np.asarray(loss_a, float)
    b = np.asarray(loss_b, float)
    if a.ndim == 1:
        a = a[:, None]
    if b.ndim == 1:
        b = b[:, None]
    if a.shape != b.shape:
        raise ContractError("loss panels are not aligned")
    n = a.shape[0]
    if n < min_days:
        raise ContractError(f"need at least {min_days} days, got {n}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ContractError("losses must be finite")
    if np.any(a < 0) or np.any(b < 0):
        raise ContractError("losses must be non-negative")
    delta = a.sum(axis=1) - b.sum(axis=1)
    lag = default_lag(n) if lag is None else int(lag)
    var = newey_west_variance(delta, lag)
    if not var > 0:
        return DmResult(float("nan"), float("nan"), float("nan"), True, lag, n)
    stat = float(delta.mean() / math.sqrt(var / n))
    # both p-values come from the same tail probability, so they sum to one
    # exactly and swapping the arguments swaps them exactly
    small = float(ndtr(-abs(stat)))
    large = 1.0 - small
    p_a = small if stat < 0 else large
    return DmResult(p_a, 1.0 - p_a if stat < 0 else small, stat, False, lag, n)


def dm_matrix(losses, models, lag=None):
    """Pairwise p-values: entry ``[row][col]`` is the p-value that ``col`` beats ``row``.

    ``losses`` maps model id to its ``N x S`` loss panel.  The diagonal and
    degenerate pairs are NaN.
    """
    k = len(models)
    out = np.full((k, k), np.nan)
    for i, row in enumerate(models):
        for j, col in enumerate(models):
            if i == j:
                continue
            res = dm_test(losses[col], losses[row], lag)
            out[i, j] = res.p_a_better
    return out


def write_dm_matrix(path, models, matrix):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["worse\\better"] + list(models))
        for i, m in enumerate(models):
            wr.writerow([m] + ["" if np.isnan(v) else format(float(v), ".17g") for v in matrix[i]])
