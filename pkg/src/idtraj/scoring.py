"""Scores of trajectory ensembles against realised price paths.

Marginal measures (CRPS via pinball losses, MAE, RMSE, coverage) are computed
from the column-sorted ensemble, so any within-column permutation of the
members (e.g. a copula reordering) leaves them bit-identical.
"""

import logging
import warnings

import numpy as np

from .errors import ContractError
from .kernels import energy_terms, variogram_sum

log = logging.getLogger(__name__)

TAUS = np.round(np.arange(1, 100) / 100.0, 2)
COVERAGE_LEVELS = (0.5, 0.9, 0.99)
DSS_EPS = 1e-8
DSS_EPS_MAX = 1e-4


def _ens(ens, obs=None):
    ens = np.atleast_2d(np.asarray(ens, float))
    if obs is not None:
        obs = np.atleast_1d(np.asarray(obs, float))
        if ens.shape[1] != obs.shape[0]:
            raise ContractError(f"ensemble has {ens.shape[1]} steps, observation {obs.shape[0]}")
    return ens, obs


def energy_score(obs, ens):
    """``(ES, ED, EI)`` with ``ES = ED - EI / 2``.

    Examples
    --------
    >>> energy_score([1.0], [[0.0], [2.0]])
    (0.0, 1.0, 2.0)
    """
    ens, obs = _ens(ens, obs)
    if ens.shape[0] < 2:
        raise ContractError("energy score needs at least two members")
    ed, ei = energy_terms(obs, ens)
    return ed - ei / 2.0, ed, ei


def pinball(obs, q, tau):
    """Pinball loss of quantile forecast ``q`` at level ``tau``."""
    diff = np.asarray(obs, float) - np.asarray(q, float)
    return np.where(diff >= 0, tau * diff, (tau - 1) * diff)


def empirical_quantiles(members, taus=TAUS, sorted_=False):
    """Type-7 (linear interpolation) quantiles of each column, shape ``(len(taus), T)``."""
    x = np.asarray(members, float)
    if x.ndim == 1:
        x = x[:, None]
    if not sorted_:
        x = np.sort(x, axis=0)
    m = x.shape[0]
    h = (m - 1) * np.asarray(taus, float)
    lo = np.floor(h).astype(int)
    hi = np.minimum(lo + 1, m - 1)
    frac = (h - lo)[:, None]
    return x[lo] + frac * (x[hi] - x[lo])


def crps_pinball(obs, members, taus=TAUS):
    """CRPS approximated by the mean pinball loss over ``taus`` (one value per column)."""
    obs = np.atleast_1d(np.asarray(obs, float))
    q = empirical_quantiles(np.asarray(members, float).reshape(-1, obs.size), taus)
    out = pinball(obs[None, :], q, np.asarray(taus)[:, None]).mean(axis=0)
    return float(out[0]) if out.size == 1 else out


def variogram_score(obs, ens):
    """Order-1 variogram score, normalised by ``T^2``."""
    ens, obs = _ens(ens, obs)
    return variogram_sum(obs, ens)


def dawid_sebastiani(obs, ens):
    """``(score, degenerate)`` from the ensemble mean and sample covariance.

    The covariance gets ``eps * trace / T`` added to its diagonal, with
    ``eps`` escalating tenfold from 1e-8 to 1e-4 until a Cholesky factor
    exists; beyond that the score is flagged degenerate and returned as NaN.
    """
    ens, obs = _ens(ens, obs)
    m, t = ens.shape
    if m < t + 1:
        raise ContractError(f"Dawid-Sebastiani score needs at least {t + 1} members")
    mu = ens.mean(axis=0)
    S = np.cov(ens, rowvar=False, ddof=1).reshape(t, t)
    scale = np.trace(S) / t
    if not scale > 0:
        return float("nan"), True
    eps = DSS_EPS
    while eps <= DSS_EPS_MAX * (1 + 1e-12):
        try:
            L = np.linalg.cholesky(S + eps * scale * np.eye(t))
            break
        except np.linalg.LinAlgError:
            eps *= 10
    else:
        return float("nan"), True
    z = np.linalg.solve(L, obs - mu)
    return float(2 * np.sum(np.log(np.diag(L))) + z @ z), False


def coverage_hits(obs, members, level, sorted_=False):
    """1 where ``obs`` lies strictly inside the central ``level`` interval, per column."""
    obs = np.atleast_1d(np.asarray(obs, float))
    q = empirical_quantiles(np.asarray(members, float).reshape(-1, obs.size),
                            [(1 - level) / 2, (1 + level) / 2], sorted_)
    out = ((obs > q[0]) & (obs < q[1])).astype(int)
    return int(out[0]) if out.size == 1 else out


def score_ensemble(obs, ens):
    """Every per-day measure for one ensemble.

    Returns a dict with scalars ``es, ed, ei, vs, dss, dss_degenerate, crps,
    mae, mse, cov50, cov90, cov99`` (step averages where applicable) and
    arrays ``crps_t`` (per step) and ``pb`` (per quantile level, averaged
    over steps).
    """
    ens, obs = _ens(ens, obs)
    srt = np.sort(ens, axis=0)
    es, ed, ei = energy_score(obs, ens)
    dss, degenerate = dawid_sebastiani(obs, ens) if ens.shape[0] > ens.shape[1] else (float("nan"), True)
    q = empirical_quantiles(srt, TAUS, sorted_=True)
    pb = pinball(obs[None, :], q, TAUS[:, None])
    crps_t = pb.mean(axis=0)
    median = empirical_quantiles(srt, [0.5], sorted_=True)[0]
    mean = srt.mean(axis=0)
    out = {
        "es": es, "ed": ed, "ei": ei,
        "vs": variogram_score(obs, ens),
        "dss": dss, "dss_degenerate": degenerate,
        "crps": float(crps_t.mean()),
        "mae": float(np.mean(np.abs(obs - median))),
        "mse": float(np.mean((obs - mean) ** 2)),
        "crps_t": crps_t,
        "pb": pb.mean(axis=1),
    }
    for level in COVERAGE_LEVELS:
        out[f"cov{int(round(level * 100))}"] = float(coverage_hits(obs, srt, level, sorted_=True).mean())
    return out


SUMMARY_COLUMNS = ("model", "n", "es", "ed", "ei", "vs", "dss", "crps", "mae", "rmse",
                   "cov50", "cov90", "cov99", "dss_degenerate", "failures")


def summarize(records, failures=None):
    """Model-level averages (Table-2 shape) from per-day score dicts.

    ``records`` maps model id to a list of score dicts.  RMSE is the square
    root of the mean squared error over all days and steps; DSS averages
    only non-degenerate days.
    """
    failures = failures or {}
    rows = []
    for model, recs in records.items():
        if not recs:
            rows.append({"model": model, "n": 0, "failures": failures.get(model, 0)})
            continue

        def mean(key):
            return float(np.mean([r[key] for r in recs]))

        good = [r["dss"] for r in recs if not r["dss_degenerate"]]
        if len(good) < len(recs):
            warnings.warn(f"{model}: {len(recs) - len(good)} degenerate DSS days excluded")
        rows.append({
            "model": model, "n": len(recs),
            "es": mean("es"), "ed": mean("ed"), "ei": mean("ei"), "vs": mean("vs"),
            "dss": float(np.mean(good)) if good else float("nan"),
            "crps": mean("crps"), "mae": mean("mae"), "rmse": float(np.sqrt(mean("mse"))),
            "cov50": mean("cov50"), "cov90": mean("cov90"), "cov99": mean("cov99"),
            "dss_degenerate": len(recs) - len(good), "failures": failures.get(model, 0),
        })
    return rows


def mae_rmse(observations, ensembles):
    """Panel MAE (vs ensemble medians) and RMSE (vs ensemble means).

    ``observations`` and ``ensembles`` are aligned sequences of realised
    vectors and ``M x T`` ensembles; errors are averaged over all days and
    steps before the square root is taken.
    """
    abs_err, sq_err = [], []
    for obs, ens in zip(observations, ensembles):
        ens, obs = _ens(ens, obs)
        srt = np.sort(ens, axis=0)
        abs_err.append(np.abs(obs - empirical_quantiles(srt, [0.5], sorted_=True)[0]))
        sq_err.append((obs - srt.mean(axis=0)) ** 2)
    return float(np.mean(np.concatenate(abs_err))), float(np.sqrt(np.mean(np.concatenate(sq_err))))
