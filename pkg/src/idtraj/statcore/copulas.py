"""Copula sampling and rank reordering of ensembles.

Supported kinds: ``independence``, ``gaussian`` (needs a correlation matrix),
``comonotone`` (every column is the same uniform) and ``countermonotone``
(neighbouring columns are counter-monotone pairs: ``u, 1-u, u, 1-u, ...``).
"""

import warnings

import numpy as np
from scipy.special import ndtr, ndtri

from ..errors import ConfigError, NumericError

KINDS = ("independence", "gaussian", "comonotone", "countermonotone")


def repair_correlation(R, floor=1e-10):
    """Clip eigenvalues at ``floor`` and rescale back to unit diagonal."""
    R = np.asarray(R, dtype=float)
    if R.ndim != 2 or R.shape[0] != R.shape[1] or not np.all(np.isfinite(R)):
        raise NumericError("correlation matrix must be a finite square matrix")
    R = 0.5 * (R + R.T)
    w, v = np.linalg.eigh(R)
    if w.min() >= floor:
        return R
    w = np.maximum(w, floor)
    fixed = (v * w) @ v.T
    d = np.sqrt(np.diag(fixed))
    fixed = fixed / np.outer(d, d)
    np.fill_diagonal(fixed, 1.0)
    if not np.all(np.isfinite(fixed)):
        raise NumericError("could not repair correlation matrix")
    return fixed


def _gaussian_factor(R):
    R = repair_correlation(R)
    try:
        return np.linalg.cholesky(R)
    except np.linalg.LinAlgError:
        # eigen-clipping at 1e-10 can still leave round-off negatives
        w, v = np.linalg.eigh(R)
        warnings.warn("correlation matrix not Cholesky-factorisable; using eigen factor")
        return v * np.sqrt(np.maximum(w, 0.0))


def copula_transform(uniforms, kind, R=None):
    """Map an ``M x T`` array of i.i.d. uniforms to a sample of copula ``kind``."""
    u = np.asarray(uniforms, dtype=float)
    if kind == "independence":
        return u.copy()
    if kind == "gaussian":
        if R is None:
            raise ConfigError("gaussian copula needs a correlation matrix")
        L = _gaussian_factor(R)
        z = ndtri(np.clip(u, 1e-16, 1 - 1e-16)) @ L.T
        return ndtr(z)
    if kind == "comonotone":
        return np.repeat(u[:, :1], u.shape[1], axis=1)
    if kind == "countermonotone":
        out = np.repeat(u[:, :1], u.shape[1], axis=1)
        out[:, 1::2] = 1.0 - out[:, 1::2]
        return out
    raise ConfigError(f"unknown copula kind {kind!r}")


def copula_ranks(m, t, kind, rng, R=None):
    """Integer ranks (0-based, per column) of an ``m x t`` copula sample."""
    if kind in ("comonotone", "countermonotone"):
        r0 = np.argsort(np.argsort(rng.random(m), kind="stable"), kind="stable")
        ranks = np.repeat(r0[:, None], t, axis=1)
        if kind == "countermonotone":
            ranks[:, 1::2] = m - 1 - ranks[:, 1::2]
        return ranks
    u = copula_transform(rng.random((m, t)), kind, R)
    return np.argsort(np.argsort(u, axis=0, kind="stable"), axis=0, kind="stable")


def reorder_to_copula(ensemble, kind, rng, R=None):
    """Permute values within each column so the ranks follow ``kind``.

    Each column keeps exactly the same multiset of values.
    """
    ens = np.asarray(ensemble, dtype=float)
    m, t = ens.shape
    ranks = copula_ranks(m, t, kind, rng, R)
    cols = np.sort(ens, axis=0)
    return np.take_along_axis(cols, ranks, axis=0)
