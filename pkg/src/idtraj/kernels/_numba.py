"""numba-compiled loop kernels mirroring :mod:`idtraj.kernels._numpy`."""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _lasso_cd_gram(G, c, beta, penalty, tol, max_sweeps):
    p = beta.shape[0]
    grad = G @ beta
    for sweep in range(1, max_sweeps + 1):
        max_move = 0.0
        for j in range(p):
            gjj = G[j, j]
            if gjj <= 0.0:
                if beta[j] != 0.0:
                    for k in range(p):
                        grad[k] -= beta[j] * G[k, j]
                    beta[j] = 0.0
                continue
            r = c[j] - grad[j] + gjj * beta[j]
            pen = penalty[j]
            if r > pen:
                new = (r - pen) / gjj
            elif r < -pen:
                new = (r + pen) / gjj
            else:
                new = 0.0
            delta = new - beta[j]
            if delta != 0.0:
                for k in range(p):
                    grad[k] += delta * G[k, j]
                beta[j] = new
                move = abs(delta) * math.sqrt(gjj)
                if move > max_move:
                    max_move = move
        if max_move < tol:
            return beta, sweep, True
    return beta, max_sweeps, False


def lasso_cd_gram(G, c, beta, penalty, tol=1e-10, max_sweeps=10_000):
    b = np.array(beta, dtype=np.float64, copy=True)
    return _lasso_cd_gram(
        np.ascontiguousarray(G, dtype=np.float64),
        np.ascontiguousarray(c, dtype=np.float64),
        b,
        np.ascontiguousarray(penalty, dtype=np.float64),
        float(tol),
        int(max_sweeps),
    )


lasso_cd_gram.__doc__ = "numba twin of :func:`idtraj.kernels._numpy.lasso_cd_gram`."


@njit(cache=True)
def _energy_terms(obs, ens):
    m, t = ens.shape
    ed = 0.0
    for j in range(m):
        s = 0.0
        for k in range(t):
            d = ens[j, k] - obs[k]
            s += d * d
        ed += math.sqrt(s)
    ed /= m
    ei = 0.0
    for j in range(m):
        for i in range(j + 1, m):
            s = 0.0
            for k in range(t):
                d = ens[j, k] - ens[i, k]
                s += d * d
            ei += math.sqrt(s)
    if m > 1:
        ei /= 0.5 * m * (m - 1)
    return ed, ei


def energy_terms(obs, ens):
    return _energy_terms(
        np.ascontiguousarray(obs, dtype=np.float64),
        np.ascontiguousarray(ens, dtype=np.float64),
    )


@njit(cache=True)
def _variogram_sum(obs, ens):
    m, t = ens.shape
    total = 0.0
    for i in range(t):
        for j in range(i + 1, t):
            s = 0.0
            for k in range(m):
                s += abs(ens[k, i] - ens[k, j])
            d = abs(obs[i] - obs[j]) - s / m
            total += 2.0 * d * d
    return total / (t * t)


def variogram_sum(obs, ens):
    return _variogram_sum(
        np.ascontiguousarray(obs, dtype=np.float64),
        np.ascontiguousarray(ens, dtype=np.float64),
    )
