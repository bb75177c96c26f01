"""Time the numba kernels against the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py [--repeats 5]

Both backends are imported directly, so the ``IDTRAJ_DISABLE_NUMBA`` flag
has no effect here.  The numba timings exclude JIT compilation (one warm-up
call per kernel).
"""

import argparse
import time

import numpy as np

from idtraj.kernels import _numba, _numpy


def _problems(rng):
    n, p = 4000, 61
    X = rng.standard_normal((n, p))
    y = X[:, :5] @ np.array([1.0, -0.5, 0.3, 0.0, 0.8]) + rng.standard_normal(n)
    G = X.T @ X / n
    c = X.T @ y / n
    penalty = np.full(p, 0.01)
    penalty[0] = 0.0
    lasso_args = (G, c, np.zeros(p), penalty, 1e-10, 10_000)

    obs = rng.standard_normal(31)
    ens = rng.standard_normal((1000, 31))
    return {
        "lasso_cd_gram": lasso_args,
        "energy_terms": (obs, ens),
        "variogram_sum": (obs, ens),
    }


def _best_time(fn, args, repeats):
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    problems = _problems(np.random.default_rng(args.seed))
    print(f"{'kernel':<16}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}  max |diff|")
    for name, fargs in problems.items():
        f_np = getattr(_numpy, name)
        f_nb = getattr(_numba, name)
        r_np = f_np(*fargs)
        r_nb = f_nb(*fargs)  # warm-up and JIT compile
        a = np.atleast_1d(np.asarray(r_np[0] if name == "lasso_cd_gram" else r_np, dtype=float))
        b = np.atleast_1d(np.asarray(r_nb[0] if name == "lasso_cd_gram" else r_nb, dtype=float))
        diff = float(np.max(np.abs(a - b)))
        t_np = _best_time(f_np, fargs, args.repeats) * 1e3
        t_nb = _best_time(f_nb, fargs, args.repeats) * 1e3
        print(f"{name:<16}{t_np:>12.3f}{t_nb:>12.3f}{t_np / t_nb:>9.1f}x  {diff:.2e}")


if __name__ == "__main__":
    main()
