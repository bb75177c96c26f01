"""Monotone piecewise-cubic interpolation with Hyman filtering.

Slopes start from an interpolating cubic spline and are then clipped into the
Hyman (1983) monotonicity region, giving a C1 interpolant that is monotone on
every interval whenever the data are.
"""

import numpy as np
from scipy.interpolate import CubicHermiteSpline, CubicSpline

from ..errors import PreconditionError


def hyman_filter(x, y, slopes):
    """Clip ``slopes`` so the Hermite cubic through ``(x, y)`` is monotone."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    b = np.array(slopes, dtype=float, copy=True)
    ss = np.diff(y) / np.diff(x)
    s0 = np.concatenate(([ss[0]], ss))
    s1 = np.concatenate((ss, [ss[-1]]))
    t1 = np.minimum(np.abs(s0), np.abs(s1))
    sig = b.copy()
    same = s0 * s1 > 0
    sig[same] = s1[same]
    up = sig >= 0
    b[up] = np.minimum(np.maximum(0.0, b[up]), 3.0 * t1[up])
    down = ~up
    b[down] = np.maximum(np.minimum(0.0, b[down]), -3.0 * t1[down])
    return b


class MonotoneCdf:
    """Monotone C1 interpolant of non-decreasing data, usable as a CDF.

    Outside ``[xs[0], xs[-1]]`` the value is clamped to ``ys[0]`` / ``ys[-1]``
    (0 and 1 when the knots describe a distribution function).
    """

    def __init__(self, xs, ys):
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2:
            raise PreconditionError("need matching 1-d knot arrays with at least two points")
        if np.any(np.diff(xs) <= 0):
            raise PreconditionError("abscissae must be strictly increasing")
        if np.any(np.diff(ys) < 0):
            raise PreconditionError("ordinates must be non-decreasing; rearrange first")
        self.knots = xs
        self.values = ys
        if xs.size == 2:
            raw = np.full(2, (ys[1] - ys[0]) / (xs[1] - xs[0]))
        else:
            raw = CubicSpline(xs, ys, bc_type="not-a-knot")(xs, 1)
        self.slopes = hyman_filter(xs, ys, raw)
        self._poly = CubicHermiteSpline(xs, ys, self.slopes, extrapolate=False)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        xc = np.clip(x, self.knots[0], self.knots[-1])
        out = np.clip(self._poly(xc), self.values[0], self.values[-1])
        # exact end values; the cubic at the last knot can be off by one ulp
        out = np.where(x <= self.knots[0], self.values[0], out)
        out = np.where(x >= self.knots[-1], self.values[-1], out)
        return out if out.ndim else float(out)

    def inverse(self, u, tol=1e-9):
        """Generalised inverse by vectorised bisection to absolute tolerance ``tol``."""
        u = np.asarray(u, dtype=float)
        flat = np.clip(np.atleast_1d(u).ravel(), self.values[0], self.values[-1])
        lo = np.full(flat.shape, self.knots[0])
        hi = np.full(flat.shape, self.knots[-1])
        width = self.knots[-1] - self.knots[0]
        n_iter = int(np.ceil(np.log2(max(width, tol) / tol))) + 1
        for _ in range(n_iter):
            mid = 0.5 * (lo + hi)
            below = self._poly(mid) < flat
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        out = (0.5 * (lo + hi)).reshape(u.shape)
        return out if out.ndim else float(out)


def hyman_monotone_spline(xs, ys):
    return MonotoneCdf(xs, ys)
