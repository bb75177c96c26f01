"""Equally spaced B-spline bases and difference penalties (P-splines)."""

import numpy as np
from scipy.interpolate import BSpline

from ..errors import ConfigError


def equispaced_knots(lo, hi, n_knots, degree=3):
    """Knot vector with ``n_knots`` equally spaced knots on ``[lo, hi]`` and
    ``degree`` extra knots continuing the spacing on each side."""
    if n_knots < degree + 2:
        raise ConfigError(f"need at least {degree + 2} knots for degree {degree}, got {n_knots}")
    if not hi > lo:
        raise ConfigError("spline domain must have hi > lo")
    h = (hi - lo) / (n_knots - 1)
    return lo + h * np.arange(-degree, n_knots + degree)


def bspline_basis(x, n_knots, degree=3, domain=(0.0, 1.0)):
    """Evaluate all B-spline basis functions at ``x``.

    Values outside ``domain`` are clamped to its end points, so every row is a
    partition of unity.  Returns an array of shape ``(len(x), n_knots + degree - 1)``.
    """
    lo, hi = float(domain[0]), float(domain[1])
    t = equispaced_knots(lo, hi, n_knots, degree)
    xs = np.clip(np.atleast_1d(np.asarray(x, dtype=float)), lo, hi)
    out = BSpline.design_matrix(xs, t, degree, extrapolate=False).toarray()
    return out


def difference_matrix(n_basis, diff_order=2):
    return np.diff(np.eye(n_basis), n=diff_order, axis=0)


def pspline_penalty(n_basis, diff_order=2):
    """``D'D`` for the ``diff_order``-th difference matrix ``D``."""
    if n_basis <= diff_order:
        raise ConfigError("number of basis functions must exceed the difference order")
    d = difference_matrix(n_basis, diff_order)
    return d.T @ d
