"""Link functions for the location, scale and shape predictors.

The location link is the identity.  The scale link ("logident") is the log
below 1 and a shifted identity above, so the inverse grows linearly rather
than exponentially for large predictors.  The shape link keeps the degrees of
freedom above 2.
"""

import numpy as np

from ..errors import DomainError


def link_g1(mu):
    return np.asarray(mu, dtype=float)


def link_g1_inverse(eta):
    return np.asarray(eta, dtype=float)


def link_g2(sigma):
    s = np.asarray(sigma, dtype=float)
    if np.any(~(s > 0)):
        raise DomainError("logident link requires sigma > 0")
    with np.errstate(divide="ignore"):
        out = np.where(s <= 1.0, np.log(np.minimum(s, 1.0)), s - 1.0)
    return out if out.ndim else float(out)


def link_g2_inverse(eta):
    e = np.asarray(eta, dtype=float)
    out = np.where(e <= 0.0, np.exp(np.minimum(e, 0.0)), e + 1.0)
    return out if out.ndim else float(out)


def link_g2_derivative(eta):
    """d sigma / d eta evaluated at ``eta``."""
    e = np.asarray(eta, dtype=float)
    return np.where(e <= 0.0, np.exp(np.minimum(e, 0.0)), 1.0)


def link_g3(nu):
    n = np.asarray(nu, dtype=float)
    if np.any(~(n > 2)):
        raise DomainError("shape link requires nu > 2")
    out = np.log(n - 2.0)
    return out if out.ndim else float(out)


def link_g3_inverse(eta):
    out = np.exp(np.asarray(eta, dtype=float)) + 2.0
    return out if out.ndim else float(out)
