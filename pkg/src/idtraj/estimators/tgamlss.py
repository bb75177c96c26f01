"""Penalised maximum likelihood for the t location-scale-shape regression.

The response follows a t distribution parameterised by its mean ``mu``,
standard deviation ``sigma`` and degrees of freedom ``nu``.  The mean is
linear in lagged price differences (identity link, no intercept); the scale
predictor on the logident scale holds linear terms plus two centred
P-spline smooths, one in the previous price and one in the step index; the
shape is a single intercept on the ``log(nu - 2)`` scale.

Blocks are updated in turn (RS-style): Fisher scoring for the mean,
penalised Fisher scoring for the scale, and a golden-section search for the
shape.  Smoothing parameters are picked by GCV during the first outer
iterations and then frozen, after which every block update is accepted only
if it does not decrease the penalised log-likelihood.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from ..designmatrix import FeatureMatrix, SIGMA_FEATURE_NAMES, StandardizationStats, standardize
from ..errors import ContractError, EstimationError
from ..statcore.links import link_g2, link_g2_derivative, link_g2_inverse, link_g3, link_g3_inverse
from ..statcore.splines import bspline_basis, pspline_penalty

log = logging.getLogger(__name__)

VARIANTS = ("const_sigma", "mu_only", "sigma_only", "mu_and_sigma")
NU_MIN, NU_MAX = 2.05, 100.0
N_KNOTS, DEGREE = 18, 3
LAMBDA_GRID = 10.0 ** np.linspace(-3, 5, 17)
MIN_OBS = 200
_RIDGE = 1e-8
_GOLDEN = (math.sqrt(5) - 1) / 2


@dataclass
class SplineTerm:
    """Centred cubic P-spline ``h(x) = B(x) Z theta`` with a second-difference penalty."""

    domain: tuple
    Z: np.ndarray
    theta: np.ndarray
    lam: float
    n_knots: int = N_KNOTS
    degree: int = DEGREE
    edf: float = float("nan")

    @classmethod
    def setup(cls, x, n_knots=N_KNOTS, degree=DEGREE):
        lo, hi = float(np.min(x)), float(np.max(x))
        if hi <= lo:
            lo, hi = lo - 1.0, hi + 1.0
        B = bspline_basis(x, n_knots, degree, (lo, hi))
        # null space of the column means: the smooth sums to zero over training rows
        q, _ = np.linalg.qr(B.mean(axis=0)[:, None], mode="complete")
        Z = q[:, 1:]
        return cls((lo, hi), Z, np.zeros(Z.shape[1]), 1.0, n_knots, degree)

    def basis(self, x):
        return bspline_basis(x, self.n_knots, self.degree, self.domain) @ self.Z

    def penalty(self):
        P = pspline_penalty(self.Z.shape[0], 2)
        return self.Z.T @ P @ self.Z

    def __call__(self, x):
        return self.basis(x) @ self.theta

    def to_dict(self):
        return {"domain": list(self.domain), "Z": self.Z.tolist(), "theta": self.theta.tolist(),
                "lambda": self.lam, "n_knots": self.n_knots, "degree": self.degree, "edf": self.edf}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["domain"]), np.asarray(d["Z"], float), np.asarray(d["theta"], float),
                   float(d["lambda"]), int(d["n_knots"]), int(d["degree"]), float(d["edf"]))


@dataclass
class TGamFit:
    """Fitted t regression.

    ``sigma_linear_coefs`` act on standardised scale regressors (see
    ``sigma_stats``); :meth:`sigma` accepts raw rows.
    """

    variant: str
    mu_coefs: np.ndarray
    sigma_linear_coefs: np.ndarray
    sigma_names: tuple
    sigma_stats: StandardizationStats | None
    h_price: SplineTerm | None
    h_step: SplineTerm | None
    nu_eta: float
    n_obs: int
    loglik: float
    iterations: int
    converged: bool
    nu_at_bound: bool
    deviance_path: list = field(default_factory=list)

    @property
    def nu(self):
        return float(link_g3_inverse(self.nu_eta))

    @property
    def uses_mu(self):
        return self.variant in ("mu_only", "mu_and_sigma")

    @property
    def uses_sigma_regressors(self):
        return self.variant in ("sigma_only", "mu_and_sigma")

    def raw_sigma_coefficients(self):
        """``(coef, offset)`` with ``eta_linear = raw_rows @ coef + offset``."""
        b = self.sigma_linear_coefs
        st = self.sigma_stats
        if st is None:
            return b.copy(), 0.0
        coef = np.where(st.scaled, b / st.sd, b)
        return coef, -float(np.sum(np.where(st.scaled, b * st.mean / st.sd, 0.0)))

    def mu(self, mu_rows):
        if not self.uses_mu:
            return np.zeros(np.atleast_2d(mu_rows).shape[0])
        return np.atleast_2d(np.asarray(mu_rows, float)) @ self.mu_coefs

    def eta_sigma(self, sigma_rows, price_prev=None, step=None):
        rows = np.atleast_2d(np.asarray(sigma_rows, float))
        if rows.shape[1] != self.sigma_linear_coefs.shape[0]:
            raise ContractError(f"expected {self.sigma_linear_coefs.shape[0]} scale regressors")
        coef, off = self.raw_sigma_coefficients()
        eta = rows @ coef + off
        if self.h_price is not None:
            eta = eta + self.h_price(price_prev)
        if self.h_step is not None:
            eta = eta + self.h_step(step)
        return eta

    def sigma(self, sigma_rows, price_prev=None, step=None):
        return link_g2_inverse(self.eta_sigma(sigma_rows, price_prev, step))

    def to_dict(self):
        return {
            "kind": "t_gamlss",
            "variant": self.variant,
            "mu_coefs": self.mu_coefs.tolist(),
            "sigma_linear_coefs": self.sigma_linear_coefs.tolist(),
            "sigma_names": list(self.sigma_names),
            "sigma_stats": None if self.sigma_stats is None else self.sigma_stats.to_dict(),
            "h_price": None if self.h_price is None else self.h_price.to_dict(),
            "h_step": None if self.h_step is None else self.h_step.to_dict(),
            "nu_eta": self.nu_eta,
            "n_obs": self.n_obs,
            "loglik": self.loglik,
            "iterations": self.iterations,
            "converged": self.converged,
            "nu_at_bound": self.nu_at_bound,
            "deviance_path": list(self.deviance_path),
        }

    @classmethod
    def from_dict(cls, d):
        def opt(x, f):
            return None if x is None else f(x)

        return cls(d["variant"], np.asarray(d["mu_coefs"], float),
                   np.asarray(d["sigma_linear_coefs"], float), tuple(d["sigma_names"]),
                   opt(d["sigma_stats"], StandardizationStats.from_dict),
                   opt(d["h_price"], SplineTerm.from_dict), opt(d["h_step"], SplineTerm.from_dict),
                   float(d["nu_eta"]), int(d["n_obs"]), float(d["loglik"]), int(d["iterations"]),
                   bool(d["converged"]), bool(d["nu_at_bound"]), list(d["deviance_path"]))


def t_loglik(y, mu, sigma, nu):
    """Pointwise log-density of the SD-parameterised t."""
    s = sigma * np.sqrt((nu - 2.0) / nu)
    z = (y - mu) / s
    return (gammaln((nu + 1) / 2) - gammaln(nu / 2) - 0.5 * np.log(np.pi * nu)
            - np.log(s) - 0.5 * (nu + 1) * np.log1p(z * z / nu))


class _Problem:
    """Design, data and current state of one fit."""

    def __init__(self, y, Xm, Xs, blocks, fixed_lambda):
        self.y, self.Xm, self.Xs, self.blocks = y, Xm, Xs, blocks
        self.n = y.shape[0]
        self.beta_mu = np.zeros(0 if Xm is None else Xm.shape[1])
        self.beta_s = np.zeros(Xs.shape[1])
        self.nu_eta = float(link_g3(10.0))
        self.lams = [fixed_lambda] * len(blocks)
        self.ridge = np.full(Xs.shape[1], _RIDGE)
        self.ridge[0] = 0.0

    def S(self, lams=None):
        lams = self.lams if lams is None else lams
        S = np.diag(self.ridge)
        for (sl, P), lam in zip(self.blocks, lams):
            S[sl, sl] += lam * P
        return S

    def mean(self, beta_mu=None):
        if self.Xm is None:
            return np.zeros(self.n)
        return self.Xm @ (self.beta_mu if beta_mu is None else beta_mu)

    def loglik(self, beta_mu=None, beta_s=None, nu_eta=None):
        sig = link_g2_inverse(self.Xs @ (self.beta_s if beta_s is None else beta_s))
        nu = link_g3_inverse(self.nu_eta if nu_eta is None else nu_eta)
        return float(np.sum(t_loglik(self.y, self.mean(beta_mu), sig, nu)))

    def pen(self, beta_s=None, lams=None):
        b = self.beta_s if beta_s is None else beta_s
        return 0.5 * float(b @ self.S(lams) @ b)

    def pll(self, **kw):
        return self.loglik(kw.get("beta_mu"), kw.get("beta_s"), kw.get("nu_eta")) - self.pen(
            kw.get("beta_s"), kw.get("lams"))

    # -- block updates ------------------------------------------------------

    def update_mu(self):
        nu = link_g3_inverse(self.nu_eta)
        sig = link_g2_inverse(self.Xs @ self.beta_s)
        s = sig * np.sqrt((nu - 2) / nu)
        r = self.y - self.mean()
        score = (nu + 1) * r / (nu * s * s + r * r)
        w = (nu + 1) / ((nu + 3) * s * s)
        H = (self.Xm.T * w) @ self.Xm
        delta = np.linalg.solve(H, self.Xm.T @ score)
        self.beta_mu = self._halve(lambda b: self.pll(beta_mu=b), self.beta_mu, delta)

    def _sigma_working(self):
        nu = link_g3_inverse(self.nu_eta)
        eta = self.Xs @ self.beta_s
        sig = link_g2_inverse(eta)
        s = sig * np.sqrt((nu - 2) / nu)
        r = self.y - self.mean()
        z2 = (r / s) ** 2
        dsig = link_g2_derivative(eta)
        score = (-1.0 + (nu + 1) * z2 / (nu + z2)) / sig * dsig
        w = 2 * nu / ((nu + 3) * sig * sig) * dsig * dsig
        return eta, score, w

    def choose_lambdas(self):
        """GCV over the smoothing grid, one smooth at a time (two sweeps)."""
        eta, score, w = self._sigma_working()
        z = eta + score / w
        XtW = self.Xs.T * w
        G = XtW @ self.Xs
        b = XtW @ z
        lams = list(self.lams)
        for _ in range(2):
            for k in range(len(self.blocks)):
                best = None
                for lam in LAMBDA_GRID:
                    trial = lams[:k] + [lam] + lams[k + 1:]
                    A = G + self.S(trial)
                    try:
                        beta = np.linalg.solve(A, b)
                        edf = float(np.trace(np.linalg.solve(A, G)))
                    except np.linalg.LinAlgError:
                        continue
                    res = z - self.Xs @ beta
                    rss = float(np.sum(w * res * res))
                    gcv = self.n * rss / max(self.n - edf, 1.0) ** 2
                    if best is None or gcv < best[0]:
                        best = (gcv, lam)
                if best is not None:
                    lams[k] = best[1]
        self.lams = lams

    def update_sigma(self):
        _, score, w = self._sigma_working()
        S = self.S()
        H = (self.Xs.T * w) @ self.Xs + S
        g = self.Xs.T @ score - S @ self.beta_s
        try:
            delta = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            delta = np.linalg.lstsq(H, g, rcond=None)[0]
        self.beta_s = self._halve(lambda b: self.pll(beta_s=b), self.beta_s, delta)

    def _profile_intercept(self, nu_eta, c0):
        """Best shift of the scale intercept at shape ``nu_eta`` (a few Fisher steps)."""
        nu = link_g3_inverse(nu_eta)
        mean = self.mean()
        base = self.Xs @ self.beta_s
        c = c0

        def ll(cc):
            return float(np.sum(t_loglik(self.y, mean, link_g2_inverse(base + cc), nu)))

        cur = ll(c)
        for _ in range(20):
            eta = base + c
            sig = link_g2_inverse(eta)
            s = sig * np.sqrt((nu - 2) / nu)
            z2 = ((self.y - mean) / s) ** 2
            dsig = link_g2_derivative(eta)
            score = np.sum((-1.0 + (nu + 1) * z2 / (nu + z2)) / sig * dsig)
            info = np.sum(2 * nu / ((nu + 3) * sig * sig) * dsig * dsig)
            step = score / info
            while True:
                val = ll(c + step)
                if val >= cur or abs(step) < 1e-12:
                    break
                step *= 0.5
            if val < cur:
                break
            c, cur = c + step, val
            if abs(step) < 1e-10:
                break
        return cur, c

    def update_nu(self):
        """Golden-section search for the shape intercept on the g3 scale.

        The scale intercept is profiled out at every candidate, which follows
        the strong ridge between the standard deviation and the degrees of
        freedom instead of zig-zagging across it.
        """
        lo, hi = math.log(NU_MIN - 2), math.log(NU_MAX - 2)
        nu0 = link_g3_inverse(self.nu_eta)
        cache = {}

        def f(e):
            # start from the shift that keeps the t scale unchanged (exact on the log branch)
            nu = link_g3_inverse(e)
            c0 = 0.5 * (math.log(nu / (nu - 2)) - math.log(nu0 / (nu0 - 2)))
            val, c = self._profile_intercept(e, c0)
            cache[e] = c
            return val

        a, b = lo, hi
        c, d = b - _GOLDEN * (b - a), a + _GOLDEN * (b - a)
        fc, fd = f(c), f(d)
        while b - a > 1e-7:
            if fc > fd:
                b, d, fd = d, c, fc
                c = b - _GOLDEN * (b - a)
                fc = f(c)
            else:
                a, c, fc = c, d, fd
                d = a + _GOLDEN * (b - a)
                fd = f(d)
        best_f, best_e = max([(fc, c), (fd, d), (f(hi), hi), (f(lo), lo)])
        cur_f, cur_c = self._profile_intercept(self.nu_eta, 0.0)
        if best_f >= cur_f:
            self.nu_eta = float(best_e)
            self.beta_s[0] += cache[best_e]
        else:
            self.beta_s[0] += cur_c

    @staticmethod
    def _halve(objective, current, delta, max_halvings=30):
        base = objective(current)
        step = 1.0
        for _ in range(max_halvings):
            cand = current + step * delta
            val = objective(cand)
            if np.isfinite(val) and val >= base:
                return cand
            step *= 0.5
        return current

    def edf(self, k):
        _, _, w = self._sigma_working()
        G = (self.Xs.T * w) @ self.Xs
        A = G + self.S()
        sl = self.blocks[k][0]
        return float(np.trace(np.linalg.solve(A, G)[sl, sl]))


def fit_t_gamlss(y, variant="mu_and_sigma", mu_rows=None, sigma_rows=None,
                 spline_price=None, spline_step=None, sigma_names=SIGMA_FEATURE_NAMES,
                 max_iter=200, tol=1e-6, gcv_iterations=10):
    """Fit the t regression by penalised maximum likelihood.

    Parameters
    ----------
    y : array_like
        Price differences (for the mixture models, only rows where trading
        happened).
    variant : {"const_sigma", "mu_only", "sigma_only", "mu_and_sigma"}
        Which predictors are active; inactive ones are frozen (mean zero,
        scale from an intercept only).
    mu_rows : array_like, shape (n, 3), optional
        Raw location regressors; required for variants with a mean model.
    sigma_rows : array_like, shape (n, p), optional
        Raw linear scale regressors with an intercept first; required (with
        ``spline_price`` and ``spline_step``) for variants with a scale model.
    max_iter, tol : int, float
        Outer iteration cap and absolute penalised-deviance tolerance.
    gcv_iterations : int
        Outer iterations during which smoothing parameters are re-chosen.

    Returns
    -------
    TGamFit
    """
    if variant not in VARIANTS:
        raise ContractError(f"unknown variant {variant!r}")
    y = np.asarray(y, float).ravel()
    n = y.shape[0]
    if n < MIN_OBS:
        raise EstimationError(f"need at least {MIN_OBS} observations, got {n}")
    if not np.all(np.isfinite(y)):
        raise EstimationError("non-finite responses")
    if np.ptp(y) == 0:
        raise EstimationError("responses have zero variance")
    use_mu = variant in ("mu_only", "mu_and_sigma")
    use_sig = variant in ("sigma_only", "mu_and_sigma")

    Xm = None
    if use_mu:
        if mu_rows is None:
            raise ContractError(f"variant {variant} needs location regressors")
        Xm = np.asarray(mu_rows, float).reshape(n, -1)

    blocks, h_price, h_step, stats = [], None, None, None
    if use_sig:
        if sigma_rows is None or spline_price is None or spline_step is None:
            raise ContractError(f"variant {variant} needs scale regressors and spline inputs")
        lin, stats = standardize(FeatureMatrix(np.asarray(sigma_rows, float).reshape(n, -1),
                                               sigma_names))
        h_price = SplineTerm.setup(np.asarray(spline_price, float))
        h_step = SplineTerm.setup(np.asarray(spline_step, float))
        parts = [lin.values]
        col = lin.values.shape[1]
        for term, x in ((h_price, spline_price), (h_step, spline_step)):
            Bz = term.basis(x)
            blocks.append((slice(col, col + Bz.shape[1]), term.penalty()))
            parts.append(Bz)
            col += Bz.shape[1]
        Xs = np.hstack(parts)
        p_lin = lin.values.shape[1]
    else:
        Xs = np.ones((n, 1))
        p_lin = 1

    prob = _Problem(y, Xm, Xs, blocks, 1.0)
    prob.beta_s[0] = link_g2(max(float(np.std(y)), 1e-8))
    prob.update_nu()

    path = []
    prev = -2 * prob.pll()
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        tuning = bool(blocks) and it <= gcv_iterations
        if use_mu:
            prob.update_mu()
        if tuning:
            prob.choose_lambdas()
        prob.update_sigma()
        prob.update_nu()
        cur = -2 * prob.pll()
        if not np.isfinite(cur):
            raise EstimationError("penalised likelihood became non-finite")
        path.append(cur)
        if not tuning and abs(prev - cur) < tol:
            converged = True
            break
        prev = cur
    if not converged:
        log.warning("t regression (%s) stopped after %d iterations without meeting tol", variant, it)

    lo, hi = math.log(NU_MIN - 2), math.log(NU_MAX - 2)
    at_bound = prob.nu_eta - lo < 1e-4 or hi - prob.nu_eta < 1e-4
    if at_bound:
        log.warning("degrees of freedom at the search bound (nu=%.3f)", link_g3_inverse(prob.nu_eta))

    for k, term in enumerate((h_price, h_step)):
        if term is not None:
            sl = blocks[k][0]
            term.theta = prob.beta_s[sl].copy()
            term.lam = float(prob.lams[k])
            term.edf = prob.edf(k)
    sig_lin = prob.beta_s[:p_lin].copy()
    if not use_sig:
        p_full = len(sigma_names)
        sig_lin = np.concatenate([sig_lin, np.zeros(p_full - 1)])
    mu_coefs = prob.beta_mu.copy() if use_mu else np.zeros(3)
    sigma_hat = link_g2_inverse(Xs @ prob.beta_s)
    if not np.all(sigma_hat > 0) or not np.all(np.isfinite(sigma_hat)):
        raise EstimationError("fitted scale not positive on training rows")
    return TGamFit(variant, mu_coefs, sig_lin, tuple(sigma_names), stats, h_price, h_step,
                   float(prob.nu_eta), n, prob.loglik(), it, converged, bool(at_bound), path)


def observed_information_se(fit, y, mu_rows=None, sigma_rows=None, spline_price=None,
                            spline_step=None, h=1e-4):
    """Standard errors from the numerically differentiated observed information.

    Covers the location coefficients, the linear scale coefficients (on the
    standardised scale) and the shape intercept; smooth terms are held fixed.
    Returns a dict keyed by ``"mu"``, ``"sigma"`` and ``"nu_eta"``.
    """
    y = np.asarray(y, float)
    n = y.shape[0]
    smooth = np.zeros(n)
    if fit.h_price is not None:
        smooth += fit.h_price(spline_price) + fit.h_step(spline_step)
    if fit.uses_sigma_regressors:
        lin = standardize(FeatureMatrix(np.asarray(sigma_rows, float), fit.sigma_names),
                          fit.sigma_stats)[0].values
        n_sig = lin.shape[1]
    else:
        lin = np.ones((n, 1))
        n_sig = 1
    Xm = np.asarray(mu_rows, float) if fit.uses_mu else None
    n_mu = Xm.shape[1] if Xm is not None else 0
    theta0 = np.concatenate([fit.mu_coefs[:n_mu], fit.sigma_linear_coefs[:n_sig], [fit.nu_eta]])

    def ll(theta):
        mu = Xm @ theta[:n_mu] if n_mu else 0.0
        sig = link_g2_inverse(lin @ theta[n_mu:n_mu + n_sig] + smooth)
        return float(np.sum(t_loglik(y, mu, sig, link_g3_inverse(theta[-1]))))

    k = theta0.size
    H = np.empty((k, k))
    E = np.eye(k) * h
    for i in range(k):
        for j in range(i, k):
            v = (ll(theta0 + E[i] + E[j]) - ll(theta0 + E[i] - E[j])
                 - ll(theta0 - E[i] + E[j]) + ll(theta0 - E[i] - E[j])) / (4 * h * h)
            H[i, j] = H[j, i] = v
    cov = np.linalg.pinv(-H)
    se = np.sqrt(np.maximum(np.diag(cov), 0.0))
    return {"mu": se[:n_mu], "sigma": se[n_mu:n_mu + n_sig], "nu_eta": float(se[-1])}
