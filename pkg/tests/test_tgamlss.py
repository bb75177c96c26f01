import numpy as np
import pytest

from idtraj.designmatrix import SIGMA_FEATURE_NAMES, stack_design, weekday_flags
from idtraj.errors import ContractError, EstimationError
from idtraj.estimators import fit_from_json, fit_t_gamlss, fit_to_json, observed_information_se
from idtraj.estimators.tgamlss import SplineTerm, t_loglik
from idtraj.statcore import t3_logpdf, t3_sample

TRUE_MU = np.array([-0.09, -0.05, -0.02])


def test_constant_scale_recovery():
    y = t3_sample(0.0, 3.0, 5.0, np.random.default_rng(0), 10_000)
    fit = fit_t_gamlss(y, "const_sigma")
    assert fit.converged
    assert float(fit.sigma(np.eye(17)[:1])[0]) == pytest.approx(3.0, abs=0.1)
    assert fit.nu == pytest.approx(5.0, abs=0.75)
    se = observed_information_se(fit, y)
    assert 0 < se["nu_eta"] < 0.2


def test_location_recovery():
    rng = np.random.default_rng(1)
    n = 10_000
    X = rng.normal(scale=2.0, size=(n, 3))
    y = X @ TRUE_MU + t3_sample(0.0, 1.0, 5.0, rng, n)
    fit = fit_t_gamlss(y, "mu_only", mu_rows=X)
    np.testing.assert_allclose(fit.mu_coefs, TRUE_MU, atol=0.02)
    np.testing.assert_allclose(fit.mu(X[:4]), X[:4] @ fit.mu_coefs)


def test_scale_model_tracks_true_scale(small_market):
    store, truth = small_market
    panel = store.panels[store.hours[0]]
    spec = store.spec
    d = stack_design(panel.diffs, panel.traded, panel.prices, spec.origin_index,
                     weekday_flags(panel.days), panel.fundamentals, spec.n_steps)
    rows = d.traded
    fit = fit_t_gamlss(d.target[rows], "mu_and_sigma", mu_rows=d.mu.values[rows],
                       sigma_rows=d.sigma.values[rows], spline_price=d.spline_price[rows],
                       spline_step=d.spline_step[rows])
    assert fit.converged and 2 < fit.nu < 100
    fitted = fit.sigma(d.sigma.values, d.spline_price, d.spline_step)
    true = truth.sd(d.sigma.values, d.spline_price, d.spline_step)
    assert np.all(fitted > 0)
    assert np.corrcoef(fitted, true)[0, 1] > 0.8
    back = fit_from_json(fit_to_json(fit))
    np.testing.assert_allclose(back.sigma(d.sigma.values[:9], d.spline_price[:9], d.spline_step[:9]),
                               fitted[:9])
    with pytest.raises(ContractError):
        fit.sigma(d.sigma.values[:, :5], d.spline_price, d.spline_step)


def test_deviance_is_non_increasing_after_smoothing_is_frozen():
    y = t3_sample(0.0, 1.0, 4.0, np.random.default_rng(2), 2000)
    fit = fit_t_gamlss(y, "const_sigma")
    dev = np.asarray(fit.deviance_path)
    assert np.all(np.diff(dev) <= 1e-8)


def test_degenerate_inputs():
    with pytest.raises(EstimationError):
        fit_t_gamlss(np.full(500, 0.7), "const_sigma")
    with pytest.raises(EstimationError, match="at least"):
        fit_t_gamlss(np.random.default_rng(3).normal(size=50), "const_sigma")
    with pytest.raises(ContractError):
        fit_t_gamlss(np.random.default_rng(3).normal(size=500), "mu_only")


def test_loglik_matches_density():
    y = np.array([-1.0, 0.3, 4.0])
    assert np.sum(t_loglik(y, 0.1, 2.0, 6.0)) == pytest.approx(np.sum(t3_logpdf(y, 0.1, 2.0, 6.0)))


def test_spline_term_is_centred():
    x = np.random.default_rng(4).uniform(20, 60, 1000)
    term = SplineTerm.setup(x)
    B = term.basis(x)
    np.testing.assert_allclose(B.sum(axis=0), 0.0, atol=1e-8)
    assert term.penalty().shape == (B.shape[1], B.shape[1])


def test_sigma_feature_names_default():
    assert len(SIGMA_FEATURE_NAMES) == 17
