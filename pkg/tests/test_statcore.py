import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from idtraj.errors import ConfigError, DomainError, NumericError, PreconditionError
from idtraj.statcore import (
    MonotoneCdf,
    ZeroInflatedTParams,
    bspline_basis,
    copula_transform,
    equispaced_knots,
    link_g1,
    link_g1_inverse,
    link_g2,
    link_g2_derivative,
    link_g2_inverse,
    link_g3,
    link_g3_inverse,
    pspline_penalty,
    reorder_to_copula,
    repair_correlation,
    substream,
    t3_cdf,
    t3_density,
    t3_logpdf,
    t3_quantile,
    t3_sample,
    zit_sample,
)
from idtraj.statcore.copulas import copula_ranks

# -- links --------------------------------------------------------------------


def test_identity_link():
    assert link_g1(3.5) == 3.5 and link_g1_inverse(-2.0) == -2.0


@pytest.mark.parametrize("sigma,eta", [(1.0, 0.0), (0.5, np.log(0.5)), (3.0, 2.0), (1e-3, np.log(1e-3))])
def test_logident_link_values(sigma, eta):
    assert link_g2(sigma) == pytest.approx(eta)
    assert link_g2_inverse(eta) == pytest.approx(sigma)


def test_logident_rejects_non_positive():
    with pytest.raises(DomainError):
        link_g2(0.0)
    with pytest.raises(DomainError):
        link_g2(np.array([1.0, -1.0]))


@given(st.floats(-30, 50))
def test_logident_round_trip_and_continuity(eta):
    s = link_g2_inverse(eta)
    assert s > 0
    assert link_g2(s) == pytest.approx(eta, abs=1e-9)


def test_logident_derivative_matches_finite_difference():
    for eta in (-2.0, -0.1, 0.3, 4.0):
        h = 1e-6
        fd = (link_g2_inverse(eta + h) - link_g2_inverse(eta - h)) / (2 * h)
        assert float(link_g2_derivative(eta)) == pytest.approx(fd, rel=1e-6)


def test_logident_grows_linearly_not_exponentially():
    assert link_g2_inverse(100.0) == pytest.approx(101.0)


def test_shape_link():
    assert link_g3(3.0) == pytest.approx(0.0)
    assert link_g3_inverse(0.0) == pytest.approx(3.0)
    with pytest.raises(DomainError):
        link_g3(2.0)
    assert link_g3_inverse(-20.0) > 2.0


# -- t distribution -------------------------------------------------------------


def test_sd_parameterisation_has_unit_variance():
    # with sigma the standard deviation, the variance is sigma^2 whatever nu
    assert stats.t.var(5, scale=np.sqrt(3 / 5)) == pytest.approx(1.0)
    rng = np.random.default_rng(0)
    x = t3_sample(0.0, 1.0, 5.0, rng, 400_000)
    assert x.var() == pytest.approx(1.0, abs=0.03)


def test_t3_density_integrates_and_matches_scipy():
    xs = np.linspace(-60, 60, 200_001)
    dens = t3_density(xs, 0.5, 2.0, 4.0)
    assert np.trapezoid(dens, xs) == pytest.approx(1.0, abs=1e-3)
    ref = stats.t.logpdf(1.3, df=4.0, loc=0.5, scale=2.0 * np.sqrt(0.5))
    assert float(t3_logpdf(1.3, 0.5, 2.0, 4.0)) == pytest.approx(ref)


def test_t3_cdf_quantile_inverse():
    q = np.array([0.01, 0.3, 0.5, 0.97])
    assert t3_cdf(t3_quantile(q, 1.0, 2.0, 6.0), 1.0, 2.0, 6.0) == pytest.approx(q)


def test_t3_domain_errors():
    with pytest.raises(DomainError):
        t3_logpdf(0.0, 0.0, -1.0, 5.0)
    with pytest.raises(DomainError):
        t3_cdf(0.0, 0.0, 1.0, 2.0)


def test_zero_inflated_sample_is_zero_without_trade():
    rng = np.random.default_rng(1)
    alpha, diff = zit_sample(ZeroInflatedTParams(0.3, 0.0, 1.0, 5.0), rng, 10_000)
    assert np.all(diff[alpha == 0] == 0.0)
    assert alpha.mean() == pytest.approx(0.3, abs=0.02)
    a, d = zit_sample(ZeroInflatedTParams(0.0, 0.0, 1.0, 5.0), rng)
    assert a == 0 and d == 0.0


def test_zero_inflated_params_validation():
    with pytest.raises(DomainError):
        ZeroInflatedTParams(1.5, 0.0, 1.0, 5.0)
    with pytest.raises(DomainError):
        ZeroInflatedTParams(0.5, 0.0, 1.0, 1.5)


# -- splines --------------------------------------------------------------------


def test_bspline_basis_partition_of_unity_and_shape():
    x = np.linspace(-1, 2, 50)
    B = bspline_basis(x, 18, 3, (0.0, 1.0))
    assert B.shape == (50, 20)
    np.testing.assert_allclose(B.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(B >= 0)


def test_knots_are_equispaced_and_validated():
    t = equispaced_knots(0.0, 1.0, 18, 3)
    assert np.allclose(np.diff(t), 1 / 17)
    with pytest.raises(ConfigError):
        equispaced_knots(0.0, 1.0, 3, 3)


def test_second_difference_penalty_null_space_is_linear():
    P = pspline_penalty(20)
    k = np.arange(20.0)
    assert np.allclose(P @ np.ones(20), 0) and np.allclose(P @ k, 0)
    assert (k ** 2) @ P @ (k ** 2) > 0


# -- monotone CDF -----------------------------------------------------------------


def test_monotone_cdf_round_trip():
    xs = np.array([-3.0, -1.0, -0.2, 0.0, 0.4, 2.0, 5.0])
    ys = np.array([0.0, 0.1, 0.3, 0.5, 0.6, 0.95, 1.0])
    cdf = MonotoneCdf(xs, ys)
    grid = np.linspace(-2.9, 4.9, 101)
    np.testing.assert_allclose(cdf.inverse(cdf(grid)), grid, atol=1e-6)
    assert cdf(-10.0) == 0.0 and cdf(10.0) == 1.0


def test_monotone_cdf_rejects_bad_knots():
    with pytest.raises(PreconditionError):
        MonotoneCdf([0.0, 0.0, 1.0], [0.0, 0.5, 1.0])
    with pytest.raises(PreconditionError):
        MonotoneCdf([0.0, 1.0, 2.0], [0.0, 0.6, 0.5])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.001, 5.0), min_size=2, max_size=30),
       st.lists(st.floats(0.0, 1.0), min_size=2, max_size=30))
def test_monotone_cdf_is_monotone_on_dense_grid(gaps, probs):
    n = min(len(gaps), len(probs))
    xs = np.cumsum(gaps[:n])
    ys = np.sort(np.asarray(probs[:n]))
    cdf = MonotoneCdf(xs, ys)
    v = cdf(np.linspace(xs[0] - 1, xs[-1] + 1, 1000))
    assert np.all(np.diff(v) >= -1e-12)


# -- copulas ------------------------------------------------------------------------


def test_repair_correlation_makes_pd_with_unit_diagonal():
    R = np.array([[1, 0.99, -0.99], [0.99, 1, 0.99], [-0.99, 0.99, 1.0]])
    F = repair_correlation(R)
    assert np.allclose(np.diag(F), 1.0)
    assert np.linalg.eigvalsh(F).min() > 0
    with pytest.raises(NumericError):
        repair_correlation(np.array([[1.0, np.nan], [np.nan, 1.0]]))


def test_copula_transform_kinds():
    rng = np.random.default_rng(0)
    u = rng.random((2000, 4))
    co = copula_transform(u, "comonotone")
    assert np.all(co == co[:, :1])
    cm = copula_transform(u, "countermonotone")
    np.testing.assert_allclose(cm[:, 1], 1 - cm[:, 0])
    R = np.full((4, 4), 0.8) + 0.2 * np.eye(4)
    g = copula_transform(u, "gaussian", R)
    assert 0.7 < stats.spearmanr(g[:, 0], g[:, 1])[0] < 0.85
    with pytest.raises(ConfigError):
        copula_transform(u, "gaussian")
    with pytest.raises(ConfigError):
        copula_transform(u, "clayton")


def test_comonotone_reorder_of_small_ensemble_by_hand():
    ens = np.array([[1.0, 5.0], [2.0, 3.0]])
    out = reorder_to_copula(ens, "comonotone", np.random.default_rng(0))
    # both columns sorted the same way: the pairs are (1, 3) and (2, 5) in some row order
    assert sorted(map(tuple, out)) == [(1.0, 3.0), (2.0, 5.0)]
    anti = reorder_to_copula(ens, "countermonotone", np.random.default_rng(0))
    assert sorted(map(tuple, anti)) == [(1.0, 5.0), (2.0, 3.0)]


@pytest.mark.parametrize("kind", ["independence", "gaussian", "comonotone", "countermonotone"])
def test_reorder_preserves_column_multisets(kind):
    rng = np.random.default_rng(3)
    ens = rng.normal(size=(50, 6))
    out = reorder_to_copula(ens, kind, rng, np.eye(6) * 0.5 + 0.5)
    np.testing.assert_array_equal(np.sort(out, axis=0), np.sort(ens, axis=0))


def test_copula_ranks_are_permutations():
    r = copula_ranks(10, 3, "gaussian", np.random.default_rng(1), np.eye(3))
    for j in range(3):
        assert sorted(r[:, j]) == list(range(10))


# -- random streams -------------------------------------------------------------------


def test_substreams_are_reproducible_and_distinct():
    a = substream(7, "Naive", "2016-01-01", 8).random(3)
    b = substream(7, "Naive", "2016-01-01", 8).random(3)
    c = substream(7, "Naive", "2016-01-01", 9).random(3)
    d = substream(8, "Naive", "2016-01-01", 8).random(3)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c) and not np.array_equal(a, d)


# -- spot values ------------------------------------------------------------------------


def test_shape_link_anchor_values():
    assert link_g3_inverse(0.53) == pytest.approx(3.699, abs=1e-3)
    assert link_g3_inverse(1.52) == pytest.approx(6.572, abs=1e-3)


def test_large_nu_matches_normal():
    grid = np.linspace(-6, 6, 241)
    assert np.max(np.abs(t3_cdf(grid, 0.0, 1.0, 1e6) - stats.norm.cdf(grid))) < 1e-4


def test_t3_cdf_symmetry_and_median():
    assert float(t3_cdf(1.7, 1.7, 2.0, 5.0)) == pytest.approx(0.5)
    assert float(t3_quantile(0.5, 1.7, 2.0, 5.0)) == pytest.approx(1.7)


def test_sample_variance_with_sd_two():
    x = t3_sample(0.0, 2.0, 6.0, np.random.default_rng(2), 1_000_000)
    assert x.var() == pytest.approx(4.0, rel=0.03)


def test_trade_indicator_frequency_binomial():
    alpha, _ = zit_sample(ZeroInflatedTParams(0.3, 0.0, 1.0, 5.0), np.random.default_rng(8), 100_000)
    assert abs(alpha.mean() - 0.3) < 3 * np.sqrt(0.3 * 0.7 / 1e5)


def test_monotone_cdf_identity_and_knots():
    xs = np.linspace(0, 1, 11)
    cdf = MonotoneCdf(xs, xs)
    g = np.linspace(0, 1, 1001)
    assert np.max(np.abs(cdf(g) - g)) < 1e-12
    ys = np.array([0, 0.05, 0.1, 0.4, 0.45, 0.5, 0.8, 0.9, 0.95, 0.99, 1.0])
    np.testing.assert_allclose(MonotoneCdf(xs, ys)(xs), ys, atol=1e-14)


def test_countermonotone_alternates():
    u = np.full((1, 5), 0.2)
    np.testing.assert_allclose(copula_transform(u, "countermonotone")[0], [0.2, 0.8, 0.2, 0.8, 0.2])


def test_independence_reorder_is_deterministic_for_seed():
    ens = np.random.default_rng(0).normal(size=(20, 3))
    a = reorder_to_copula(ens, "independence", np.random.default_rng(5))
    b = reorder_to_copula(ens, "independence", np.random.default_rng(5))
    np.testing.assert_array_equal(a, b)
