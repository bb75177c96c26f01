import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from idtraj.errors import ContractError
from idtraj.scoring import (
    TAUS,
    coverage_hits,
    crps_pinball,
    dawid_sebastiani,
    empirical_quantiles,
    energy_score,
    mae_rmse,
    pinball,
    score_ensemble,
    summarize,
    variogram_score,
)

# -- energy score -------------------------------------------------------------------


def test_energy_score_hand_cases():
    assert energy_score([1.0, 2.0], [[1.0, 2.0], [1.0, 2.0]]) == (0.0, 0.0, 0.0)
    es, ed, ei = energy_score([1.0], [[0.0], [2.0]])
    assert (es, ed, ei) == pytest.approx((0.0, 1.0, 2.0), abs=1e-12)
    es, ed, ei = energy_score([0.0], [[1.0], [1.0]])
    assert (es, ed, ei) == pytest.approx((1.0, 1.0, 0.0), abs=1e-12)


def test_energy_score_needs_two_members():
    with pytest.raises(ContractError):
        energy_score([0.0, 1.0], [[0.0, 1.0]])


def test_energy_score_matches_brute_force():
    rng = np.random.default_rng(0)
    obs, ens = rng.normal(size=5), rng.normal(size=(9, 5))
    ed = np.mean(np.linalg.norm(ens - obs, axis=1))
    pair = np.linalg.norm(ens[:, None] - ens[None], axis=2)
    ei = pair.sum() / (9 * 8)
    assert energy_score(obs, ens) == pytest.approx((ed - ei / 2, ed, ei), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(arrays(float, (6, 3), elements=st.floats(-50, 50)), arrays(float, 3, elements=st.floats(-50, 50)))
def test_scores_are_non_negative(ens, obs):
    assert energy_score(obs, ens)[0] >= -1e-9
    assert variogram_score(obs, ens) >= 0
    assert np.all(crps_pinball(obs, ens) >= 0)


# -- pinball / CRPS ---------------------------------------------------------------------


def test_pinball_examples():
    assert pinball(2.0, 1.0, 0.5) == 0.5
    assert pinball(0.0, 1.0, 0.25) == pytest.approx(0.75)


def test_point_ensemble_crps_is_half_the_error():
    assert crps_pinball(1.0, np.zeros(7)) == pytest.approx(0.5, abs=1e-12)
    assert crps_pinball(-3.0, np.full(4, 1.0)) == pytest.approx(2.0, abs=1e-12)
    assert crps_pinball(2.5, np.full(5, 2.5)) == 0.0
    assert TAUS.mean() == pytest.approx(0.5, abs=1e-15)


def test_type7_quantiles_match_numpy():
    x = np.random.default_rng(1).normal(size=(37, 2))
    np.testing.assert_allclose(empirical_quantiles(x, TAUS), np.quantile(x, TAUS, axis=0), atol=1e-12)


# -- variogram ------------------------------------------------------------------------------


def test_variogram_hand_cases():
    assert variogram_score([0.0, 1.0], [[0.0, 0.0], [0.0, 0.0]]) == pytest.approx(0.5, abs=1e-12)
    obs = np.array([0.3, -1.0, 2.0])
    assert variogram_score(obs, np.tile(obs, (4, 1))) == 0.0


def test_variogram_is_member_permutation_invariant():
    rng = np.random.default_rng(2)
    obs, ens = rng.normal(size=4), rng.normal(size=(11, 4))
    assert variogram_score(obs, ens) == pytest.approx(variogram_score(obs, ens[::-1]), rel=1e-13)


# -- Dawid-Sebastiani ---------------------------------------------------------------------------


def test_dss_chi_square_moment():
    rng = np.random.default_rng(3)
    T, reps = 3, 400
    vals = []
    for _ in range(reps):
        # obs and members drawn independently from N(0, I): the quadratic form is chi-square(T)
        obs = rng.normal(size=T)
        vals.append(dawid_sebastiani(obs, rng.normal(size=(10_000, T)))[0])
    se = np.sqrt(2 * T / reps)
    assert abs(np.mean(vals) - T) < 3 * se + 0.01


def test_dss_affine_equivariance():
    rng = np.random.default_rng(4)
    obs, ens = rng.normal(size=3), rng.normal(size=(50, 3))
    c = 2.5
    base, _ = dawid_sebastiani(obs, ens)
    scaled, _ = dawid_sebastiani(c * obs, c * ens)
    assert scaled - base == pytest.approx(3 * np.log(c ** 2), rel=1e-9)


def test_dss_identical_members_are_degenerate():
    score, degenerate = dawid_sebastiani(np.zeros(3), np.ones((10, 3)))
    assert degenerate and np.isnan(score)
    with pytest.raises(ContractError):
        dawid_sebastiani(np.zeros(3), np.ones((3, 3)))


# -- coverage / MAE / RMSE -----------------------------------------------------------------------


def test_coverage_cases():
    members = np.linspace(-1, 1, 101)
    assert coverage_hits(-5.0, members, 0.9) == 0
    for level in (0.5, 0.9, 0.99):
        assert coverage_hits(0.0, members, level) == 1
    # ties with the interval end count as not covered
    assert coverage_hits(0.0, np.zeros(10), 0.9) == 0


def test_mae_rmse_cases():
    obs = [np.array([1.0, 2.0])]
    sym = [np.array([[0.0, 1.0], [2.0, 3.0]])]
    assert mae_rmse(obs, sym)[0] == 0.0
    single = [np.array([[0.0, 0.0]]), np.array([[1.0, 5.0]])]
    obs2 = [np.array([1.0, 2.0]), np.array([1.0, 2.0])]
    mae, rmse = mae_rmse(obs2, single)
    assert mae == pytest.approx((1 + 2 + 0 + 3) / 4)
    assert rmse == pytest.approx(np.sqrt((1 + 4 + 0 + 9) / 4))


def test_score_ensemble_consistency():
    rng = np.random.default_rng(5)
    obs, ens = rng.normal(size=31), rng.normal(size=(200, 31))
    s = score_ensemble(obs, ens)
    assert s["es"] == pytest.approx(s["ed"] - s["ei"] / 2)
    assert s["crps"] == pytest.approx(np.mean(crps_pinball(obs, ens)))
    assert s["pb"].shape == (99,) and s["crps_t"].shape == (31,)
    # reordering members within columns changes nothing marginal
    shuffled = np.column_stack([rng.permutation(ens[:, j]) for j in range(31)])
    t = score_ensemble(obs, shuffled)
    for key in ("crps", "mae", "mse", "cov50", "cov90", "cov99"):
        assert t[key] == s[key]
    np.testing.assert_array_equal(t["pb"], s["pb"])


def test_summarize_excludes_degenerate_dss():
    recs = {"A": [{"es": 1.0, "ed": 1.0, "ei": 0.0, "vs": 0.0, "dss": 2.0, "dss_degenerate": False,
                   "crps": 1.0, "mae": 1.0, "mse": 4.0, "cov50": 1.0, "cov90": 1.0, "cov99": 1.0},
                  {"es": 3.0, "ed": 3.0, "ei": 0.0, "vs": 0.0, "dss": float("nan"), "dss_degenerate": True,
                   "crps": 1.0, "mae": 1.0, "mse": 0.0, "cov50": 0.0, "cov90": 0.0, "cov99": 0.0}]}
    with pytest.warns(UserWarning):
        row = summarize(recs, {"A": 2})[0]
    assert row["es"] == 2.0 and row["dss"] == 2.0 and row["rmse"] == pytest.approx(np.sqrt(2))
    assert row["dss_degenerate"] == 1 and row["failures"] == 2


# -- propriety ------------------------------------------------------------------------------------


def test_true_model_beats_inflated_model_on_energy_score():
    from idtraj.marketdata import SyntheticConfig, generate_synthetic_market
    from idtraj.models import TargetState, true_model
    from idtraj.recursion import MixComponents

    store, truth = generate_synthetic_market(SyntheticConfig(n_days=300, n_products=1), seed=21)
    panel = store.panels[store.hours[0]]
    o = store.spec.origin_index
    good = true_model(truth)
    comp = truth.components()
    wide = true_model(truth)
    wide.components = MixComponents(comp.pi, comp.mu, lambda *a: 1.5 * comp.sigma(*a), comp.nu)
    diff = []
    for i in range(len(panel)):
        state = TargetState.from_panel(panel, i)
        obs = panel.prices[i, o + 1:]
        a = energy_score(obs, good.simulate(state, 100, np.random.default_rng(i)))[0]
        b = energy_score(obs, wide.simulate(state, 100, np.random.default_rng(i)))[0]
        diff.append(a - b)
    diff = np.asarray(diff)
    assert diff.mean() + 1.645 * diff.std(ddof=1) / np.sqrt(diff.size) < 0
