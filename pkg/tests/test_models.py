import numpy as np
import pytest
from scipy import stats

from idtraj.errors import ContractError, EstimationError
from idtraj.marketdata import SyntheticConfig, generate_synthetic_market
from idtraj.models import (
    MODEL_IDS,
    Ensemble,
    MixModel,
    ModelSpec,
    NaiveModel,
    RandomWalkModel,
    TargetState,
    fit_model,
    true_model,
)
from idtraj.recursion import MixComponents
from idtraj.statcore import substream


@pytest.fixture(scope="module")
def window(small_market):
    store, truth = small_market
    panel = store.panels[store.hours[0]]
    return panel.subset(np.arange(50)), TargetState.from_panel(panel, 50), truth


@pytest.fixture(scope="module")
def fitted(window):
    panel, _, _ = window
    cache = {}
    return {m: fit_model(m, panel, cache) for m in MODEL_IDS}


def test_every_model_produces_finite_ensembles(window, fitted):
    _, state, _ = window
    for m, model in fitted.items():
        ens = model.ensemble(state, 64, np.random.default_rng(0))
        assert ens.values.shape == (64, 31), m
        assert np.all(np.isfinite(ens.values)), m
        assert ens.model_id == m


def test_ensembles_are_reproducible(window, fitted):
    _, state, _ = window
    for m in ("Naive", "MV.t", "RW.t", "LQR.Gauss", "Mix.t.mu.sigma"):
        a = fitted[m].simulate(state, 32, substream(9, m, str(state.day), state.hour))
        b = fitted[m].simulate(state, 32, substream(9, m, str(state.day), state.hour))
        np.testing.assert_array_equal(a, b)


def test_paths_start_from_origin_price(window, fitted):
    _, state, _ = window
    for m in ("RW.N", "Mix.RW.t"):
        v = fitted[m].simulate(state, 200, np.random.default_rng(1))
        steps = np.diff(np.column_stack([np.full(200, state.origin_price), v]), axis=1)
        np.testing.assert_allclose(np.cumsum(steps, axis=1) + state.origin_price, v)
        assert np.any(steps == 0) == (m == "Mix.RW.t")


def test_zero_trade_probability_gives_constant_paths(window):
    _, state, _ = window
    comp = MixComponents(lambda rows: np.zeros(rows.shape[0]), lambda rows: np.zeros(rows.shape[0]),
                         lambda rows, p, t: np.ones(rows.shape[0]), 5.0)
    v = MixModel(comp, 31, "Mix.t.mu.sigma").simulate(state, 50, np.random.default_rng(2))
    assert np.all(v == state.origin_price)


class PermutationStub:
    def integers(self, low, high, size):
        return np.arange(size)


def test_naive_with_permutation_stub_replays_history(window):
    panel, state, _ = window
    o = panel.spec.origin_index
    steps = panel.diffs[:, o + 1:]
    v = NaiveModel(steps).simulate(state, len(panel), PermutationStub())
    expected = state.origin_price + panel.prices[:, o + 1:] - panel.prices[:, [o]]
    np.testing.assert_allclose(v, expected, atol=1e-9)


def test_normal_walk_is_large_nu_limit(window):
    _, state, _ = window
    n = RandomWalkModel(1.3, np.inf, 1.0, 31, "RW.N").simulate(state, 4000, np.random.default_rng(3))
    t = RandomWalkModel(1.3, 1e6, 1.0, 31, "RW.t").simulate(state, 4000, np.random.default_rng(4))
    assert stats.ks_2samp(n[:, -1], t[:, -1]).pvalue > 0.01


def test_mixture_walk_probability_extremes(window):
    panel, _, _ = window
    o = panel.spec.origin_index
    none = panel.subset(np.arange(len(panel)))
    none.traded[:] = False
    none.prices[:] = none.prices[:, [0]]
    assert fit_model("RW.t.mix.D", none).pi == 0.0
    full = panel.subset(np.arange(len(panel)))
    full.traded[:, o + 1:] = True
    assert fit_model("RW.t.mix.D", full).pi == 1.0


def test_fit_errors_name_the_model(window):
    panel, _, _ = window
    flat = panel.subset(np.arange(len(panel)))
    flat.prices[:] = 40.0
    with pytest.raises(EstimationError, match="^RW.N: "):
        fit_model("RW.N", flat)


def test_unknown_model_id():
    with pytest.raises(ContractError):
        ModelSpec("GARCH")


def test_true_model_step_variance():
    cfg = SyntheticConfig(n_days=5, n_products=1, fixed_pi=1.0, fixed_sigma=1.0,
                          mu_coefs=(0.0, 0.0, 0.0), nu=5.0)
    store, truth = generate_synthetic_market(cfg, seed=3)
    state = TargetState.from_panel(store.panels[store.hours[0]], 0)
    v = true_model(truth).simulate(state, 20_000, np.random.default_rng(5))
    first = v[:, 0] - state.origin_price
    assert first.var() == pytest.approx(1.0, abs=0.06)


def test_truth_trade_frequency_matches_logit(window):
    panel, state, truth = window
    v = true_model(truth).simulate(state, 5000, np.random.default_rng(6))
    traded_first = np.mean(v[:, 0] != state.origin_price)
    assert 0.05 < traded_first < 0.99


def test_ensemble_round_trip(tmp_path):
    ens = Ensemble(np.arange(6.0).reshape(2, 3) / 7, 40.25, "2016-01-04", 8, "RW.N", {"master": 1})
    ens.write(tmp_path / "e.csv")
    back = Ensemble.read(tmp_path / "e.csv")
    np.testing.assert_array_equal(back.values, ens.values)
    assert back.seed == {"master": 1} and back.origin_price == 40.25
    with pytest.raises(ContractError):
        Ensemble(np.array([1.0, np.nan])[None, :], 1.0, "d", 1, "x")
