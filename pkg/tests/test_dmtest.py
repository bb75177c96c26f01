import numpy as np
import pytest
from scipy import stats

from idtraj.dmtest import default_lag, dm_matrix, dm_test, newey_west_variance, write_dm_matrix
from idtraj.errors import ContractError


def test_identical_losses_are_degenerate():
    x = np.random.default_rng(0).gamma(2.0, size=(40, 2))
    res = dm_test(x, x)
    assert res.degenerate and np.isnan(res.p_a_better)


def test_normal_oracle_value():
    rng = np.random.default_rng(1)
    z = rng.normal(size=100)
    delta = (z - z.mean()) / z.std() - 0.2  # sample mean -0.2, sd 1
    b = np.full(100, 5.0)
    res = dm_test(b + delta, b, lag=0)
    assert res.statistic == pytest.approx(-2.0, abs=1e-9)
    assert res.p_a_better == pytest.approx(stats.norm.cdf(-2.0), abs=1e-9)


def test_swap_and_complement_are_exact():
    rng = np.random.default_rng(2)
    a, b = rng.gamma(2.0, size=(60, 3)), rng.gamma(2.1, size=(60, 3))
    ab, ba = dm_test(a, b), dm_test(b, a)
    assert ab.p_a_better == ba.p_b_better and ab.p_b_better == ba.p_a_better
    assert ab.p_a_better + ab.p_b_better == 1.0


def test_input_contracts():
    a = np.ones((20, 2))
    with pytest.raises(ContractError):
        dm_test(a, a)
    with pytest.raises(ContractError):
        dm_test(np.ones((40, 2)), np.ones((40, 3)))
    with pytest.raises(ContractError):
        dm_test(-np.ones(40), np.ones(40))


def test_newey_west_lag_zero_is_population_variance():
    x = np.random.default_rng(3).normal(size=50)
    assert newey_west_variance(x, 0) == pytest.approx(x.var())
    assert default_lag(1000) == 10 and default_lag(40) == 3


def test_matrix_orientation(tmp_path):
    rng = np.random.default_rng(4)
    good = rng.gamma(2.0, size=(80, 2))
    losses = {"good": good, "bad": good + 0.5 + rng.normal(0, 0.1, size=(80, 2)).clip(-0.4)}
    m = dm_matrix(losses, ["good", "bad"])
    # row "bad", column "good": p-value that good beats bad
    assert m[1, 0] < 1e-6 and m[0, 1] > 1 - 1e-6
    write_dm_matrix(tmp_path / "p.csv", ["good", "bad"], m)
    assert (tmp_path / "p.csv").read_text().splitlines()[0] == "worse\\better,good,bad"
