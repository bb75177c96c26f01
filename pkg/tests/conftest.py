import numpy as np
import pytest

from idtraj.marketdata import SyntheticConfig, generate_synthetic_market


@pytest.fixture(scope="session")
def small_market():
    """60 days of one synthetic product (hour 12)."""
    return generate_synthetic_market(SyntheticConfig(n_days=60, n_products=1), seed=11)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
