"""Probabilistic forecasting of price paths in continuous intraday electricity markets.

Subpackages and modules
-----------------------
marketdata
    Trade ingestion, 5-minute VWAP grids, synthetic markets.
designmatrix
    Regressors for the trade-probability, location, scale and quantile models.
statcore
    Links, t distribution, P-splines, monotone splines, copulas, random streams.
estimators
    Logit lasso, t location-scale regression, linear quantile regression,
    multivariate normal/t fits.
models
    The twelve ensemble generators.
scoring, dmtest
    Ensemble scores and Diebold-Mariano tests.
backtest, cli
    Rolling-window studies and the command-line driver.
"""

from .backtest import BacktestConfig, copula_experiment, evaluate, run
from .models import MODEL_IDS, Ensemble, ModelSpec, TargetState, fit_model, true_model

__version__ = "0.1.0"

__all__ = [
    "BacktestConfig", "copula_experiment", "evaluate", "run", "MODEL_IDS", "Ensemble",
    "ModelSpec", "TargetState", "fit_model", "true_model", "__version__",
]
