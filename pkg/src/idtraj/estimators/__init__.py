"""Estimators for the trade probability, t regression, quantile regression
and multivariate trajectory laws, plus versioned JSON persistence."""

import json

from ..errors import ContractError
from .logit_lasso import LogitLassoFit, fit_logit_lasso, kkt_violation, linear_predictor, predict_pi
from .lqr import LqrFit, TAUS, build_marginal_cdf, fit_lqr, pinball_loss, quantile_regression
from .mv import NU_GRID, MvFit, fit_mv
from .tgamlss import (
    VARIANTS,
    SplineTerm,
    TGamFit,
    fit_t_gamlss,
    observed_information_se,
    t_loglik,
)

SCHEMA = "idtraj-fit"
SCHEMA_VERSION = 1
_KINDS = {"logit_lasso": LogitLassoFit, "t_gamlss": TGamFit, "lqr": LqrFit, "mv": MvFit}


def fit_to_json(fit):
    """Serialise any fit object to a versioned JSON string."""
    return json.dumps({"schema": SCHEMA, "version": SCHEMA_VERSION, "fit": fit.to_dict()},
                      sort_keys=True)


def fit_from_json(text):
    doc = json.loads(text)
    if doc.get("schema") != SCHEMA:
        raise ContractError("not a serialised fit")
    if doc.get("version") != SCHEMA_VERSION:
        raise ContractError(f"unsupported fit version {doc.get('version')}")
    body = doc["fit"]
    try:
        cls = _KINDS[body["kind"]]
    except KeyError:
        raise ContractError(f"unknown fit kind {body.get('kind')!r}") from None
    return cls.from_dict(body)


__all__ = [
    "LogitLassoFit", "fit_logit_lasso", "kkt_violation", "linear_predictor", "predict_pi",
    "LqrFit", "TAUS", "build_marginal_cdf", "fit_lqr", "pinball_loss", "quantile_regression",
    "NU_GRID", "MvFit", "fit_mv", "VARIANTS", "SplineTerm", "TGamFit", "fit_t_gamlss",
    "observed_information_se", "t_loglik", "fit_to_json", "fit_from_json",
]
