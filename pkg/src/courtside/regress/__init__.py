"""Regression and classification model family."""

from .linear import (
    GlmSpec,
    LinearFit,
    fit_huber,
    fit_lasso,
    fit_ols,
    fit_ridge,
    fit_tweedie,
    lasso_alpha_max,
    lasso_objective,
    tweedie_deviance,
)
from .metrics import Attribution, accuracy, r2_score, standardized_coefficients
from .mlp import MlpSpec, TrainReport
from .models import (
    FittedModel,
    LinearModel,
    MlpModel,
    TreeModel,
    fit_tree,
    mlp_train,
    model_from_dict,
)

__all__ = [
    "Attribution",
    "FittedModel",
    "GlmSpec",
    "LinearFit",
    "LinearModel",
    "MlpModel",
    "MlpSpec",
    "TrainReport",
    "TreeModel",
    "accuracy",
    "fit_huber",
    "fit_lasso",
    "fit_ols",
    "fit_ridge",
    "fit_tree",
    "fit_tweedie",
    "lasso_alpha_max",
    "lasso_objective",
    "mlp_train",
    "model_from_dict",
    "r2_score",
    "standardized_coefficients",
    "tweedie_deviance",
]
