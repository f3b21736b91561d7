"""Prediction-error estimation for linear rules chosen by data-driven model search.

The headline estimator perturbs the response with scaled Gaussian noise,
runs the model search on the perturbed vector, and prices the refit with an
independent companion vector; averaging over perturbations gives an
unbiased estimate of the randomized-search prediction error, which tracks
the unrandomized target as the perturbation shrinks. Baselines (covariance
penalty, leave-one-out CV, parametric bootstrap), Monte-Carlo ground truth,
and the simulation-study runners live alongside it.
"""

from .baselines import (BaselineKind, cp_estimate, loo_cv, naive_df,
                        parametric_bootstrap, sigma_ols)
from .config import ExperimentConfig
from .datagen import gen_design, gen_response, pilot_truth, synthetic_wide_design
from .design import DesignMatrix, SelectorSpec, Support, as_design
from .exceptions import (ConvergenceError, EnumerationCapError, InvalidInputError,
                         RankDeficiencyError, SearchRiskError, UnsupportedRegimeError)
from .experiments import (ResultRow, ResultTable, best_subset_design, run_fig_barplot,
                          run_fig_best_subset, run_fig_df, run_fig_lambda_sweep,
                          run_fig_out_of_sample)
from .oracle import (TruthSpec, cp_variance_analytic, mc_true_df, mc_true_err,
                     mc_true_err_alpha, mc_true_err_out, quadratic_variance_check)
from .randomized import (EstimateReport, NoiseLevel, RandomizedPair, bic_criterion,
                         default_alpha, err_alpha_averaged, err_alpha_single,
                         err_out_alpha, randomize, search_df, tune_lambda)
from .selection import (concretize, hat_matrix, hat_trace, lambda_min, lasso_fit,
                        lasso_kkt_residual, make_selector, refit_coefficients,
                        relaxed_fit, select_support)
from .util import McValue

__version__ = "0.1.0"

__all__ = [
    "BaselineKind", "ConvergenceError", "DesignMatrix", "EnumerationCapError",
    "EstimateReport", "ExperimentConfig", "InvalidInputError", "McValue",
    "NoiseLevel", "RandomizedPair", "RankDeficiencyError", "ResultRow",
    "ResultTable", "SearchRiskError", "SelectorSpec", "Support", "TruthSpec",
    "UnsupportedRegimeError", "as_design", "best_subset_design", "bic_criterion",
    "concretize", "cp_estimate", "cp_variance_analytic", "default_alpha",
    "err_alpha_averaged", "err_alpha_single", "err_out_alpha", "gen_design",
    "gen_response", "hat_matrix", "hat_trace", "lambda_min", "lasso_fit",
    "lasso_kkt_residual", "loo_cv", "make_selector", "mc_true_df", "mc_true_err",
    "mc_true_err_alpha", "mc_true_err_out", "naive_df", "parametric_bootstrap",
    "pilot_truth", "quadratic_variance_check", "randomize", "refit_coefficients",
    "relaxed_fit", "run_fig_barplot", "run_fig_best_subset", "run_fig_df",
    "run_fig_lambda_sweep", "run_fig_out_of_sample", "search_df", "select_support",
    "sigma_ols", "synthetic_wide_design", "tune_lambda",
]
