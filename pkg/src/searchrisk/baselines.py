"""Reference prediction-error estimators the randomized estimator is compared to."""
from __future__ import annotations

import enum

import numpy as np

from .design import DesignMatrix, SelectorSpec, Support, as_design
from .exceptions import InvalidInputError, SearchRiskError, UnsupportedRegimeError
from .randomized import NoiseLevel
from .selection import concretize, make_selector, refit_coefficients, relaxed_fit
from .util import check_vector, child_seed, ordered_map


class BaselineKind(enum.Enum):
    CP = "cp"
    LOO_CV = "loo_cv"
    PARAMETRIC_BOOTSTRAP = "parametric_bootstrap"
    NAIVE_DF = "naive_df"


def cp_estimate(X, y, support: Support, noise: NoiseLevel) -> float:
    """Covariance-penalty estimate for the refit on `support`:

        ||y - H_M y||^2 + 2 tr(H_M) sigma^2.

    When `support` was itself chosen from `y`, this is the naive
    post-selection estimate that ignores the cost of the search; it is
    unbiased only for a data-independent support.
    """
    X = as_design(X)
    y = check_vector(y, X.n)
    fitted = relaxed_fit(X, y, support)
    resid = y - fitted
    return float(resid @ resid + 2.0 * len(support) * noise.sigma2)


def naive_df(support: Support) -> int:
    """The selected-size degrees-of-freedom count, tr(H_M) = |M|."""
    return len(support)


def sigma_ols(X, y) -> NoiseLevel:
    """Estimate the noise variance from full-model OLS residuals.

    sigma2 = ||y - P_X y||^2 / (n - p); requires p < n and X of full column
    rank. An exactly interpolating fit is degenerate (a positive variance is
    required downstream) and raises.
    """
    X = as_design(X)
    y = check_vector(y, X.n)
    if X.p >= X.n:
        raise UnsupportedRegimeError(
            "OLS noise estimation requires p < n; supply sigma2 explicitly")
    full = Support(tuple(range(X.p)))
    fitted = relaxed_fit(X, y, full)
    resid2 = float(np.sum((y - fitted) ** 2))
    if resid2 <= (1e-12 ** 2) * float(y @ y):
        raise InvalidInputError(
            "residual sum of squares is zero (y lies in the column span); "
            "the noise level is degenerate")
    return NoiseLevel(sigma2=resid2 / (X.n - X.p), source="ols_residual")


def loo_cv(X, y, spec, sigma=None, rng_seed=None, *, workers: int = 1) -> float:
    """Leave-one-out cross validation of the search-then-refit rule.

    Each fold re-runs the full selection on the remaining rows, refits, and
    predicts the held-out observation. Returns the total squared prediction
    error, sum_i (y_i - yhat_{-i})^2 -- the same total scale as prediction
    error including its noise floor.

    A kappa-form lasso penalty is resolved once on the full design; the
    procedure under evaluation is the fixed-penalty rule.
    """
    X = as_design(X)
    y = check_vector(y, X.n)
    if X.n < 2:
        raise InvalidInputError("leave-one-out needs n >= 2")
    if isinstance(spec, SelectorSpec):
        spec = concretize(spec, X, sigma=sigma, rng_seed=rng_seed)
    selector = make_selector(spec, sigma=sigma, rng_seed=rng_seed)
    mask_base = np.ones(X.n, dtype=bool)

    def fold(i):
        mask = mask_base.copy()
        mask[i] = False
        X_i = DesignMatrix.from_array(X.entries[mask])
        y_i = y[mask]
        try:
            support = selector(X_i, y_i)
            coef = refit_coefficients(X_i, y_i, support)
        except SearchRiskError as exc:
            raise type(exc)(f"leave-one-out fold {i} failed: {exc}") from exc
        pred = float(X.entries[i, list(support.indices)] @ coef) if len(support) else 0.0
        return (y[i] - pred) ** 2

    errors = ordered_map(fold, range(X.n), workers)
    return float(np.sum(errors))


def parametric_bootstrap(X, y, spec, noise: NoiseLevel, n_boot: int = 200,
                         rng_seed=None, *, workers: int = 1) -> float:
    """Covariance-penalty estimate with the penalty measured by simulation.

    A pilot fit (the refit on the support selected from `y`) centers a
    parametric resample y_b ~ N(mu_pilot, sigma^2 I); each resample re-runs
    the full selection and refit. The per-coordinate sample covariance
    between fit and response prices the optimism:

        ||y - mu_hat(y)||^2 + 2 * sum_i cov_i.

    Deterministic given `rng_seed`; replicate b draws from the substream
    (rng_seed, b), so the result is identical for any `workers` count.
    """
    X = as_design(X)
    y = check_vector(y, X.n)
    n_boot = int(n_boot)
    if n_boot < 2:
        raise InvalidInputError(f"parametric bootstrap needs n_boot >= 2, got {n_boot}")
    if isinstance(spec, SelectorSpec):
        spec = concretize(spec, X, sigma=noise.sigma,
                          rng_seed=child_seed(rng_seed, n_boot))
    selector = make_selector(spec, sigma=noise.sigma, rng_seed=rng_seed)
    pilot_support = selector(X, y)
    mu_pilot = relaxed_fit(X, y, pilot_support)
    sigma = noise.sigma

    def replicate(b):
        rng = np.random.default_rng(child_seed(rng_seed, b))
        y_b = mu_pilot + sigma * rng.standard_normal(X.n)
        support_b = selector(X, y_b)
        return y_b, relaxed_fit(X, y_b, support_b)

    draws = ordered_map(replicate, range(n_boot), workers)
    Y = np.array([d[0] for d in draws])
    MU = np.array([d[1] for d in draws])
    cov = np.sum((MU - MU.mean(axis=0)) * (Y - Y.mean(axis=0)), axis=0) / (n_boot - 1)
    resid = y - mu_pilot
    return float(resid @ resid + 2.0 * cov.sum())
