"""Additive-randomization estimators of post-selection prediction error.

The data vector is perturbed with Gaussian noise scaled by `alpha`; model
search runs on the perturbed vector while an independent companion vector
prices the fit. Averaging the resulting unbiased single-draw estimates over
many perturbations gives the headline estimator, from which search degrees
of freedom, a BIC-style criterion, penalty tuning, and an out-of-sample
variant all follow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .design import SelectorSpec, Support, as_design
from .exceptions import InvalidInputError, SearchRiskError, UnsupportedRegimeError
from .selection import (RANK_RTOL, concretize, make_selector, refit_coefficients,
                        relaxed_fit)
from .util import check_vector, child_seed, ordered_map

MAX_ALPHA = 1e4
DEFAULT_DRAWS = 50

_NOISE_SOURCES = ("user_supplied", "ols_residual")
_RECONSTRUCTION_RTOL = 1e-10
_REPORT_MEAN_RTOL = 1e-12


@dataclass(frozen=True)
class NoiseLevel:
    """A known or estimated noise variance, with its provenance."""

    sigma2: float
    source: str = "user_supplied"

    def __post_init__(self):
        sigma2 = float(self.sigma2)
        if not np.isfinite(sigma2) or sigma2 <= 0:
            raise InvalidInputError(f"sigma2 must be finite and > 0, got {self.sigma2}")
        if self.source not in _NOISE_SOURCES:
            raise InvalidInputError(
                f"noise source must be one of {_NOISE_SOURCES}, got {self.source!r}")
        object.__setattr__(self, "sigma2", sigma2)

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)


def _check_alpha(alpha) -> float:
    alpha = float(alpha)
    if not np.isfinite(alpha) or alpha <= 0 or alpha > MAX_ALPHA:
        raise InvalidInputError(f"alpha must lie in (0, {MAX_ALPHA:g}], got {alpha}")
    return alpha


@dataclass(frozen=True)
class RandomizedPair:
    """One randomization draw: the perturbation, the selection vector, and
    the independent pricing vector.

    The three vectors satisfy the reconstruction identity
    y = y_star / (1 + alpha) + alpha * y_minus / (1 + alpha), which is
    validated on construction.
    """

    omega: np.ndarray
    y_star: np.ndarray
    y_minus: np.ndarray
    alpha: float

    def __post_init__(self):
        alpha = _check_alpha(self.alpha)
        omega = check_vector(self.omega, name="omega")
        n = omega.shape[0]
        y_star = check_vector(self.y_star, n, name="y_star")
        y_minus = check_vector(self.y_minus, n, name="y_minus")
        y_from_star = y_star - omega
        y_from_minus = y_minus + omega / alpha
        scale = max(float(np.max(np.abs(y_from_star))), 1.0)
        if np.max(np.abs(y_from_star - y_from_minus)) > _RECONSTRUCTION_RTOL * scale:
            raise InvalidInputError("randomized pair is inconsistent: "
                                    "y_star - omega and y_minus + omega/alpha disagree")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "y_star", y_star)
        object.__setattr__(self, "y_minus", y_minus)
        object.__setattr__(self, "alpha", alpha)

    @property
    def y(self) -> np.ndarray:
        """The unperturbed data, reconstructed from the pair."""
        return self.y_star / (1.0 + self.alpha) + self.alpha * self.y_minus / (1.0 + self.alpha)


def randomize(y, alpha, sigma, rng_seed=None, *, omega=None) -> RandomizedPair:
    """Draw omega ~ N(0, alpha * sigma^2 I) and form the randomized pair.

    Parameters
    ----------
    y : array of shape (n,)
    alpha : float
        Randomization scale, in (0, 1e4].
    sigma : float
        Noise standard deviation.
    rng_seed : int or SeedSequence, optional
        Makes the draw reproducible.
    omega : array, optional
        Inject an explicit perturbation instead of sampling (test hook).

    Returns
    -------
    RandomizedPair
        With y_star = y + omega and y_minus = y - omega / alpha.
    """
    y = check_vector(y)
    alpha = _check_alpha(alpha)
    sigma = float(sigma)
    if not np.isfinite(sigma) or sigma <= 0:
        raise InvalidInputError(f"sigma must be finite and > 0, got {sigma}")
    if omega is None:
        rng = np.random.default_rng(rng_seed)
        omega = math.sqrt(alpha) * sigma * rng.standard_normal(y.shape[0])
    else:
        omega = check_vector(omega, y.shape[0], name="omega")
    return RandomizedPair(omega=omega, y_star=y + omega,
                          y_minus=y - omega / alpha, alpha=alpha)


def default_alpha(n: int) -> float:
    """The variance-bias balancing randomization scale, n ** (-1/4)."""
    n = int(n)
    if n < 1:
        raise InvalidInputError(f"n must be >= 1, got {n}")
    return float(n) ** -0.25


@dataclass(frozen=True)
class EstimateReport:
    """Averaged randomized estimate with its per-draw trail.

    `estimate` is the arithmetic mean of `per_draw` (validated to 1e-12
    relative tolerance); `supports` records the model selected on each
    perturbed vector. Estimates are on the total (sum over observations)
    scale; divide by `n_obs` via the `*_per_obs` properties.
    """

    estimate: float
    per_draw: tuple
    n_draws: int
    alpha: float
    sigma2: float
    supports: tuple
    mc_se: float
    n_obs: int

    def __post_init__(self):
        if self.n_draws < 1:
            raise InvalidInputError(f"n_draws must be >= 1, got {self.n_draws}")
        if len(self.per_draw) != self.n_draws or len(self.supports) != self.n_draws:
            raise InvalidInputError("per_draw and supports must each have n_draws entries")
        mean = float(np.mean(self.per_draw))
        scale = max(abs(mean), abs(self.estimate), 1.0)
        if abs(self.estimate - mean) > _REPORT_MEAN_RTOL * scale:
            raise InvalidInputError("estimate must equal the mean of per_draw")

    @property
    def estimate_per_obs(self) -> float:
        return self.estimate / self.n_obs

    @property
    def per_draw_per_obs(self) -> tuple:
        return tuple(v / self.n_obs for v in self.per_draw)

    def support_size_counts(self) -> dict:
        counts = {}
        for s in self.supports:
            counts[len(s)] = counts.get(len(s), 0) + 1
        return dict(sorted(counts.items()))


def err_alpha_single(X, y, pair: RandomizedPair, spec, noise: NoiseLevel, *,
                     rng_seed=None) -> tuple:
    """Single-draw unbiased estimate of the randomized-selection prediction error.

    Selects a model on the perturbed vector `pair.y_star`, then prices the
    refit on the original `y` using the independent companion `pair.y_minus`:

        ||y_minus - H_M y||^2 + 2 tr(H_M) sigma^2 - n sigma^2 / alpha.

    The estimate can be negative in finite samples (the last term is a large
    negative offset); it is returned unclamped because clamping would break
    unbiasedness.

    Returns
    -------
    (value, support) : (float, Support)
    """
    X = as_design(X)
    y = check_vector(y, X.n)
    if pair.omega.shape[0] != X.n:
        raise InvalidInputError("randomized pair does not match the design's row count")
    selector = make_selector(spec, sigma=noise.sigma, rng_seed=rng_seed)
    support = selector(X, pair.y_star)
    fitted = relaxed_fit(X, y, support)
    resid = pair.y_minus - fitted
    value = float(resid @ resid
                  + 2.0 * len(support) * noise.sigma2
                  - X.n * noise.sigma2 / pair.alpha)
    return value, support


def _concrete_spec(spec, X, noise, rng_seed, n_slots):
    """Resolve a kappa-form spec once, using the substream after the draws."""
    if isinstance(spec, SelectorSpec):
        return concretize(spec, X, sigma=noise.sigma,
                          rng_seed=child_seed(rng_seed, n_slots))
    return spec


def err_alpha_averaged(X, y, alpha, spec, noise: NoiseLevel,
                       n_draws: int = DEFAULT_DRAWS, rng_seed=None, *,
                       workers: int = 1, omegas=None) -> EstimateReport:
    """Average the single-draw estimate over independent randomizations.

    Each draw i derives its own random substream from (rng_seed, i), so the
    report is identical for any `workers` count or scheduling. Supplying
    `omegas` (a sequence of `n_draws` perturbation vectors) bypasses the
    random draws entirely.

    Returns
    -------
    EstimateReport
        Mean of the per-draw values, the per-draw trail, the selected
        supports, and the between-draw standard error.
    """
    X = as_design(X)
    y = check_vector(y, X.n)
    alpha = _check_alpha(alpha)
    n_draws = int(n_draws)
    if n_draws < 1:
        raise InvalidInputError(f"n_draws must be >= 1, got {n_draws}")
    if omegas is not None and len(omegas) != n_draws:
        raise InvalidInputError("omegas must supply one vector per draw")
    spec = _concrete_spec(spec, X, noise, rng_seed, n_draws)

    def one_draw(i):
        try:
            if omegas is None:
                pair = randomize(y, alpha, noise.sigma, rng_seed=child_seed(rng_seed, i))
            else:
                pair = randomize(y, alpha, noise.sigma, omega=omegas[i])
            return err_alpha_single(X, y, pair, spec, noise)
        except SearchRiskError as exc:
            raise type(exc)(f"randomization draw {i} failed: {exc}") from exc

    results = ordered_map(one_draw, range(n_draws), workers)
    values = tuple(v for v, _ in results)
    supports = tuple(s for _, s in results)
    arr = np.array(values)
    mc_se = float(arr.std(ddof=1) / math.sqrt(n_draws)) if n_draws > 1 else float("nan")
    return EstimateReport(estimate=float(arr.mean()), per_draw=values,
                          n_draws=n_draws, alpha=alpha, sigma2=noise.sigma2,
                          supports=supports, mc_se=mc_se, n_obs=X.n)


def _df_pieces(X, y, alpha, spec, noise, n_draws, rng_seed, workers):
    spec = _concrete_spec(spec, X, noise, rng_seed, n_draws)
    selector = make_selector(spec, sigma=noise.sigma, rng_seed=rng_seed)
    support = selector(X, y)  # selection on the original data, no randomization
    mu_hat = relaxed_fit(X, y, support)
    resid2 = float(np.sum((y - mu_hat) ** 2))
    report = err_alpha_averaged(X, y, alpha, spec, noise, n_draws, rng_seed,
                                workers=workers)
    df = (report.estimate - resid2) / (2.0 * noise.sigma2)
    return resid2, report, df, support


def search_df(X, y, alpha, spec, noise: NoiseLevel, n_draws: int = DEFAULT_DRAWS,
              rng_seed=None, *, workers: int = 1) -> float:
    """Degrees of freedom of the search-then-refit rule.

    Inverts the covariance-penalty identity: the averaged randomized error
    estimate stands in for the unobservable prediction error, and the
    residual sum of squares of the fit on the original data is subtracted,

        df = (err_estimate - ||y - mu_hat||^2) / (2 sigma^2).

    For a selector that ignores the data this recovers tr(H) in expectation;
    genuine model search inflates it beyond the selected size.
    """
    X = as_design(X)
    y = check_vector(y, X.n)
    _, _, df, _ = _df_pieces(X, y, _check_alpha(alpha), spec, noise,
                             int(n_draws), rng_seed, workers)
    return df


def bic_criterion(X, y, alpha, spec, noise: NoiseLevel, n_draws: int = DEFAULT_DRAWS,
                  rng_seed=None, *, workers: int = 1) -> float:
    """BIC-style criterion with the search-adjusted degrees of freedom:

        ||y - mu_hat||^2 / (n sigma^2) + (log n / n) * df.
    """
    X = as_design(X)
    y = check_vector(y, X.n)
    resid2, _, df, _ = _df_pieces(X, y, _check_alpha(alpha), spec, noise,
                                  int(n_draws), rng_seed, workers)
    n = X.n
    return resid2 / (n * noise.sigma2) + (math.log(n) / n) * df


def tune_lambda(X, y, alpha, lambda_grid, noise: NoiseLevel,
                n_draws: int = DEFAULT_DRAWS, rng_seed=None, *,
                workers: int = 1) -> tuple:
    """Pick the lasso penalty minimizing the averaged randomized estimate.

    Every grid point reuses the same randomization seed (common random
    numbers), which removes spurious between-penalty noise from the
    comparison. Ties go to the smaller penalty; duplicate grid entries
    resolve to the first occurrence.

    Returns
    -------
    (lambda_optimal, reports) : (float, tuple of EstimateReport)
        Reports are in grid order, one per grid point.
    """
    grid = [float(l) for l in lambda_grid]
    if not grid:
        raise InvalidInputError("lambda_grid must be nonempty")
    reports = []
    best_lam, best_val = None, math.inf
    for lam in grid:
        report = err_alpha_averaged(X, y, alpha, SelectorSpec.lasso(lam), noise,
                                    n_draws, rng_seed, workers=workers)
        reports.append(report)
        if report.estimate < best_val or (report.estimate == best_val and lam < best_lam):
            best_lam, best_val = lam, report.estimate
    return best_lam, tuple(reports)


def err_out_alpha(X, X_new, y, alpha, spec, noise: NoiseLevel,
                  n_draws: int = DEFAULT_DRAWS, rng_seed=None, *,
                  workers: int = 1) -> EstimateReport:
    """Out-of-sample analogue of the averaged estimator, at a new design.

    Requires the low-dimensional linear-model regime: p < n and X of full
    column rank. Per draw, the model is selected on the perturbed vector and
    the coefficients refit on `y` predict at `X_new`; the pricing term uses
    the full-design projection of the companion vector,

        ||H0 y_minus - pred_M||^2 + 2 tr(H0' Hout_M) sigma^2 + n sigma^2
            - (1 + 1/alpha) tr(H0' H0) sigma^2,

    with H0 = X_new (X'X)^{-1} X' and Hout_M the refit-then-predict map of
    the selected columns.
    """
    X = as_design(X)
    X_new = as_design(X_new)
    y = check_vector(y, X.n)
    alpha = _check_alpha(alpha)
    if X_new.p != X.p or X_new.n != X.n:
        raise InvalidInputError(
            f"new design must match the original shape {X.n} x {X.p}, "
            f"got {X_new.n} x {X_new.p}")
    if X.p >= X.n:
        raise UnsupportedRegimeError(
            "out-of-sample estimation requires p < n (high-dimensional "
            "out-of-sample error is out of scope)")
    sv = np.linalg.svd(X.entries, compute_uv=False)
    if sv[0] <= 0.0 or sv[-1] <= RANK_RTOL * sv[0]:
        raise UnsupportedRegimeError("out-of-sample estimation requires rank(X) = p")
    n_draws = int(n_draws)
    if n_draws < 1:
        raise InvalidInputError(f"n_draws must be >= 1, got {n_draws}")
    spec = _concrete_spec(spec, X, noise, rng_seed, n_draws)
    selector = make_selector(spec, sigma=noise.sigma, rng_seed=rng_seed)

    H0 = X_new.entries @ np.linalg.solve(X.gram(), X.entries.T)
    trace_h0h0 = float(np.sum(H0 * H0))
    sigma2 = noise.sigma2
    offset = X.n * sigma2 - (1.0 + 1.0 / alpha) * trace_h0h0 * sigma2

    def one_draw(i):
        try:
            pair = randomize(y, alpha, noise.sigma, rng_seed=child_seed(rng_seed, i))
            support = selector(X, pair.y_star)
            if len(support):
                coef = refit_coefficients(X, y, support)
                cols_new = X_new.columns(support)
                pred = cols_new @ coef
                # tr(H0' Hout_M) via the k x k core, avoiding an n x n product.
                core = np.linalg.solve(X.columns(support).T @ X.columns(support),
                                       X.columns(support).T @ (H0.T @ cols_new))
                trace_cross = float(np.trace(core))
            else:
                pred = np.zeros(X.n)
                trace_cross = 0.0
            resid = H0 @ pair.y_minus - pred
            value = float(resid @ resid + 2.0 * trace_cross * sigma2 + offset)
            return value, support
        except SearchRiskError as exc:
            raise type(exc)(f"randomization draw {i} failed: {exc}") from exc

    results = ordered_map(one_draw, range(n_draws), workers)
    values = tuple(v for v, _ in results)
    supports = tuple(s for _, s in results)
    arr = np.array(values)
    mc_se = float(arr.std(ddof=1) / math.sqrt(n_draws)) if n_draws > 1 else float("nan")
    return EstimateReport(estimate=float(arr.mean()), per_draw=values,
                          n_draws=n_draws, alpha=alpha, sigma2=sigma2,
                          supports=supports, mc_se=mc_se, n_obs=X.n)
