"""Ground-truth Monte Carlo for known (mu, sigma) and analytic variance oracles.

Everything here exists to pin down what the estimators elsewhere are trying
to hit: prediction error of a search-then-refit rule, its randomized-search
variant, the out-of-sample version, and the true degrees of freedom. All
Monte-Carlo outputs carry standard errors so comparisons can be made in
SE units.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .design import SelectorSpec, as_design
from .exceptions import InvalidInputError
from .randomized import _check_alpha
from .selection import concretize, make_selector, refit_coefficients, relaxed_fit
from .util import McValue, check_vector, child_seed, mean_se, ordered_map

_CHUNK = 512


@dataclass(frozen=True)
class TruthSpec:
    """A known data-generating truth: mean vector, noise level, and MC budget."""

    mu: np.ndarray
    sigma2: float
    replications: int = 10_000
    seed: object = None

    def __post_init__(self):
        mu = check_vector(self.mu, name="mu")
        sigma2 = float(self.sigma2)
        if not np.isfinite(sigma2) or sigma2 <= 0:
            raise InvalidInputError(f"sigma2 must be finite and > 0, got {self.sigma2}")
        if int(self.replications) < 2:
            raise InvalidInputError("replications must be >= 2")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma2", sigma2)
        object.__setattr__(self, "replications", int(self.replications))

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    @property
    def n(self) -> int:
        return self.mu.shape[0]


def _resolved_selector(X, spec, truth: TruthSpec):
    if isinstance(spec, SelectorSpec):
        spec = concretize(spec, X, sigma=truth.sigma,
                          rng_seed=child_seed(truth.seed, truth.replications))
    return make_selector(spec, sigma=truth.sigma, rng_seed=truth.seed)


def _mc_over_replicates(one_replicate, truth: TruthSpec, workers: int) -> McValue:
    # Fixed-size chunks with per-replicate substreams: the summary is
    # bitwise identical for any worker count.
    chunks = [range(s, min(s + _CHUNK, truth.replications))
              for s in range(0, truth.replications, _CHUNK)]

    def run_chunk(indices):
        return [one_replicate(r) for r in indices]

    values = np.concatenate([np.asarray(v) for v in ordered_map(run_chunk, chunks, workers)])
    return mean_se(values)


def mc_true_err(X, truth: TruthSpec, spec, *, workers: int = 1) -> McValue:
    """Monte-Carlo prediction error of the rule that selects on the data.

    Uses the exact identity E||y_new - v||^2 = ||mu - v||^2 + n sigma^2 to
    avoid sampling y_new (halving the MC variance): each replicate draws a
    fresh y, selects, refits, and scores ||mu - fit||^2 + n sigma^2.
    """
    X = as_design(X)
    if truth.n != X.n:
        raise InvalidInputError("truth mean length must match the design rows")
    selector = _resolved_selector(X, spec, truth)
    mu, sigma, floor = truth.mu, truth.sigma, X.n * truth.sigma2

    def one(r):
        rng = np.random.default_rng(child_seed(truth.seed, r))
        y = mu + sigma * rng.standard_normal(X.n)
        fit = relaxed_fit(X, y, selector(X, y))
        return float(np.sum((mu - fit) ** 2) + floor)

    return _mc_over_replicates(one, truth, workers)


def mc_true_err_alpha(X, truth: TruthSpec, spec, alpha, *, workers: int = 1) -> McValue:
    """Monte-Carlo prediction error when selection sees a perturbed vector.

    As `mc_true_err`, but each replicate also draws omega ~ N(0, alpha
    sigma^2 I) and selects on y + omega while still refitting on y.
    """
    X = as_design(X)
    alpha = _check_alpha(alpha)
    if truth.n != X.n:
        raise InvalidInputError("truth mean length must match the design rows")
    selector = _resolved_selector(X, spec, truth)
    mu, sigma, floor = truth.mu, truth.sigma, X.n * truth.sigma2
    omega_scale = math.sqrt(alpha) * sigma

    def one(r):
        rng = np.random.default_rng(child_seed(truth.seed, r))
        y = mu + sigma * rng.standard_normal(X.n)
        omega = omega_scale * rng.standard_normal(X.n)
        fit = relaxed_fit(X, y, selector(X, y + omega))
        return float(np.sum((mu - fit) ** 2) + floor)

    return _mc_over_replicates(one, truth, workers)


def mc_true_err_out(X, X_new, mu_new, truth: TruthSpec, spec, *,
                    workers: int = 1) -> McValue:
    """Monte-Carlo out-of-sample prediction error at a new design.

    Each replicate selects and refits on a fresh y from the original design,
    predicts at `X_new`, and scores ||mu_new - pred||^2 + n sigma^2.
    """
    X = as_design(X)
    X_new = as_design(X_new)
    mu_new = check_vector(mu_new, X_new.n, name="mu_new")
    if truth.n != X.n:
        raise InvalidInputError("truth mean length must match the design rows")
    if X_new.p != X.p:
        raise InvalidInputError("new design must have the same number of columns")
    selector = _resolved_selector(X, spec, truth)
    mu, sigma, floor = truth.mu, truth.sigma, X_new.n * truth.sigma2

    def one(r):
        rng = np.random.default_rng(child_seed(truth.seed, r))
        y = mu + sigma * rng.standard_normal(X.n)
        support = selector(X, y)
        if len(support):
            pred = X_new.columns(support) @ refit_coefficients(X, y, support)
        else:
            pred = np.zeros(X_new.n)
        return float(np.sum((mu_new - pred) ** 2) + floor)

    return _mc_over_replicates(one, truth, workers)


def mc_true_df(X, truth: TruthSpec, spec, *, workers: int = 1) -> McValue:
    """Monte-Carlo degrees of freedom: sigma^{-2} sum_i Cov(fit_i(y), y_i).

    With the mean known, each replicate contributes fit(y) . (y - mu) /
    sigma^2, whose expectation is the covariance sum. A constant projection
    recovers its trace.
    """
    X = as_design(X)
    if truth.n != X.n:
        raise InvalidInputError("truth mean length must match the design rows")
    selector = _resolved_selector(X, spec, truth)
    mu, sigma = truth.mu, truth.sigma

    def one(r):
        rng = np.random.default_rng(child_seed(truth.seed, r))
        eps = sigma * rng.standard_normal(X.n)
        y = mu + eps
        fit = relaxed_fit(X, y, selector(X, y))
        return float(fit @ eps) / truth.sigma2

    return _mc_over_replicates(one, truth, workers)


def quadratic_variance_check(A, n_mc: int, rng_seed=None) -> tuple:
    """Empirical vs analytic variance of ||A Z||^2 for standard normal Z.

    For symmetric A the variance is exactly 2 tr(A^4). Asymmetric input is
    rejected (the diagonalization behind the formula needs symmetry).

    Returns
    -------
    (empirical_var, analytic_var) : (float, float)
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInputError(f"A must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError("A contains non-finite entries")
    scale = max(float(np.max(np.abs(A))), 1.0)
    if np.max(np.abs(A - A.T)) > 1e-10 * scale:
        raise InvalidInputError("A must be symmetric")
    n_mc = int(n_mc)
    if n_mc < 2:
        raise InvalidInputError("n_mc must be >= 2")
    A2 = A @ A
    analytic = 2.0 * float(np.sum(A2 * A2))  # 2 tr(A^4), A symmetric
    rng = np.random.default_rng(rng_seed)
    n = A.shape[0]
    vals = np.empty(n_mc)
    done = 0
    while done < n_mc:
        m = min(100_000, n_mc - done)
        W = rng.standard_normal((m, n)) @ A.T
        vals[done:done + m] = np.einsum("ij,ij->i", W, W)
        done += m
    return float(np.var(vals, ddof=1)), analytic


def cp_variance_analytic(H, mu, sigma2) -> float:
    """Exact variance of the fixed-projection covariance-penalty estimate:

        2 tr(I - H) sigma^4 + 4 ||(I - H) mu||^2 sigma^2.

    `H` must be a symmetric idempotent matrix to 1e-8.
    """
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise InvalidInputError(f"H must be square, got shape {H.shape}")
    mu = check_vector(mu, H.shape[0], name="mu")
    sigma2 = float(sigma2)
    if not np.isfinite(sigma2) or sigma2 <= 0:
        raise InvalidInputError(f"sigma2 must be finite and > 0, got {sigma2}")
    if np.max(np.abs(H - H.T)) > 1e-8:
        raise InvalidInputError("H must be symmetric to 1e-8")
    if np.max(np.abs(H @ H - H)) > 1e-8:
        raise InvalidInputError("H must be idempotent to 1e-8")
    n = H.shape[0]
    resid_mu = mu - H @ mu
    return float(2.0 * (n - np.trace(H)) * sigma2 ** 2
                 + 4.0 * float(resid_mu @ resid_mu) * sigma2)
