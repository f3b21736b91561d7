"""Synthetic data generators for the simulation studies."""
from __future__ import annotations

import math

import numpy as np

from .design import DesignMatrix, Support, as_design
from .exceptions import InvalidInputError
from .baselines import sigma_ols
from .selection import relaxed_fit
from .util import check_vector


def gen_design(n, p, rho, seed=None, *, normalize: bool = True) -> DesignMatrix:
    """Gaussian design with equicorrelated columns.

    Rows are i.i.d. N(0, Sigma) with unit variances and common pairwise
    correlation `rho`; columns are then rescaled to length sqrt(n) unless
    `normalize` is False.
    """
    n, p = int(n), int(p)
    rho = float(rho)
    if n < 1 or p < 1:
        raise InvalidInputError(f"need n >= 1 and p >= 1, got {n}, {p}")
    if not 0.0 <= rho < 1.0:
        raise InvalidInputError(f"rho must lie in [0, 1), got {rho}")
    rng = np.random.default_rng(seed)
    X = math.sqrt(1.0 - rho) * rng.standard_normal((n, p))
    if rho > 0.0:
        X += math.sqrt(rho) * rng.standard_normal((n, 1))
    if normalize:
        norms = np.linalg.norm(X, axis=0)
        if np.any(norms == 0.0):
            raise InvalidInputError("drew a zero column; cannot normalize")
        X *= math.sqrt(n) / norms
    return DesignMatrix.from_array(X, normalized=normalize)


def gen_response(X, s, snr, sigma, seed=None) -> tuple:
    """Sparse linear response: the first `s` coefficients equal `snr`.

    Returns
    -------
    (y, beta0, mu) : (ndarray, ndarray, ndarray)
        y = mu + N(0, sigma^2 I) with mu = X beta0.
    """
    X = as_design(X)
    s = int(s)
    if not 0 <= s <= X.p:
        raise InvalidInputError(f"sparsity s={s} must lie in [0, p={X.p}]")
    snr = float(snr)
    sigma = float(sigma)
    if not np.isfinite(sigma) or sigma <= 0:
        raise InvalidInputError(f"sigma must be finite and > 0, got {sigma}")
    beta0 = np.zeros(X.p)
    beta0[:s] = snr
    mu = X.entries @ beta0
    rng = np.random.default_rng(seed)
    y = mu + sigma * rng.standard_normal(X.n)
    return y, beta0, mu


def pilot_truth(X, y) -> tuple:
    """Turn observed data into a known synthetic truth via a full OLS pilot fit.

    Returns (mu, noise): the fitted mean and the residual-based noise level.
    Requires p < n with X of full column rank.
    """
    X = as_design(X)
    y = check_vector(y, X.n)
    noise = sigma_ols(X, y)  # also enforces the p < n full-rank regime
    mu = relaxed_fit(X, y, Support(tuple(range(X.p))))
    return mu, noise


def synthetic_wide_design(n=100, p=64, seed=None, *, rho=0.3) -> DesignMatrix:
    """Stand-in for a moderately collinear 64-predictor design.

    Lets the degrees-of-freedom pipeline run without any external data file.
    """
    return gen_design(n, p, rho, seed=seed, normalize=True)
