"""Model-search procedures and the post-selection projection fit.

The selectors here map a response vector to a set of columns; the fit is
always the least-squares refit on the selected columns (the projection of
the target onto their span).
"""
from __future__ import annotations

import functools
import itertools
import math

import numpy as np

from .design import (BEST_SUBSET, FORWARD_STEPWISE, LASSO_FIXED_LAMBDA, LASSO_KAPPA,
                     DesignMatrix, SelectorSpec, Support, as_design)
from .exceptions import (ConvergenceError, EnumerationCapError, InvalidInputError,
                         RankDeficiencyError)
from .util import McValue, check_vector, mean_se

# Rank tolerance, relative to the largest singular value of the submatrix.
RANK_RTOL = 1e-10

# Coordinate-descent stopping rules: stationarity target, stalled-update
# threshold, and the sweep budget after which we give up.
KKT_TOL = 1e-8
UPDATE_TOL = 1e-10
MAX_SWEEPS = 100_000

DEFAULT_ENUMERATION_CAP = 1_000_000
DEFAULT_NOISE_SCALE_DRAWS = 1000

_SUBSET_CHUNK = 32_768


def soft_threshold(z: float, threshold: float) -> float:
    """Shrink `z` toward zero by `threshold`, clipping at zero."""
    if z > threshold:
        return z - threshold
    if z < -threshold:
        return z + threshold
    return 0.0


def lasso_fit(X, y, lam, *, max_sweeps: int = MAX_SWEEPS,
              kkt_tol: float = KKT_TOL, update_tol: float = UPDATE_TOL) -> np.ndarray:
    """Solve min_b 0.5 ||y - X b||^2 + lam ||b||_1 by cyclic coordinate descent.

    Parameters
    ----------
    X : DesignMatrix or array of shape (n, p)
    y : array of shape (n,)
    lam : float
        Nonnegative l1 penalty (Lagrangian form, unscaled by n).

    Returns
    -------
    beta : ndarray of shape (p,)
        A point satisfying the stationarity conditions
        |x_j'(y - X beta)| <= lam for all j, with equality at lam * sign(beta_j)
        on the active set, up to `kkt_tol`.

    Raises
    ------
    InvalidInputError
        If inputs are non-finite or lam < 0.
    ConvergenceError
        If the sweep budget is exhausted; carries the final KKT residual.

    Notes
    -----
    Uses the Gram form of the coordinate update (one O(p) vector operation
    per coordinate move) with an active-set inner loop between full sweeps.
    """
    X = as_design(X)
    y = check_vector(y, X.n)
    lam = float(lam)
    if not np.isfinite(lam) or lam < 0:
        raise InvalidInputError(f"lambda must be finite and >= 0, got {lam}")

    p = X.p
    G = X.gram()
    diag = np.ascontiguousarray(np.diag(G))
    q = X.entries.T @ y  # gradient state: q = X'(y - X beta)
    beta = np.zeros(p)

    def sweep(index_list):
        max_move = 0.0
        for j in index_list:
            gj = diag[j]
            if gj <= 0.0:
                continue
            bj = beta[j]
            if bj == 0.0 and abs(q[j]) <= lam:
                continue
            new = soft_threshold(q[j] + gj * bj, lam) / gj
            delta = new - bj
            if delta != 0.0:
                beta[j] = new
                q[:] -= G[j] * delta
                move = abs(delta)
                if move > max_move:
                    max_move = move
        return max_move

    def kkt_from_state() -> float:
        active = beta != 0.0
        worst = 0.0
        if np.any(~active):
            worst = max(worst, float(np.max(np.abs(q[~active]))) - lam)
        if np.any(active):
            worst = max(worst, float(np.max(np.abs(q[active] - lam * np.sign(beta[active])))))
        return max(worst, 0.0)

    Xty = q.copy()
    yty = float(y @ y)

    def objective() -> float:
        # 0.5 ||y - X b||^2 + lam ||b||_1, from the maintained gradient:
        # ||y - X b||^2 = y'y - b'X'y - b'q.
        return 0.5 * (yty - beta @ Xty - beta @ q) + lam * float(np.sum(np.abs(beta)))

    def refine_on_face() -> bool:
        # Once the active set and signs have stabilized, the solution solves
        # a linear system on that face; jumping there skips the slow tail of
        # coordinate convergence. Accept only sign-consistent, objective-
        # decreasing jumps, so the descent property is preserved.
        active = np.flatnonzero(beta)
        if active.size == 0 or active.size > X.n:
            return False
        signs = np.sign(beta[active])
        try:
            sol = np.linalg.solve(G[np.ix_(active, active)], Xty[active] - lam * signs)
        except np.linalg.LinAlgError:
            return False
        if not np.all(sol * signs > 0):
            return False
        current = objective()
        saved = beta[active].copy()
        beta[active] = sol
        q[:] = Xty - G @ beta
        if objective() <= current:
            return True
        beta[active] = saved
        q[:] = Xty - G @ beta
        return False

    all_coords = range(p)
    sweeps = 0
    kkt = math.inf
    while sweeps < max_sweeps:
        q[:] = Xty - G @ beta  # refresh: drop drift accumulated by the updates
        move = sweep(all_coords)
        sweeps += 1
        kkt = kkt_from_state()
        if kkt <= kkt_tol or move < update_tol:
            return beta
        if refine_on_face() and kkt_from_state() <= kkt_tol:
            return beta
        active = np.flatnonzero(beta)
        inner = 0
        while sweeps < max_sweeps and inner < 10:
            move = sweep(active)
            sweeps += 1
            inner += 1
            if move < update_tol:
                break
    raise ConvergenceError(
        f"coordinate descent did not converge in {max_sweeps} sweeps "
        f"(KKT residual {kkt:.3e})",
        kkt_residual=kkt, sweeps=sweeps)


def lasso_kkt_residual(X, y, beta, lam) -> float:
    """Stationarity residual of `beta` for the Lagrangian lasso at `lam`.

    Computed from scratch (fresh residual), so it is a valid independent
    check on solver output.
    """
    X = as_design(X)
    y = check_vector(y, X.n)
    beta = check_vector(beta, X.p, name="beta")
    g = X.entries.T @ (y - X.entries @ beta)
    active = beta != 0.0
    worst = 0.0
    if np.any(~active):
        worst = max(worst, float(np.max(np.abs(g[~active]))) - float(lam))
    if np.any(active):
        worst = max(worst, float(np.max(np.abs(g[active] - lam * np.sign(beta[active])))))
    return max(worst, 0.0)


def lambda_min(X, sigma, n_mc: int = DEFAULT_NOISE_SCALE_DRAWS, rng_seed=None) -> McValue:
    """Noise scale of the lasso path: E ||X' e||_inf for e ~ N(0, sigma^2 I).

    Estimated by Monte Carlo over `n_mc` draws; returns the average and its
    standard error. Deterministic given `rng_seed`, and exactly positively
    homogeneous in `sigma` when the seed is reused.
    """
    X = as_design(X)
    sigma = float(sigma)
    if not np.isfinite(sigma) or sigma <= 0:
        raise InvalidInputError(f"sigma must be finite and > 0, got {sigma}")
    n_mc = int(n_mc)
    if n_mc < 1:
        raise InvalidInputError(f"n_mc must be >= 1, got {n_mc}")
    rng = np.random.default_rng(rng_seed)
    vals = np.empty(n_mc)
    done = 0
    while done < n_mc:
        m = min(256, n_mc - done)
        eps = rng.standard_normal((m, X.n))
        vals[done:done + m] = np.max(np.abs(eps @ X.entries), axis=1)
        done += m
    vals *= sigma
    return mean_se(vals)


def concretize(spec: SelectorSpec, X, sigma=None, rng_seed=None,
               n_mc: int = DEFAULT_NOISE_SCALE_DRAWS) -> SelectorSpec:
    """Resolve a kappa-scaled lasso spec to a fixed penalty.

    Other kinds pass through unchanged. The penalty is kappa times the
    Monte-Carlo noise scale of the design, so `sigma` is required.
    """
    if spec.kind != LASSO_KAPPA:
        return spec
    if sigma is None:
        raise InvalidInputError("sigma is required to scale a kappa-form lasso penalty")
    lam = spec.kappa * lambda_min(X, sigma, n_mc=n_mc, rng_seed=rng_seed).value
    return SelectorSpec.lasso(lam)


@functools.lru_cache(maxsize=64)
def _subset_index_array(p: int, k: int) -> np.ndarray:
    combos = np.array(list(itertools.combinations(range(p), k)), dtype=int)
    combos.setflags(write=False)
    return combos


def _best_subset(X: DesignMatrix, y: np.ndarray, k: int, cap: int) -> Support:
    n, p = X.n, X.p
    if k > min(n, p):
        raise InvalidInputError(f"subset size k={k} exceeds min(n, p)={min(n, p)}")
    if k == 0:
        return Support(())
    n_subsets = math.comb(p, k)
    if n_subsets > cap:
        raise EnumerationCapError(
            f"best subset would enumerate C({p},{k})={n_subsets} > cap {cap}; "
            "raise the enumeration cap explicitly to proceed")
    combos = _subset_index_array(p, k)
    G = X.gram()
    b = X.entries.T @ y

    best_fit = -math.inf
    best_row = -1
    for start in range(0, n_subsets, _SUBSET_CHUNK):
        chunk = combos[start:start + _SUBSET_CHUNK]
        Gsub = G[chunk[:, :, None], chunk[:, None, :]]
        bsub = b[chunk]
        try:
            coef = np.linalg.solve(Gsub, bsub[:, :, None])[:, :, 0]
            fit = np.einsum("mk,mk->m", bsub, coef)
        except np.linalg.LinAlgError:
            # Some subset in the chunk is singular: score subset-by-subset,
            # treating rank-deficient ones as ineligible.
            fit = np.full(chunk.shape[0], -math.inf)
            for row in range(chunk.shape[0]):
                try:
                    coef = np.linalg.solve(Gsub[row], bsub[row])
                except np.linalg.LinAlgError:
                    continue
                fit[row] = bsub[row] @ coef
        fit[~np.isfinite(fit)] = -math.inf
        row = int(np.argmax(fit))
        # Strict inequality keeps the earliest (lexicographically smallest)
        # subset on ties.
        if fit[row] > best_fit:
            best_fit = fit[row]
            best_row = start + row
    if best_row < 0:
        raise RankDeficiencyError(f"every size-{k} subset is rank deficient")
    return Support(tuple(int(i) for i in combos[best_row]))


def _forward_stepwise(X: DesignMatrix, y: np.ndarray, k: int) -> Support:
    n, p = X.n, X.p
    if k > min(n, p):
        raise InvalidInputError(f"step count k={k} exceeds min(n, p)={min(n, p)}")
    Z = X.entries.copy()           # columns residualized against the picks so far
    r = y.astype(float).copy()
    eligible = X.column_norms > 0.0
    floor = (RANK_RTOL * np.maximum(X.column_norms, 1.0)) ** 2
    selected = []
    for _ in range(k):
        znorm2 = np.einsum("ij,ij->j", Z, Z)
        ok = eligible & (znorm2 > floor)
        if not np.any(ok):
            raise RankDeficiencyError(
                f"forward stepwise cannot extend past {sorted(selected)}: "
                "remaining columns are collinear with the selection",
                support=Support(tuple(sorted(selected))))
        score = np.where(ok, np.square(Z.T @ r), -math.inf) / np.where(ok, znorm2, 1.0)
        j = int(np.argmax(score))  # first maximum: smallest index on ties
        qn = Z[:, j] / math.sqrt(znorm2[j])
        r -= qn * (qn @ r)
        Z -= np.outer(qn, qn @ Z)
        eligible[j] = False
        selected.append(j)
    return Support(tuple(sorted(selected)))


def select_support(X, y, spec, sigma=None, rng_seed=None, *,
                   enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
                   noise_scale_draws: int = DEFAULT_NOISE_SCALE_DRAWS) -> Support:
    """Run the model search described by `spec` on (X, y).

    Parameters
    ----------
    spec : SelectorSpec
    sigma : float, optional
        Noise level; only needed for the kappa-form lasso (to scale its penalty).
    rng_seed : int or SeedSequence, optional
        Only consumed by the kappa-form lasso's Monte-Carlo penalty scale.

    Returns
    -------
    Support
        For lasso kinds, the nonzero set of the solution; for subset kinds,
        the residual-sum-of-squares minimizer (exhaustive or greedy).
        A pure function of (X, y, spec, rng_seed).
    """
    X = as_design(X)
    y = check_vector(y, X.n)
    spec = concretize(spec, X, sigma=sigma, rng_seed=rng_seed, n_mc=noise_scale_draws)
    if spec.kind == LASSO_FIXED_LAMBDA:
        beta = lasso_fit(X, y, spec.lam)
        return Support(tuple(int(j) for j in np.flatnonzero(beta)))
    if spec.kind == BEST_SUBSET:
        return _best_subset(X, y, spec.k, enumeration_cap)
    if spec.kind == FORWARD_STEPWISE:
        return _forward_stepwise(X, y, spec.k)
    raise InvalidInputError(f"unhandled selector kind {spec.kind!r}")


def make_selector(spec, sigma=None, rng_seed=None, *,
                  enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
                  noise_scale_draws: int = DEFAULT_NOISE_SCALE_DRAWS):
    """Turn a selector description into a callable (X, y) -> Support.

    Accepts a SelectorSpec, a fixed Support (a constant selector, useful as
    a test hook and for fixed-design baselines), or any callable already of
    the right shape. A kappa-form lasso is resolved to a fixed penalty once,
    on the first design it sees, so repeated calls share one penalty.
    """
    if isinstance(spec, Support):
        return lambda X, y: spec
    if callable(spec) and not isinstance(spec, SelectorSpec):
        return spec
    if not isinstance(spec, SelectorSpec):
        raise InvalidInputError(
            f"selector must be a SelectorSpec, Support, or callable, got {type(spec).__name__}")
    state = {"spec": spec}

    def run(X, y):
        if state["spec"].kind == LASSO_KAPPA:
            state["spec"] = concretize(state["spec"], as_design(X), sigma=sigma,
                                       rng_seed=rng_seed, n_mc=noise_scale_draws)
        return select_support(X, y, state["spec"], sigma=sigma, rng_seed=rng_seed,
                              enumeration_cap=enumeration_cap,
                              noise_scale_draws=noise_scale_draws)

    return run


def _support_basis(X: DesignMatrix, support: Support) -> tuple:
    """Orthonormal basis (and SVD factors) of the selected columns' span.

    Raises RankDeficiencyError when the submatrix is numerically rank
    deficient relative to its largest singular value.
    """
    support.check_within(X.p)
    Xm = X.columns(support)
    U, s, Vt = np.linalg.svd(Xm, full_matrices=False)
    if s[0] <= 0.0 or np.any(s <= RANK_RTOL * s[0]):
        raise RankDeficiencyError(
            f"selected columns {support.indices} are rank deficient "
            f"(singular values {np.array2string(s, precision=3)})",
            support=support)
    return U, s, Vt


def relaxed_fit(X, y_target, support: Support) -> np.ndarray:
    """Project `y_target` onto the span of the selected columns.

    This is the least-squares refit on the selected support; the empty
    support maps everything to zero.
    """
    X = as_design(X)
    y_target = check_vector(y_target, X.n, name="y_target")
    if len(support) == 0:
        return np.zeros(X.n)
    U, _, _ = _support_basis(X, support)
    return U @ (U.T @ y_target)


def refit_coefficients(X, y_target, support: Support) -> np.ndarray:
    """Least-squares coefficients of `y_target` on the selected columns.

    Returns one coefficient per selected column, in support order.
    """
    X = as_design(X)
    y_target = check_vector(y_target, X.n, name="y_target")
    if len(support) == 0:
        return np.zeros(0)
    U, s, Vt = _support_basis(X, support)
    return Vt.T @ ((U.T @ y_target) / s)


def hat_matrix(X, support: Support) -> np.ndarray:
    """The n x n projection onto the selected columns' span."""
    X = as_design(X)
    if len(support) == 0:
        return np.zeros((X.n, X.n))
    U, _, _ = _support_basis(X, support)
    return U @ U.T


def hat_trace(X, support: Support) -> float:
    """Trace of the selected-columns projection: exactly the support size.

    Rank deficiency raises rather than silently shrinking the trace.
    """
    X = as_design(X)
    if len(support) == 0:
        return 0.0
    _support_basis(X, support)
    return float(len(support))
