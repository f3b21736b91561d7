import itertools
import math

import numpy as np
import pytest

from searchrisk import (EnumerationCapError, InvalidInputError,
                        RankDeficiencyError, SelectorSpec, Support, gen_design,
                        hat_matrix, hat_trace, lambda_min, lasso_fit,
                        lasso_kkt_residual, relaxed_fit, select_support)

# Oversampled (n_mc = 1e6) noise-scale value for the equicorrelated design
# below, frozen from an independent high-precision run.
LAMBDA_MIN_PIN = 27.527763623943933
LAMBDA_MIN_PIN_SE = 0.004544255971751534


def random_instance(rng, n, p, s=2, snr=1.5):
    X = rng.standard_normal((n, p))
    beta = np.zeros(p)
    beta[:s] = snr
    y = X @ beta + rng.standard_normal(n)
    return X, y


def brute_force_best_subset(X, y, k):
    """Independent oracle: enumerate subsets, score each with lstsq."""
    p = X.shape[1]
    best_rss, best = math.inf, None
    for combo in itertools.combinations(range(p), k):
        cols = X[:, list(combo)]
        coef, _, _, _ = np.linalg.lstsq(cols, y, rcond=None)
        rss = float(np.sum((y - cols @ coef) ** 2))
        if rss < best_rss - 1e-10:
            best_rss, best = rss, combo
    return best


class TestLassoFit:
    def test_large_penalty_kills_everything(self):
        rng = np.random.default_rng(0)
        X, y = random_instance(rng, 40, 10)
        lam = float(np.max(np.abs(X.T @ y)))
        beta = lasso_fit(X, y, lam + 1e-9)
        assert np.all(beta == 0.0)

    def test_zero_penalty_is_ols(self):
        rng = np.random.default_rng(1)
        X, y = random_instance(rng, 50, 8)
        beta = lasso_fit(X, y, 0.0)
        ols, _, _, _ = np.linalg.lstsq(X, y, rcond=None)
        assert np.allclose(beta, ols, atol=1e-7)

    def test_orthonormal_design_soft_thresholds(self):
        rng = np.random.default_rng(2)
        Q, _ = np.linalg.qr(rng.standard_normal((60, 12)))
        y = rng.standard_normal(60) * 3.0
        lam = 0.8
        beta = lasso_fit(Q, y, lam)
        z = Q.T @ y
        expected = np.sign(z) * np.maximum(np.abs(z) - lam, 0.0)
        assert np.allclose(beta, expected, atol=1e-10)

    @pytest.mark.parametrize("n,p,seed", [(50, 20, 3), (200, 100, 4), (100, 400, 5),
                                          (150, 300, 6), (200, 400, 7)])
    def test_kkt_residual_on_random_instances(self, n, p, seed):
        rng = np.random.default_rng(seed)
        X, y = random_instance(rng, n, p, s=5, snr=2.0)
        lam = 0.2 * np.max(np.abs(X.T @ y))
        beta = lasso_fit(X, y, lam)
        assert lasso_kkt_residual(X, y, beta, lam) <= 1e-6

    def test_invalid_inputs(self):
        rng = np.random.default_rng(8)
        X, y = random_instance(rng, 20, 4)
        with pytest.raises(InvalidInputError):
            lasso_fit(X, y, -1.0)
        bad = y.copy()
        bad[0] = np.nan
        with pytest.raises(InvalidInputError):
            lasso_fit(X, bad, 1.0)


class TestSelectSupport:
    def test_best_subset_full_size(self):
        rng = np.random.default_rng(9)
        X, y = random_instance(rng, 20, 5)
        support = select_support(X, y, SelectorSpec.best_subset(5))
        assert support.indices == (0, 1, 2, 3, 4)

    def test_best_subset_orthonormal_picks_largest_correlations(self):
        rng = np.random.default_rng(10)
        Q, _ = np.linalg.qr(rng.standard_normal((40, 8)))
        y = rng.standard_normal(40)
        k = 3
        support = select_support(Q, y, SelectorSpec.best_subset(k))
        expected = tuple(sorted(np.argsort(-np.abs(Q.T @ y))[:k]))
        assert support.indices == expected

    def test_best_subset_matches_brute_force_spec_instance(self):
        rng = np.random.default_rng(11)
        X, y = random_instance(rng, 15, 6, s=2, snr=1.0)
        support = select_support(X, y, SelectorSpec.best_subset(3))
        assert support.indices == brute_force_best_subset(X, y, 3)

    def test_best_subset_matches_brute_force_many(self):
        rng = np.random.default_rng(12)
        for _ in range(25):
            n = int(rng.integers(10, 30))
            p = int(rng.integers(4, 10))
            k = int(rng.integers(1, min(4, p) + 1))
            X, y = random_instance(rng, n, p, s=min(2, p), snr=1.0)
            support = select_support(X, y, SelectorSpec.best_subset(k))
            assert support.indices == brute_force_best_subset(X, y, k)

    def test_enumeration_cap(self):
        rng = np.random.default_rng(13)
        X, y = random_instance(rng, 30, 12)
        with pytest.raises(EnumerationCapError):
            select_support(X, y, SelectorSpec.best_subset(6), enumeration_cap=100)

    def test_stepwise_one_step_equals_best_subset(self):
        rng = np.random.default_rng(14)
        for _ in range(10):
            X, y = random_instance(rng, 25, 7)
            a = select_support(X, y, SelectorSpec.forward_stepwise(1))
            b = select_support(X, y, SelectorSpec.best_subset(1))
            assert a.indices == b.indices

    def test_lasso_kinds_select_nonzeros(self):
        rng = np.random.default_rng(15)
        X, y = random_instance(rng, 40, 10, s=3, snr=3.0)
        lam = 0.3 * np.max(np.abs(X.T @ y))
        support = select_support(X, y, SelectorSpec.lasso(lam))
        beta = lasso_fit(X, y, lam)
        assert support.indices == tuple(np.flatnonzero(beta))

    def test_kappa_requires_sigma(self):
        rng = np.random.default_rng(16)
        X, y = random_instance(rng, 20, 5)
        with pytest.raises(InvalidInputError):
            select_support(X, y, SelectorSpec.lasso_kappa(1.0))

    def test_pure_function_of_seed(self):
        rng = np.random.default_rng(17)
        X, y = random_instance(rng, 30, 40, s=3, snr=3.0)
        a = select_support(X, y, SelectorSpec.lasso_kappa(1.2), sigma=1.0, rng_seed=5)
        b = select_support(X, y, SelectorSpec.lasso_kappa(1.2), sigma=1.0, rng_seed=5)
        assert a == b


class TestRelaxedFit:
    def test_empty_support_is_zero(self):
        rng = np.random.default_rng(18)
        X, y = random_instance(rng, 10, 3)
        assert np.all(relaxed_fit(X, y, Support(())) == 0.0)

    def test_full_support_fixes_span_members(self):
        rng = np.random.default_rng(19)
        X = rng.standard_normal((12, 4))
        y = X @ rng.standard_normal(4)
        fit = relaxed_fit(X, y, Support((0, 1, 2, 3)))
        assert np.allclose(fit, y, atol=1e-9)

    def test_constant_column_projects_to_mean(self):
        X = np.ones((5, 1))
        y = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
        fit = relaxed_fit(X, y, Support((0,)))
        assert np.allclose(fit, 3.0)

    def test_idempotent(self):
        rng = np.random.default_rng(20)
        X, y = random_instance(rng, 30, 8)
        M = Support((1, 4, 6))
        once = relaxed_fit(X, y, M)
        twice = relaxed_fit(X, once, M)
        assert np.linalg.norm(twice - once) <= 1e-8 * max(np.linalg.norm(y), 1.0)

    def test_rank_deficient_raises_with_support(self):
        rng = np.random.default_rng(21)
        X = rng.standard_normal((10, 3))
        X[:, 2] = X[:, 0]  # duplicate column
        with pytest.raises(RankDeficiencyError) as err:
            relaxed_fit(X, rng.standard_normal(10), Support((0, 1, 2)))
        assert err.value.support.indices == (0, 1, 2)
        assert "(0, 1, 2)" in str(err.value)


class TestHatMatrix:
    def test_trace_counts_support(self):
        rng = np.random.default_rng(22)
        X, _ = random_instance(rng, 20, 6)
        assert hat_trace(X, Support(())) == 0.0
        assert hat_trace(X, Support((0, 2, 5))) == 3.0

    def test_trace_rank_deficient_errors(self):
        rng = np.random.default_rng(23)
        X = rng.standard_normal((10, 2))
        X = np.column_stack([X, X[:, 0] - X[:, 1]])
        with pytest.raises(RankDeficiencyError):
            hat_trace(X, Support((0, 1, 2)))

    def test_projection_law_and_symmetry(self):
        rng = np.random.default_rng(24)
        X, _ = random_instance(rng, 25, 8)
        for indices in [(0,), (1, 3), (0, 2, 4, 7)]:
            H = hat_matrix(X, Support(indices))
            v = rng.standard_normal(25)
            u = rng.standard_normal(25)
            assert np.linalg.norm(H @ (H @ v) - H @ v) <= 1e-8 * np.linalg.norm(v)
            assert abs((H @ u) @ v - u @ (H @ v)) <= 1e-8


class TestLambdaMin:
    def test_single_column_expected_absolute_normal(self):
        c = 3.0
        X = np.full((50, 1), c / math.sqrt(50))
        value, se = lambda_min(X, 2.0, n_mc=4000, rng_seed=25)
        expected = c * 2.0 * math.sqrt(2.0 / math.pi)
        assert abs(value - expected) <= 3.0 * se

    def test_exact_homogeneity_in_sigma(self):
        rng = np.random.default_rng(26)
        X = rng.standard_normal((30, 10))
        a = lambda_min(X, 1.0, n_mc=200, rng_seed=27)
        b = lambda_min(X, 2.0, n_mc=200, rng_seed=27)
        assert b.value == 2.0 * a.value

    def test_equicorrelated_pin(self):
        X = gen_design(100, 200, 0.3, seed=20)
        value, se = lambda_min(X, 1.0, n_mc=2000, rng_seed=28)
        assert abs(value - LAMBDA_MIN_PIN) <= 0.01 * LAMBDA_MIN_PIN
