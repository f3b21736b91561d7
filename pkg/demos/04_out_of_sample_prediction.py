"""Out-of-sample error at a design you have actually observed.

Low-dimensional linear model: the out-of-sample variant prices predictions
at a new feature matrix without assuming the rows of either design were
sampled from anything; the new matrix is simply conditioned on.

Run: python demos/04_out_of_sample_prediction.py
"""

from searchrisk import (NoiseLevel, SelectorSpec, TruthSpec, concretize,
                        err_out_alpha, gen_design, gen_response, loo_cv,
                        mc_true_err_out)

n, p, s, snr, sigma = 100, 20, 10, 7.0, 1.0
X = gen_design(n, p, rho=0.3, seed=500)
X_new = gen_design(n, p, rho=0.3, seed=501)
y, beta0, mu = gen_response(X, s, snr, sigma, seed=502)
mu_new = X_new.entries @ beta0
noise = NoiseLevel(sigma ** 2)

spec = concretize(SelectorSpec.lasso_kappa(1.1), X, sigma=sigma, rng_seed=503)
print(f"Lasso penalty resolved to {spec.lam:.2f} (1.1x the noise scale)")

report = err_out_alpha(X, X_new, y, alpha=0.25, spec=spec, noise=noise,
                       n_draws=50, rng_seed=505)
cv = loo_cv(X, y, spec)
truth = mc_true_err_out(X, X_new, mu_new,
                        TruthSpec(mu, sigma ** 2, replications=3000, seed=504), spec)

print(f"\nOut-of-sample estimate (randomized): {report.estimate:8.2f}"
      f"  (between-draw se {report.mc_se:.2f})")
print(f"Leave-one-out cross validation:      {cv:8.2f}")
print(f"Monte-Carlo truth at X_new:          {truth.value:8.2f}  (se {truth.se:.2f})")
print("\nBoth estimators work from one dataset; only the truth saw mu. CV")
print("prices a random new design, the randomized estimate prices this one.")
