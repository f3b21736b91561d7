"""Simulation-study runners reproducing the comparison figures at desk scale.

Each runner consumes an ExperimentConfig, writes a ResultTable CSV (plus a
per-observation twin where the quantities are error-scaled), an SVG plot,
and the resolved configuration, all under `config.out_dir`. Runners are
deterministic functions of the configuration: re-running produces identical
CSV bytes for any worker count.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .baselines import cp_estimate, loo_cv, naive_df, parametric_bootstrap, sigma_ols
from .config import ExperimentConfig
from .datagen import gen_design, gen_response, pilot_truth, synthetic_wide_design
from .design import DesignMatrix, SelectorSpec, as_design
from .exceptions import InvalidInputError
from .io import format_float, write_rows_csv
from .oracle import TruthSpec, mc_true_df, mc_true_err, mc_true_err_out
from .randomized import NoiseLevel, err_alpha_averaged, err_out_alpha, search_df
from .selection import concretize, lambda_min, select_support
from .util import child_seed, ordered_map

METHODS = ("additive", "cp", "cv", "bootstrap", "truth")

FIGURE_ALPHA = 0.25  # the studies' randomization scale (approximately 100 ** -0.25)

# Salts keeping the runners' seed trees disjoint for a shared master seed.
_SALT_BARPLOT = 0
_SALT_LAMBDA = 1
_SALT_DF = 2
_SALT_OUT = 3
_SALT_BEST_SUBSET = 4


class ResultRow(NamedTuple):
    experiment: str
    method: str
    replicate: int
    estimate: float
    truth: float
    truth_se: float


RESULT_HEADER = ("experiment", "method", "replicate", "estimate", "truth", "truth_se")


@dataclass
class ResultTable:
    """Long-form results: one row per (experiment, method, replicate)."""

    rows: list

    def validate(self) -> "ResultTable":
        groups = {}
        for row in self.rows:
            if row.method not in METHODS:
                raise InvalidInputError(f"unknown method {row.method!r} in results")
            groups.setdefault((row.experiment, row.method), []).append(row.replicate)
        for key, reps in groups.items():
            if sorted(reps) != list(range(1, len(reps) + 1)):
                raise InvalidInputError(f"replicate indices for {key} are not contiguous from 1")
        return self

    def write_csv(self, path) -> None:
        rows = [[r.experiment, r.method, str(r.replicate), format_float(r.estimate),
                 format_float(r.truth), format_float(r.truth_se)] for r in self.rows]
        write_rows_csv(path, RESULT_HEADER, rows)

    def scaled(self, divisor_by_experiment: dict) -> "ResultTable":
        rows = [ResultRow(r.experiment, r.method, r.replicate,
                          r.estimate / divisor_by_experiment[r.experiment],
                          r.truth / divisor_by_experiment[r.experiment],
                          r.truth_se / divisor_by_experiment[r.experiment])
                for r in self.rows]
        return ResultTable(rows)

    def experiments(self) -> list:
        seen = []
        for r in self.rows:
            if r.experiment not in seen:
                seen.append(r.experiment)
        return seen

    def estimates(self, experiment, method) -> np.ndarray:
        return np.array([r.estimate for r in self.rows
                         if r.experiment == experiment and r.method == method])

    def truth_of(self, experiment) -> tuple:
        for r in self.rows:
            if r.experiment == experiment and r.method == "truth":
                return r.truth, r.truth_se
        raise InvalidInputError(f"no truth row for experiment {experiment!r}")

    @classmethod
    def read_csv(cls, path) -> "ResultTable":
        import csv

        rows = []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if tuple(header) != RESULT_HEADER:
                raise InvalidInputError(f"{path}: unexpected header {header}")
            for fields in reader:
                rows.append(ResultRow(fields[0], fields[1], int(fields[2]),
                                      float(fields[3]), float(fields[4]),
                                      float(fields[5])))
        return cls(rows)


def _figure_alpha(cfg: ExperimentConfig) -> float:
    return FIGURE_ALPHA if cfg.alpha is None else cfg.alpha


def _noise_for_replicate(X, y, true_sigma2, mode: str) -> NoiseLevel:
    # The studies treat sigma^2 as unknown in the low-dimensional regime and
    # plug in the OLS residual estimate; high-dimensional settings use the
    # true value (estimating sigma^2 with p >= n is out of scope).
    if mode == "ols" and X.p < X.n:
        return sigma_ols(X, y)
    return NoiseLevel(true_sigma2)


def _emit(cfg: ExperimentConfig, name: str, table: ResultTable,
          per_obs_divisors=None, plotter=None) -> None:
    out = cfg.out_dir
    os.makedirs(out, exist_ok=True)
    table.validate().write_csv(os.path.join(out, f"{name}.csv"))
    if per_obs_divisors is not None:
        table.scaled(per_obs_divisors).write_csv(os.path.join(out, f"{name}_per_obs.csv"))
    cfg.to_file(os.path.join(out, f"{name}_config.txt"))
    if plotter is not None:
        try:
            plotter(os.path.join(out, f"{name}.svg"))
        except Exception as exc:  # plots are a convenience layer over the CSVs
            print(f"warning: plot for {name} failed: {exc}")


def run_fig_barplot(cfg: ExperimentConfig) -> ResultTable:
    """Estimator comparison across (p, s) settings for the lasso refit.

    Low-dimensional settings use penalty multiplier 1.1, high-dimensional
    ones 1.5. Methods: the averaged randomized estimator, the naive
    covariance penalty, leave-one-out CV, and the parametric bootstrap,
    against Monte-Carlo truth.
    """
    cfg.validate()
    root = child_seed(cfg.seed, _SALT_BARPLOT)
    settings = [(50, 10, 1.1), (200, 10, 1.5), (200, 20, 1.5), (400, 10, 1.5)]
    alpha = _figure_alpha(cfg)
    rows = []
    divisors = {}
    for e_idx, (p, s, kappa) in enumerate(settings):
        ss = child_seed(root, e_idx)
        name = f"barplot_p{p}_s{s}"
        X = gen_design(cfg.n, p, cfg.rho, seed=child_seed(ss, 0))
        _, _, mu = gen_response(X, s, cfg.snr, cfg.sigma, seed=child_seed(ss, 1))
        spec = concretize(SelectorSpec.lasso_kappa(kappa), X, sigma=cfg.sigma,
                          rng_seed=child_seed(ss, 4))
        truth = mc_true_err(X, TruthSpec(mu, cfg.sigma ** 2, cfg.truth_replications,
                                         seed=child_seed(ss, 2)), spec,
                            workers=cfg.workers)
        rep_root = child_seed(ss, 3)

        def one_replicate(r, X=X, mu=mu, spec=spec, rep_root=rep_root):
            rs = child_seed(rep_root, r)
            rng = np.random.default_rng(child_seed(rs, 0))
            y = mu + cfg.sigma * rng.standard_normal(X.n)
            noise = _noise_for_replicate(X, y, cfg.sigma ** 2, "ols")
            additive = err_alpha_averaged(X, y, alpha, spec, noise, cfg.n_draws,
                                          rng_seed=child_seed(rs, 1)).estimate
            m_hat = select_support(X, y, spec)
            cp = cp_estimate(X, y, m_hat, noise)
            cv = loo_cv(X, y, spec)
            boot = parametric_bootstrap(X, y, spec, noise, cfg.bootstrap_reps,
                                        rng_seed=child_seed(rs, 3))
            return additive, cp, cv, boot

        results = ordered_map(one_replicate, range(cfg.replications), cfg.workers)
        for r, (additive, cp, cv, boot) in enumerate(results, start=1):
            rows.append(ResultRow(name, "additive", r, additive, truth.value, truth.se))
            rows.append(ResultRow(name, "cp", r, cp, truth.value, truth.se))
            rows.append(ResultRow(name, "cv", r, cv, truth.value, truth.se))
            rows.append(ResultRow(name, "bootstrap", r, boot, truth.value, truth.se))
        rows.append(ResultRow(name, "truth", 1, truth.value, truth.value, truth.se))
        divisors[name] = X.n
    table = ResultTable(rows)
    _emit(cfg, "barplot", table, divisors,
          plotter=lambda path: _plot_boxes(table, path, "Prediction-error estimates"))
    return table


def run_fig_lambda_sweep(cfg: ExperimentConfig) -> ResultTable:
    """Estimates along a penalty grid (multiples of the noise scale).

    For each sparsity in {10, 20}: the averaged randomized estimator and
    leave-one-out CV per grid point, against per-point Monte-Carlo truth.
    """
    cfg.validate()
    root = child_seed(cfg.seed, _SALT_LAMBDA)
    kappas = cfg.kappa_grid or tuple(np.round(np.arange(0.2, 1.61, 0.2), 10))
    alpha = _figure_alpha(cfg)
    rows = []
    divisors = {}
    xpos = {}
    for e_idx, s in enumerate((cfg.s, 2 * cfg.s)):
        ss = child_seed(root, e_idx)
        X = gen_design(cfg.n, cfg.p, cfg.rho, seed=child_seed(ss, 0))
        _, _, mu = gen_response(X, s, cfg.snr, cfg.sigma, seed=child_seed(ss, 1))
        scale = lambda_min(X, cfg.sigma, rng_seed=child_seed(ss, 4)).value
        noise = NoiseLevel(cfg.sigma ** 2)
        specs = [SelectorSpec.lasso(k * scale) for k in kappas]
        truths = [mc_true_err(X, TruthSpec(mu, cfg.sigma ** 2, cfg.truth_replications,
                                           seed=child_seed(ss, 5 + j)), spec,
                              workers=cfg.workers)
                  for j, spec in enumerate(specs)]
        rep_root = child_seed(ss, 3)

        def one_replicate(r, X=X, mu=mu, specs=specs, noise=noise, rep_root=rep_root):
            rs = child_seed(rep_root, r)
            rng = np.random.default_rng(child_seed(rs, 0))
            y = mu + cfg.sigma * rng.standard_normal(X.n)
            out = []
            for spec in specs:
                # One randomization seed for the whole grid: common random
                # numbers across penalties.
                additive = err_alpha_averaged(X, y, alpha, spec, noise, cfg.n_draws,
                                              rng_seed=child_seed(rs, 1)).estimate
                cv = loo_cv(X, y, spec)
                out.append((additive, cv))
            return out

        results = ordered_map(one_replicate, range(cfg.replications), cfg.workers)
        for j, kappa in enumerate(kappas):
            name = f"lambda_s{s}_k{kappa:g}"
            for r, per_kappa in enumerate(results, start=1):
                additive, cv = per_kappa[j]
                rows.append(ResultRow(name, "additive", r, additive,
                                      truths[j].value, truths[j].se))
                rows.append(ResultRow(name, "cv", r, cv, truths[j].value, truths[j].se))
            rows.append(ResultRow(name, "truth", 1, truths[j].value,
                                  truths[j].value, truths[j].se))
            divisors[name] = X.n
            xpos[name] = float(kappa)
    table = ResultTable(rows)
    _emit(cfg, "lambda_sweep", table, divisors,
          plotter=lambda path: _plot_curves(table, path, xpos,
                                            "penalty multiplier", "Penalty sweep"))
    return table


def run_fig_df(cfg: ExperimentConfig, design=None, pilot_response=None) -> ResultTable:
    """Search degrees of freedom of the lasso refit along small penalties.

    The truth is synthetic: a full OLS pilot fit on the supplied (or
    generated) design defines the mean and noise level. Per penalty, the
    df estimate is compared with the naive selected-size count and the
    Monte-Carlo true df. Method names: "additive" carries the df estimate,
    "cp" the naive count.
    """
    cfg.validate()
    root = child_seed(cfg.seed, _SALT_DF)
    if design is not None:
        X = as_design(design)
    elif cfg.design_csv:
        from .io import read_matrix_csv

        X = as_design(read_matrix_csv(cfg.design_csv))
    else:
        X = synthetic_wide_design(cfg.n, 64, seed=child_seed(root, 0), rho=cfg.rho)
    if X.n < 2 or X.p >= X.n:
        raise InvalidInputError("df study needs a design with p < n rows")
    if pilot_response is None:
        pilot_response, _, _ = gen_response(X, min(8, X.p), 1.0, cfg.sigma,
                                            seed=child_seed(root, 1))
    mu, noise = pilot_truth(X, pilot_response)
    sigma = noise.sigma
    kappas = cfg.kappa_grid or (0.05, 0.1, 0.15, 0.2, 0.25)
    alpha = _figure_alpha(cfg)
    scale = lambda_min(X, sigma, rng_seed=child_seed(root, 4)).value
    rows = []
    xpos = {}
    for j, kappa in enumerate(kappas):
        name = f"df_k{kappa:g}"
        spec = SelectorSpec.lasso(kappa * scale)
        truth = mc_true_df(X, TruthSpec(mu, noise.sigma2, cfg.truth_replications,
                                        seed=child_seed(root, 5 + j)), spec,
                           workers=cfg.workers)
        rep_root = child_seed(child_seed(root, 3), j)

        def one_replicate(r, spec=spec, rep_root=rep_root):
            rs = child_seed(rep_root, r)
            rng = np.random.default_rng(child_seed(rs, 0))
            y = mu + sigma * rng.standard_normal(X.n)
            df_hat = search_df(X, y, alpha, spec, noise, cfg.n_draws,
                               rng_seed=child_seed(rs, 1))
            naive = naive_df(select_support(X, y, spec))
            return df_hat, naive

        results = ordered_map(one_replicate, range(cfg.replications), cfg.workers)
        for r, (df_hat, naive) in enumerate(results, start=1):
            rows.append(ResultRow(name, "additive", r, df_hat, truth.value, truth.se))
            rows.append(ResultRow(name, "cp", r, float(naive), truth.value, truth.se))
        rows.append(ResultRow(name, "truth", 1, truth.value, truth.value, truth.se))
        xpos[name] = float(kappa)
    table = ResultTable(rows)
    _emit(cfg, "df", table, per_obs_divisors=None,
          plotter=lambda path: _plot_curves(table, path, xpos,
                                            "penalty multiplier", "Degrees of freedom"))
    return table


def run_fig_out_of_sample(cfg: ExperimentConfig) -> ResultTable:
    """Out-of-sample error at a fresh design, low-dimensional settings."""
    cfg.validate()
    root = child_seed(cfg.seed, _SALT_OUT)
    alpha = _figure_alpha(cfg)
    rows = []
    divisors = {}
    for e_idx, p in enumerate((20, 50)):
        ss = child_seed(root, e_idx)
        name = f"out_p{p}"
        s = min(cfg.s, p)
        X = gen_design(cfg.n, p, cfg.rho, seed=child_seed(ss, 0))
        X_new = gen_design(cfg.n, p, cfg.rho, seed=child_seed(ss, 6))
        y0, beta0, mu = gen_response(X, s, cfg.snr, cfg.sigma, seed=child_seed(ss, 1))
        mu_new = X_new.entries @ beta0
        spec = concretize(SelectorSpec.lasso_kappa(1.1), X, sigma=cfg.sigma,
                          rng_seed=child_seed(ss, 4))
        truth = mc_true_err_out(X, X_new, mu_new,
                                TruthSpec(mu, cfg.sigma ** 2, cfg.truth_replications,
                                          seed=child_seed(ss, 2)), spec,
                                workers=cfg.workers)
        rep_root = child_seed(ss, 3)

        def one_replicate(r, X=X, X_new=X_new, mu=mu, spec=spec, rep_root=rep_root):
            rs = child_seed(rep_root, r)
            rng = np.random.default_rng(child_seed(rs, 0))
            y = mu + cfg.sigma * rng.standard_normal(X.n)
            noise = _noise_for_replicate(X, y, cfg.sigma ** 2, "ols")
            additive = err_out_alpha(X, X_new, y, alpha, spec, noise, cfg.n_draws,
                                     rng_seed=child_seed(rs, 1)).estimate
            cv = loo_cv(X, y, spec)
            return additive, cv

        results = ordered_map(one_replicate, range(cfg.replications), cfg.workers)
        for r, (additive, cv) in enumerate(results, start=1):
            rows.append(ResultRow(name, "additive", r, additive, truth.value, truth.se))
            rows.append(ResultRow(name, "cv", r, cv, truth.value, truth.se))
        rows.append(ResultRow(name, "truth", 1, truth.value, truth.value, truth.se))
        divisors[name] = X.n
    table = ResultTable(rows)
    _emit(cfg, "out_of_sample", table, divisors,
          plotter=lambda path: _plot_boxes(table, path, "Out-of-sample estimates"))
    return table


def best_subset_design(n=100, p=6, seed=None) -> DesignMatrix:
    """The subset-size study design: i.i.d. standard normal entries with
    columns standardized to unit length.

    Unit-length columns put the coefficient scale and the noise on the same
    footing, so nearby subsets genuinely compete; without standardization
    the subset search is numerically deterministic and the post-selection
    effect the study measures vanishes.
    """
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((int(n), int(p)))
    X /= np.linalg.norm(X, axis=0)
    return DesignMatrix.from_array(X, normalized=False)


def run_fig_best_subset(cfg: ExperimentConfig, *, sigma_mode: str = "ols") -> ResultTable:
    """Naive covariance penalty vs the randomized estimator per subset size.

    Design: 100 x 6 standardized Gaussian; coefficients (1, ..., 6); for
    each size k the best size-k subset is refit. The naive penalty ignores
    the subset search and under-prices sizes with many competing subsets.
    """
    cfg.validate()
    root = child_seed(cfg.seed, _SALT_BEST_SUBSET)
    n, p = 100, 6
    X = best_subset_design(n, p, seed=child_seed(root, 0))
    beta0 = np.arange(1.0, p + 1.0)
    mu = X.entries @ beta0
    sigma = cfg.sigma
    alpha = _figure_alpha(cfg)
    rows = []
    divisors = {}
    xpos = {}
    for k in range(1, p + 1):
        name = f"bestsub_k{k}"
        spec = SelectorSpec.best_subset(k)
        truth = mc_true_err(X, TruthSpec(mu, sigma ** 2, cfg.truth_replications,
                                         seed=child_seed(root, 5 + k)), spec,
                            workers=cfg.workers)
        rep_root = child_seed(child_seed(root, 3), k)

        def one_replicate(r, spec=spec, rep_root=rep_root):
            rs = child_seed(rep_root, r)
            rng = np.random.default_rng(child_seed(rs, 0))
            y = mu + sigma * rng.standard_normal(n)
            noise = _noise_for_replicate(X, y, sigma ** 2, sigma_mode)
            m_hat = select_support(X, y, spec)
            cp = cp_estimate(X, y, m_hat, noise)
            additive = err_alpha_averaged(X, y, alpha, spec, noise, cfg.n_draws,
                                          rng_seed=child_seed(rs, 1)).estimate
            return cp, additive

        results = ordered_map(one_replicate, range(cfg.replications), cfg.workers)
        for r, (cp, additive) in enumerate(results, start=1):
            rows.append(ResultRow(name, "additive", r, additive, truth.value, truth.se))
            rows.append(ResultRow(name, "cp", r, cp, truth.value, truth.se))
        rows.append(ResultRow(name, "truth", 1, truth.value, truth.value, truth.se))
        divisors[name] = n
        xpos[name] = float(k)
    table = ResultTable(rows)
    _emit(cfg, "best_subset", table, divisors,
          plotter=lambda path: _plot_curves(table, path, xpos,
                                            "subset size", "Best-subset study"))
    return table


def _plot_boxes(table: ResultTable, path, title) -> None:
    import matplotlib

    matplotlib.use("Agg")
    from matplotlib import pyplot as plt

    experiments = table.experiments()
    fig, axes = plt.subplots(1, len(experiments), figsize=(4 * len(experiments), 4),
                             squeeze=False)
    for ax, exp in zip(axes[0], experiments):
        methods = [m for m in METHODS if m != "truth" and len(table.estimates(exp, m))]
        data = [table.estimates(exp, m) for m in methods]
        ax.boxplot(data, tick_labels=methods)
        truth, se = table.truth_of(exp)
        ax.axhline(truth, color="red", lw=1)
        ax.axhline(truth + se, color="black", lw=0.8, ls="--")
        ax.axhline(truth - se, color="black", lw=0.8, ls="--")
        ax.set_title(exp)
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def _plot_curves(table: ResultTable, path, xpos: dict, xlabel, title) -> None:
    import matplotlib

    matplotlib.use("Agg")
    from matplotlib import pyplot as plt

    groups = {}
    for exp in table.experiments():
        prefix = exp.rsplit("_", 1)[0]
        groups.setdefault(prefix, []).append(exp)
    fig, axes = plt.subplots(1, len(groups), figsize=(5 * len(groups), 4),
                             squeeze=False)
    for ax, (prefix, exps) in zip(axes[0], sorted(groups.items())):
        exps = sorted(exps, key=lambda e: xpos[e])
        xs = [xpos[e] for e in exps]
        for method in METHODS:
            if method == "truth":
                continue
            means = [np.mean(table.estimates(e, method)) for e in exps
                     if len(table.estimates(e, method))]
            if len(means) == len(exps):
                ax.plot(xs, means, marker="o", label=method)
        truths = [table.truth_of(e) for e in exps]
        ax.plot(xs, [t for t, _ in truths], color="red", label="truth")
        ax.fill_between(xs, [t - s for t, s in truths], [t + s for t, s in truths],
                        color="red", alpha=0.15)
        ax.set_xlabel(xlabel)
        ax.set_title(prefix)
        ax.legend()
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
