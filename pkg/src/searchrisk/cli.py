"""Command-line interface: estimate, df, tune, oracle, and simulate subcommands.

Flags may also be given in a flat `key = value` config file (keys equal the
long flag names without the leading dashes); explicit flags win.
"""
from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from .baselines import naive_df, sigma_ols
from .config import ExperimentConfig, read_key_values
from .datagen import gen_design, gen_response
from .design import SelectorSpec
from .exceptions import SearchRiskError
from .experiments import (run_fig_barplot, run_fig_best_subset, run_fig_df,
                          run_fig_lambda_sweep, run_fig_out_of_sample)
from .io import (format_float, read_matrix_csv, read_vector_csv,
                 write_estimate_report_csv, write_rows_csv)
from .oracle import TruthSpec, mc_true_err
from .randomized import (NoiseLevel, bic_criterion, default_alpha,
                         err_alpha_averaged, search_df, tune_lambda)
from .selection import lambda_min, make_selector
from .util import child_seed

_FIGURES = ("barplot", "lambda", "df", "out", "best-subset")

# flag -> (argparse dest, converter); "lambda" cannot be a dest (keyword).
_FLAGS = {
    "x-csv": ("x_csv", str),
    "y-csv": ("y_csv", str),
    "mu-csv": ("mu_csv", str),
    "design-csv": ("design_csv", str),
    "selector": ("selector", str),
    "lambda": ("lam", float),
    "kappa": ("kappa", float),
    "k": ("k", int),
    "alpha": ("alpha", float),
    "n-draws": ("n_draws", int),
    "sigma2": ("sigma2", float),
    "sigma": ("sigma", float),
    "seed": ("seed", int),
    "out": ("out", str),
    "workers": ("workers", int),
    "enumeration-cap": ("enumeration_cap", int),
    "lambda-grid": ("lambda_grid", str),
    "kappa-grid": ("kappa_grid", str),
    "n": ("n", int),
    "p": ("p", int),
    "s": ("s", int),
    "snr": ("snr", float),
    "rho": ("rho", float),
    "r": ("r", int),
    "truth-r": ("truth_r", int),
    "b": ("b", int),
}


def _add_flags(parser, flags):
    for flag in flags:
        dest, conv = _FLAGS[flag]
        parser.add_argument(f"--{flag}", dest=dest, type=conv, default=None)
    parser.add_argument("--config", default=None)
    parser.set_defaults(_flags=tuple(flags))


def _apply_config(args) -> None:
    if not getattr(args, "config", None):
        return
    allowed = set(getattr(args, "_flags", ()))
    for key, raw in read_key_values(args.config).items():
        if key not in allowed:
            raise SearchRiskError(f"config key {key!r} is not a flag of this subcommand")
        dest, conv = _FLAGS[key]
        if getattr(args, dest) is None:  # explicit flags win
            try:
                setattr(args, dest, conv(raw))
            except ValueError as exc:
                raise SearchRiskError(f"config value for {key!r} is invalid: {raw!r}") from exc


def _load_xy(args):
    if not args.x_csv or not args.y_csv:
        raise SearchRiskError("--x-csv and --y-csv are required")
    X = read_matrix_csv(args.x_csv)
    y = read_vector_csv(args.y_csv)
    if y.shape[0] != X.shape[0]:
        raise SearchRiskError(f"y has {y.shape[0]} rows but X has {X.shape[0]}")
    return X, y


def _build_spec(args) -> SelectorSpec:
    selector = args.selector or "lasso"
    if selector == "lasso":
        if (args.lam is None) == (args.kappa is None):
            raise SearchRiskError("lasso needs exactly one of --lambda or --kappa")
        return (SelectorSpec.lasso(args.lam) if args.lam is not None
                else SelectorSpec.lasso_kappa(args.kappa))
    if selector == "best-subset":
        if args.k is None:
            raise SearchRiskError("--k is required for best-subset")
        return SelectorSpec.best_subset(args.k)
    if selector == "stepwise":
        if args.k is None:
            raise SearchRiskError("--k is required for stepwise")
        return SelectorSpec.forward_stepwise(args.k)
    raise SearchRiskError(f"unknown selector {selector!r}; expected lasso|best-subset|stepwise")


def _resolve_noise(args, X, y) -> NoiseLevel:
    if args.sigma2 is not None:
        return NoiseLevel(args.sigma2)
    if X.shape[1] >= X.shape[0]:
        raise SearchRiskError("sigma2 required when p >= n")
    return sigma_ols(X, y)


def _common(args, *, need_spec: bool = True):
    X, y = _load_xy(args)
    spec = _build_spec(args) if need_spec else None
    noise = _resolve_noise(args, X, y)
    alpha = args.alpha if args.alpha is not None else default_alpha(X.shape[0])
    n_draws = args.n_draws if args.n_draws is not None else 50
    seed = args.seed if args.seed is not None else 0
    workers = args.workers if args.workers is not None else 1
    out = args.out or "results"
    if need_spec and getattr(args, "enumeration_cap", None) is not None:
        # Explicit override of the exhaustive-search budget: hand the
        # estimators a ready-made selector carrying the raised cap.
        spec = make_selector(spec, sigma=noise.sigma, rng_seed=seed,
                             enumeration_cap=args.enumeration_cap)
    return X, y, spec, noise, alpha, n_draws, seed, workers, out


def _cmd_estimate(args) -> int:
    X, y, spec, noise, alpha, n_draws, seed, workers, out = _common(args)
    report = err_alpha_averaged(X, y, alpha, spec, noise, n_draws, rng_seed=seed,
                                workers=workers)
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "estimate_report.csv")
    write_estimate_report_csv(path, report)
    print(f"prediction-error estimate (total): {report.estimate:.6g}")
    print(f"prediction-error estimate (per observation): {report.estimate_per_obs:.6g}")
    print(f"between-draw se: {report.mc_se:.6g}  draws: {report.n_draws}")
    print(f"alpha: {report.alpha:.6g}  sigma2: {noise.sigma2:.6g} ({noise.source})")
    print(f"selected support sizes: {report.support_size_counts()}")
    print(f"wrote {path}")
    return 0


def _cmd_df(args) -> int:
    X, y, spec, noise, alpha, n_draws, seed, workers, out = _common(args)
    df_hat = search_df(X, y, alpha, spec, noise, n_draws, rng_seed=seed, workers=workers)
    selector = make_selector(spec, sigma=noise.sigma, rng_seed=seed)
    naive = naive_df(selector(X, y))
    bic = bic_criterion(X, y, alpha, spec, noise, n_draws, rng_seed=seed, workers=workers)
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "df_report.csv")
    write_rows_csv(path, ["quantity", "value"],
                   [["search_df", format_float(df_hat)],
                    ["naive_df", str(naive)],
                    ["bic", format_float(bic)]])
    print(f"search degrees of freedom: {df_hat:.6g}")
    print(f"naive selected-size count: {naive}")
    print(f"bic criterion: {bic:.6g}")
    print(f"wrote {path}")
    return 0


def _cmd_tune(args) -> int:
    X, y, _, noise, alpha, n_draws, seed, workers, out = _common(args, need_spec=False)
    if (args.lambda_grid is None) == (args.kappa_grid is None):
        raise SearchRiskError("tune needs exactly one of --lambda-grid or --kappa-grid")
    if args.lambda_grid is not None:
        grid = [float(tok) for tok in args.lambda_grid.split(",") if tok.strip()]
    else:
        scale = lambda_min(X, noise.sigma, rng_seed=child_seed(seed, 1_000_000)).value
        grid = [float(tok) * scale for tok in args.kappa_grid.split(",") if tok.strip()]
    if not grid:
        raise SearchRiskError("the penalty grid is empty")
    best, reports = tune_lambda(X, y, alpha, grid, noise, n_draws, rng_seed=seed,
                                workers=workers)
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "tune_table.csv")
    rows = [[format_float(lam), format_float(rep.estimate),
             format_float(rep.estimate_per_obs), format_float(rep.mc_se)]
            for lam, rep in zip(grid, reports)]
    write_rows_csv(path, ["lambda", "estimate", "estimate_per_obs", "mc_se"], rows)
    print(f"optimal lambda: {best:.6g}")
    print(f"wrote {path}")
    return 0


def _cmd_oracle(args) -> int:
    seed = args.seed if args.seed is not None else 0
    workers = args.workers if args.workers is not None else 1
    out = args.out or "results"
    reps = args.r if args.r is not None else 1000
    if args.x_csv:
        if not args.mu_csv:
            raise SearchRiskError("--mu-csv is required with --x-csv (the oracle needs a truth)")
        X = read_matrix_csv(args.x_csv)
        mu = read_vector_csv(args.mu_csv)
        if args.sigma2 is None:
            raise SearchRiskError("--sigma2 is required with --mu-csv")
        sigma2 = args.sigma2
    else:
        n = args.n if args.n is not None else 100
        p = args.p if args.p is not None else 20
        rho = args.rho if args.rho is not None else 0.3
        s = args.s if args.s is not None else min(10, p)
        snr = args.snr if args.snr is not None else 7.0
        sigma2 = args.sigma2 if args.sigma2 is not None else 1.0
        Xd = gen_design(n, p, rho, seed=child_seed(seed, 0))
        _, _, mu = gen_response(Xd, s, snr, math.sqrt(sigma2), seed=child_seed(seed, 1))
        X = Xd.entries
    spec = _build_spec(args)
    truth = TruthSpec(mu, sigma2, replications=reps, seed=child_seed(seed, 2))
    value = mc_true_err(X, truth, spec, workers=workers)
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "oracle.csv")
    write_rows_csv(path, ["quantity", "mean", "se", "replications", "seed"],
                   [["true_err", format_float(value.value), format_float(value.se),
                     str(reps), str(seed)]])
    print(f"monte-carlo prediction error: {value.value:.6g} (se {value.se:.3g})")
    print(f"wrote {path}")
    return 0


def _cmd_simulate(args) -> int:
    cfg = ExperimentConfig()
    for field, dest in (("n", "n"), ("p", "p"), ("s", "s"), ("snr", "snr"),
                        ("rho", "rho"), ("kappa", "kappa"), ("lam", "lam"),
                        ("k", "k"), ("alpha", "alpha"), ("n_draws", "n_draws"),
                        ("replications", "r"), ("truth_replications", "truth_r"),
                        ("bootstrap_reps", "b"), ("sigma", "sigma"), ("seed", "seed"),
                        ("out_dir", "out"), ("workers", "workers"),
                        ("design_csv", "design_csv")):
        value = getattr(args, dest, None)
        if value is not None:
            setattr(cfg, field, value)
    if args.kappa_grid is not None:
        cfg.kappa_grid = tuple(float(t) for t in args.kappa_grid.split(",") if t.strip())
    if args.lambda_grid is not None:
        cfg.lambda_grid = tuple(float(t) for t in args.lambda_grid.split(",") if t.strip())
    runner = {"barplot": run_fig_barplot, "lambda": run_fig_lambda_sweep,
              "df": run_fig_df, "out": run_fig_out_of_sample,
              "best-subset": run_fig_best_subset}[args.figure]
    runner(cfg)
    print(f"wrote results under {cfg.out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="searchrisk",
        description="Prediction-error estimation for search-then-refit linear rules")
    sub = parser.add_subparsers(dest="command", required=True)

    common = ("x-csv", "y-csv", "selector", "lambda", "kappa", "k", "alpha",
              "n-draws", "sigma2", "seed", "out", "workers", "enumeration-cap")
    p_est = sub.add_parser("estimate", help="averaged randomized error estimate")
    _add_flags(p_est, common)
    p_est.set_defaults(func=_cmd_estimate)

    p_df = sub.add_parser("df", help="search degrees of freedom and BIC")
    _add_flags(p_df, common)
    p_df.set_defaults(func=_cmd_df)

    p_tune = sub.add_parser("tune", help="pick the lasso penalty on a grid")
    _add_flags(p_tune, common + ("lambda-grid", "kappa-grid"))
    p_tune.set_defaults(func=_cmd_tune)

    p_oracle = sub.add_parser("oracle", help="Monte-Carlo ground truth")
    _add_flags(p_oracle, ("x-csv", "mu-csv", "selector", "lambda", "kappa", "k",
                          "sigma2", "seed", "out", "workers", "n", "p", "s", "snr",
                          "rho", "r"))
    p_oracle.set_defaults(func=_cmd_oracle)

    p_sim = sub.add_parser("simulate", help="reproduce a simulation study")
    p_sim.add_argument("figure", choices=_FIGURES)
    _add_flags(p_sim, ("n", "p", "s", "snr", "rho", "kappa", "lambda", "k", "alpha",
                       "n-draws", "r", "truth-r", "b", "sigma", "seed", "out",
                       "workers", "kappa-grid", "lambda-grid", "design-csv"))
    p_sim.set_defaults(func=_cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args)
        return args.func(args)
    except SearchRiskError as exc:
        print(f"error: {args.command}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {args.command}: input/output failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
