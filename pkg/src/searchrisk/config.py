"""Experiment configuration with a flat key = value file format.

Keys in the file match the CLI flag names (dashes included); command-line
flags override file values.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, fields

from .exceptions import InvalidInputError


def _parse_float_list(text):
    return tuple(float(tok) for tok in text.split(",") if tok.strip() != "")


def _format_float_list(values):
    return ",".join(repr(float(v)) for v in values)


# field name -> (file key, parser, formatter)
_FIELD_CODECS = {
    "n": ("n", int, str),
    "p": ("p", int, str),
    "s": ("s", int, str),
    "snr": ("snr", float, lambda v: repr(float(v))),
    "rho": ("rho", float, lambda v: repr(float(v))),
    "kappa": ("kappa", float, lambda v: repr(float(v))),
    "lam": ("lambda", float, lambda v: repr(float(v))),
    "k": ("k", int, str),
    "kappa_grid": ("kappa-grid", _parse_float_list, _format_float_list),
    "lambda_grid": ("lambda-grid", _parse_float_list, _format_float_list),
    "alpha": ("alpha", float, lambda v: repr(float(v))),
    "n_draws": ("n-draws", int, str),
    "replications": ("r", int, str),
    "truth_replications": ("truth-r", int, str),
    "bootstrap_reps": ("b", int, str),
    "sigma": ("sigma", float, lambda v: repr(float(v))),
    "seed": ("seed", int, str),
    "selector": ("selector", str, str),
    "out_dir": ("out", str, str),
    "workers": ("workers", int, str),
    "design_csv": ("design-csv", str, str),
}


@dataclass
class ExperimentConfig:
    """Knobs for the simulation-study runners.

    `alpha=None` means "use the n ** (-1/4) default at run time". Replication
    counts: `replications` drives the estimator comparison, and
    `truth_replications` the Monte-Carlo truth.
    """

    n: int = 100
    p: int = 200
    s: int = 10
    snr: float = 7.0
    rho: float = 0.3
    kappa: float = None
    lam: float = None
    k: int = None
    kappa_grid: tuple = None
    lambda_grid: tuple = None
    alpha: float = None
    n_draws: int = 50
    replications: int = 500
    truth_replications: int = 10_000
    bootstrap_reps: int = 200
    sigma: float = 1.0
    seed: int = 0
    selector: str = "lasso"
    out_dir: str = "results"
    workers: int = 1
    design_csv: str = None

    def validate(self) -> "ExperimentConfig":
        if self.n < 1 or self.p < 1:
            raise InvalidInputError("n and p must be >= 1")
        if not 0 <= self.s <= self.p:
            raise InvalidInputError(f"sparsity s={self.s} must lie in [0, p={self.p}]")
        if not 0.0 <= self.rho < 1.0:
            raise InvalidInputError(f"rho must lie in [0, 1), got {self.rho}")
        for name in ("n_draws", "replications", "truth_replications",
                     "bootstrap_reps", "workers"):
            if getattr(self, name) < 1:
                raise InvalidInputError(f"{name} must be >= 1")
        if self.truth_replications < 2:
            raise InvalidInputError("truth_replications must be >= 2")
        if self.sigma <= 0:
            raise InvalidInputError("sigma must be > 0")
        if self.selector not in ("lasso", "best-subset", "stepwise"):
            raise InvalidInputError(f"unknown selector {self.selector!r}")
        return self

    def to_file(self, path) -> None:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            key, _, fmt = _FIELD_CODECS[f.name]
            lines.append(f"{key} = {fmt(value)}")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        values = read_key_values(path)
        by_key = {key: (name, parse) for name, (key, parse, _) in _FIELD_CODECS.items()}
        kwargs = {}
        for key, raw in values.items():
            if key not in by_key:
                raise InvalidInputError(f"{path}: unknown config key {key!r}")
            name, parse = by_key[key]
            try:
                kwargs[name] = parse(raw)
            except ValueError as exc:
                raise InvalidInputError(f"{path}: bad value for {key!r}: {raw!r}") from exc
        return cls(**kwargs)


def read_key_values(path) -> dict:
    """Parse a flat `key = value` file; blank lines and #-comments are skipped."""
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise InvalidInputError(f"{path}:{lineno}: expected 'key = value'")
            key, _, raw = line.partition("=")
            values[key.strip()] = raw.strip()
    return values
