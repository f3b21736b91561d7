"""Shared numerics: Monte-Carlo summaries, seed derivation, ordered parallel map."""
from __future__ import annotations

import concurrent.futures
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .exceptions import InvalidInputError


class McValue(NamedTuple):
    """A Monte-Carlo estimate together with its standard error."""

    value: float
    se: float


def mean_se(values) -> McValue:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise InvalidInputError("mean_se needs at least one value")
    if v.size == 1:
        return McValue(float(v[0]), float("nan"))
    return McValue(float(v.mean()), float(v.std(ddof=1) / np.sqrt(v.size)))


def as_seedseq(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def child_seed(seed, index: int) -> np.random.SeedSequence:
    """Substream `index` of `seed`.

    Addressed by index alone (not by spawn order), so the stream a draw
    uses cannot depend on scheduling or on how many siblings exist.
    """
    root = as_seedseq(seed)
    return np.random.SeedSequence(entropy=root.entropy,
                                  spawn_key=root.spawn_key + (index,))


def ordered_map(fn: Callable, items: Sequence, workers: int = 1) -> list:
    """Map `fn` over `items`, preserving input order in the result.

    With workers > 1 the calls run on a thread pool; results are still
    gathered by input index, so the output is identical for any pool size.
    """
    if workers <= 1:
        return [fn(item) for item in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def check_vector(y, n=None, name="y") -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional, got shape {y.shape}")
    if n is not None and y.shape[0] != n:
        raise InvalidInputError(f"{name} has length {y.shape[0]}, expected {n}")
    if not np.all(np.isfinite(y)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return y
