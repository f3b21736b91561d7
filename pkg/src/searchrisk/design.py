"""Design matrices, selected supports, and selector descriptions."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidInputError

_COLUMN_NORM_RTOL = 1e-12


@dataclass(frozen=True)
class DesignMatrix:
    """A fixed n x p design with cached column geometry.

    Parameters
    ----------
    entries : ndarray of shape (n, p)
        The design matrix; all entries must be finite.
    column_norms : ndarray of shape (p,)
        Euclidean length of each column. Must agree with `entries` to a
        relative tolerance of 1e-12.
    normalized : bool
        Whether the columns were rescaled to length sqrt(n).
    """

    entries: np.ndarray
    column_norms: np.ndarray
    normalized: bool = False
    _gram: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        entries = np.ascontiguousarray(self.entries, dtype=float)
        if entries.ndim != 2:
            raise InvalidInputError(f"design must be two-dimensional, got shape {entries.shape}")
        n, p = entries.shape
        if n < 1 or p < 1:
            raise InvalidInputError(f"design needs n >= 1 and p >= 1, got {n} x {p}")
        if not np.all(np.isfinite(entries)):
            raise InvalidInputError("design contains non-finite entries")
        norms = np.asarray(self.column_norms, dtype=float)
        if norms.shape != (p,):
            raise InvalidInputError(f"column_norms must have shape ({p},), got {norms.shape}")
        actual = np.linalg.norm(entries, axis=0)
        scale = np.maximum(actual, 1.0)
        if np.any(np.abs(norms - actual) > _COLUMN_NORM_RTOL * scale):
            raise InvalidInputError("column_norms disagree with the matrix columns")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "column_norms", norms)

    @classmethod
    def from_array(cls, X, normalized: bool = False) -> "DesignMatrix":
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise InvalidInputError(f"design must be two-dimensional, got shape {X.shape}")
        return cls(entries=X, column_norms=np.linalg.norm(X, axis=0), normalized=normalized)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def p(self) -> int:
        return self.entries.shape[1]

    def gram(self) -> np.ndarray:
        """X'X, computed once and cached."""
        if self._gram is None:
            object.__setattr__(self, "_gram", self.entries.T @ self.entries)
        return self._gram

    def columns(self, support: "Support") -> np.ndarray:
        return self.entries[:, list(support.indices)]


def as_design(X) -> DesignMatrix:
    """Coerce an array-like into a DesignMatrix (no copy when already one)."""
    if isinstance(X, DesignMatrix):
        return X
    return DesignMatrix.from_array(X)


@dataclass(frozen=True)
class Support:
    """An ordered set of selected column indices (0-based)."""

    indices: tuple = ()

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if any(i < 0 for i in idx):
            raise InvalidInputError(f"support indices must be nonnegative, got {idx}")
        if any(a >= b for a, b in zip(idx, idx[1:])):
            raise InvalidInputError(f"support indices must be strictly increasing, got {idx}")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def from_iterable(cls, indices) -> "Support":
        return cls(tuple(sorted(set(int(i) for i in indices))))

    @property
    def size(self) -> int:
        return len(self.indices)

    def __len__(self) -> int:
        return len(self.indices)

    def as_array(self) -> np.ndarray:
        return np.array(self.indices, dtype=int)

    def check_within(self, p: int) -> None:
        if self.indices and self.indices[-1] >= p:
            raise InvalidInputError(f"support {self.indices} references columns beyond p={p}")


EMPTY_SUPPORT = Support(())

LASSO_FIXED_LAMBDA = "lasso_fixed_lambda"
LASSO_KAPPA = "lasso_kappa"
BEST_SUBSET = "best_subset"
FORWARD_STEPWISE = "forward_stepwise"
_KINDS = (LASSO_FIXED_LAMBDA, LASSO_KAPPA, BEST_SUBSET, FORWARD_STEPWISE)


@dataclass(frozen=True)
class SelectorSpec:
    """Declarative description of a model-search procedure.

    Exactly the fields relevant to `kind` may be set:

    - "lasso_fixed_lambda": `lam` (nonnegative penalty)
    - "lasso_kappa": `kappa` (positive multiplier of the noise-scale penalty)
    - "best_subset" / "forward_stepwise": `k` (subset size / step count)
    """

    kind: str
    lam: float = None
    kappa: float = None
    k: int = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise InvalidInputError(f"unknown selector kind {self.kind!r}; expected one of {_KINDS}")
        set_fields = {name for name, val in
                      (("lam", self.lam), ("kappa", self.kappa), ("k", self.k))
                      if val is not None}
        wanted = {LASSO_FIXED_LAMBDA: {"lam"}, LASSO_KAPPA: {"kappa"},
                  BEST_SUBSET: {"k"}, FORWARD_STEPWISE: {"k"}}[self.kind]
        if set_fields != wanted:
            raise InvalidInputError(
                f"selector kind {self.kind!r} requires exactly fields {sorted(wanted)}, got {sorted(set_fields)}")
        if self.lam is not None:
            lam = float(self.lam)
            if not np.isfinite(lam) or lam < 0:
                raise InvalidInputError(f"lambda must be finite and >= 0, got {self.lam}")
            object.__setattr__(self, "lam", lam)
        if self.kappa is not None:
            kappa = float(self.kappa)
            if not np.isfinite(kappa) or kappa <= 0:
                raise InvalidInputError(f"kappa must be finite and > 0, got {self.kappa}")
            object.__setattr__(self, "kappa", kappa)
        if self.k is not None:
            k = int(self.k)
            if k < 0:
                raise InvalidInputError(f"subset size must be >= 0, got {self.k}")
            object.__setattr__(self, "k", k)

    @classmethod
    def lasso(cls, lam) -> "SelectorSpec":
        return cls(kind=LASSO_FIXED_LAMBDA, lam=lam)

    @classmethod
    def lasso_kappa(cls, kappa) -> "SelectorSpec":
        return cls(kind=LASSO_KAPPA, kappa=kappa)

    @classmethod
    def best_subset(cls, k) -> "SelectorSpec":
        return cls(kind=BEST_SUBSET, k=k)

    @classmethod
    def forward_stepwise(cls, k) -> "SelectorSpec":
        return cls(kind=FORWARD_STEPWISE, k=k)

    @property
    def needs_sigma(self) -> bool:
        return self.kind == LASSO_KAPPA
