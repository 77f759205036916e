"""Datasets, standardization, and coefficient containers.

Solvers in this package operate on a centered design whose columns have
Euclidean norm exactly sqrt(n) and a centered response.  ``standardize``
produces that form while recording the affine maps needed to report
coefficients on the original scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConstantColumnError,
    DimensionMismatchError,
    NonFiniteInputError,
    NotStandardizedError,
)

__all__ = [
    "Dataset",
    "Coefficients",
    "standardize",
    "destandardize_coefficients",
    "residual_ss",
    "load_design_csv",
    "load_response_csv",
]


@dataclass(frozen=True)
class Dataset:
    """Design matrix and response with standardization bookkeeping.

    Attributes
    ----------
    x : ndarray (n, p)
        Design matrix.  When ``standardized`` is true every column has
        sample mean 0 and Euclidean norm sqrt(n).
    y : ndarray (n,)
        Response.  Centered when ``standardized`` is true.
    column_means, column_scales : ndarray (p,)
        Per-column centering and scaling applied to the raw design.
    y_mean : float
        Mean removed from the raw response.
    standardized : bool
        Whether x and y are in solver form.
    """

    x: np.ndarray
    y: np.ndarray
    column_means: np.ndarray
    column_scales: np.ndarray
    y_mean: float
    standardized: bool

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        if x.ndim != 2 or y.ndim != 1:
            raise DimensionMismatchError("x must be 2-d and y 1-d")
        n, p = x.shape
        if y.shape[0] != n:
            raise DimensionMismatchError(f"x has {n} rows but y has {y.shape[0]}")
        if n < 3:
            raise DimensionMismatchError("need at least 3 observations")
        if p < 1:
            raise DimensionMismatchError("need at least 1 predictor")
        if not (np.isfinite(x).all() and np.isfinite(y).all()):
            raise NonFiniteInputError("x or y contains non-finite entries")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "column_means", np.asarray(self.column_means, dtype=np.float64))
        object.__setattr__(self, "column_scales", np.asarray(self.column_scales, dtype=np.float64))
        for a in (self.x, self.y, self.column_means, self.column_scales):
            a.setflags(write=False)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @classmethod
    def from_arrays(cls, x, y) -> "Dataset":
        """Wrap raw (unstandardized) arrays."""
        x = np.asarray(x, dtype=np.float64)
        p = x.shape[1] if x.ndim == 2 else 0
        return cls(
            x=x,
            y=np.asarray(y, dtype=np.float64),
            column_means=np.zeros(p),
            column_scales=np.ones(p),
            y_mean=0.0,
            standardized=False,
        )


@dataclass(frozen=True)
class Coefficients:
    """Sparse-aware coefficient vector."""

    beta: np.ndarray
    support: np.ndarray = field(default=None)
    nnz: int = field(default=None)

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=np.float64)
        object.__setattr__(self, "beta", beta)
        if self.support is None:
            object.__setattr__(self, "support", np.flatnonzero(beta))
        if self.nnz is None:
            object.__setattr__(self, "nnz", int(self.support.size))
        self.beta.setflags(write=False)
        if self.nnz != int(np.count_nonzero(beta)):
            raise DimensionMismatchError("nnz does not match the number of nonzeros")
        if self.support.size and (self.support.min() < 0 or self.support.max() >= beta.size):
            raise DimensionMismatchError("support index out of range")

    @classmethod
    def from_beta(cls, beta) -> "Coefficients":
        return cls(beta=np.asarray(beta, dtype=np.float64))


def standardize(dataset: Dataset) -> Dataset:
    """Center x and y; rescale columns of x to Euclidean norm sqrt(n).

    Idempotent: a dataset that is already standardized is returned as is.

    Raises
    ------
    ConstantColumnError
        If some column of x has zero variance.
    """
    if dataset.standardized:
        return dataset
    x, y = dataset.x, dataset.y
    n = x.shape[0]
    means = x.mean(axis=0)
    centered = x - means
    norms = np.linalg.norm(centered, axis=0)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ConstantColumnError(int(zero[0]))
    scales = norms / np.sqrt(n)
    y_mean = float(y.mean())
    return Dataset(
        x=centered / scales,
        y=y - y_mean,
        column_means=means,
        column_scales=scales,
        y_mean=y_mean,
        standardized=True,
    )


def destandardize_coefficients(coef: Coefficients, dataset: Dataset):
    """Map solver-scale coefficients back to the raw scale.

    Returns ``(beta_original, intercept)`` such that
    ``x_raw @ beta_original + intercept == x_std @ beta + y_mean``.
    """
    if not dataset.standardized:
        raise NotStandardizedError("dataset carries no standardization record")
    beta_orig = coef.beta / dataset.column_scales
    intercept = dataset.y_mean - float(dataset.column_means @ beta_orig)
    return beta_orig, intercept


def residual_ss(dataset: Dataset, coef: Coefficients) -> float:
    """Residual sum of squares ||y - x beta||^2."""
    beta = coef.beta
    if beta.shape[0] != dataset.p:
        raise DimensionMismatchError(
            f"beta has length {beta.shape[0]} but x has {dataset.p} columns"
        )
    r = dataset.y - dataset.x @ beta
    return float(r @ r)


def _parse_numeric_rows(path) -> list[list[float]]:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            parsed = []
            for col, tok in enumerate(fields, start=1):
                try:
                    parsed.append(float(tok))
                except ValueError:
                    raise NonFiniteInputError(
                        f"{path}: line {lineno}, column {col}: not a number: {tok!r}"
                    ) from None
            rows.append((lineno, parsed))
    if not rows:
        raise NonFiniteInputError(f"{path}: no data rows")
    width = len(rows[0][1])
    for lineno, parsed in rows:
        if len(parsed) != width:
            raise DimensionMismatchError(
                f"{path}: line {lineno}: expected {width} values, got {len(parsed)}"
            )
    return [parsed for _, parsed in rows]


def load_design_csv(path) -> np.ndarray:
    """Read a headerless numeric CSV design matrix, rejecting ragged rows."""
    return np.asarray(_parse_numeric_rows(path), dtype=np.float64)


def load_response_csv(path) -> np.ndarray:
    """Read a single-column numeric CSV response vector."""
    rows = _parse_numeric_rows(path)
    if len(rows[0]) != 1:
        raise DimensionMismatchError(f"{path}: expected a single column, got {len(rows[0])}")
    return np.asarray([r[0] for r in rows], dtype=np.float64)
