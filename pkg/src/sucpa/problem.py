"""Problem data for prior-adaptation calibration.

A problem bundles the score matrix produced by a probabilistic classifier
(one row per sample, one column per class, strictly positive, rows summing
to one) with the class counts the deployment data is known to have. The
container is immutable: arrays are copied in and marked read-only, so a
problem can be shared freely between threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

ROW_SUM_TOL = 1e-9
POSITIVITY_FLOOR = 1e-300


def as_posterior_matrix(values) -> np.ndarray:
    """Validate and copy an N x K score matrix.

    Entries must be finite and strictly positive (anything below
    ``POSITIVITY_FLOOR`` counts as zero) and every row must sum to 1
    within ``ROW_SUM_TOL``.
    """
    arr = np.array(values, dtype=np.float64, order="C", copy=True)
    if arr.ndim != 2:
        raise ValidationError(f"posterior matrix must be 2-D, got shape {arr.shape}")
    n, k = arr.shape
    if n < 1 or k < 2:
        raise ValidationError(f"posterior matrix needs >=1 row and >=2 columns, got {n}x{k}")
    if not np.isfinite(arr).all():
        i, j = np.argwhere(~np.isfinite(arr))[0]
        raise ValidationError(f"non-finite posterior at row {i}, column {j}")
    if (arr < POSITIVITY_FLOOR).any():
        i, j = np.argwhere(arr < POSITIVITY_FLOOR)[0]
        raise ValidationError(
            f"posteriors must be strictly positive; row {i}, column {j} is {arr[i, j]!r}"
        )
    off = np.abs(arr.sum(axis=1) - 1.0)
    if (off > ROW_SUM_TOL).any():
        i = int(np.argmax(off))
        raise ValidationError(
            f"row {i} sums to {arr[i].sum()!r}, expected 1 within {ROW_SUM_TOL}"
        )
    return arr


def as_counts(values, n: int, k: int) -> np.ndarray:
    """Validate target class counts: K positive integers summing to N."""
    arr = np.asarray(values)
    if arr.ndim != 1 or arr.shape[0] != k:
        raise ValidationError(f"counts must be a length-{k} vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr.astype(np.float64))) or not np.all(arr == np.round(arr)):
        raise ValidationError(f"counts must be integers, got {arr!r}")
    out = arr.astype(np.int64)
    if (out < 1).any():
        j = int(np.argmin(out))
        raise ValidationError(
            f"count for class {j + 1} is {out[j]}; every class needs a positive count"
        )
    if int(out.sum()) != n:
        raise ValidationError(f"counts sum to {int(out.sum())} but the matrix has {n} rows")
    return out


def as_beta(values, k: int) -> np.ndarray:
    """Validate a bias vector: K finite reals."""
    arr = np.array(values, dtype=np.float64, copy=True).reshape(-1)
    if arr.shape[0] != k:
        raise ValidationError(f"bias vector must have length {k}, got {arr.shape[0]}")
    if not np.isfinite(arr).all():
        raise ValidationError(f"bias vector has non-finite entries: {arr!r}")
    return arr


@dataclass(frozen=True)
class SucpaProblem:
    """Scores plus target counts, validated once at construction."""

    posteriors: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        posteriors = as_posterior_matrix(self.posteriors)
        counts = as_counts(self.counts, posteriors.shape[0], posteriors.shape[1])
        posteriors.setflags(write=False)
        counts.setflags(write=False)
        object.__setattr__(self, "posteriors", posteriors)
        object.__setattr__(self, "counts", counts)
        counts_f = counts.astype(np.float64)
        counts_f.setflags(write=False)
        object.__setattr__(self, "_counts_f", counts_f)

    @property
    def n(self) -> int:
        return self.posteriors.shape[0]

    @property
    def k(self) -> int:
        return self.posteriors.shape[1]

    @property
    def priors(self) -> np.ndarray:
        """Target priors N_k / N."""
        return self.counts / self.n
