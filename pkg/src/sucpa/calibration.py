"""Applying converged biases to scores and the end-to-end workflow.

Calibration here is the pure bias form of the affine family: each class
column is scaled by exp(beta_k) and rows are renormalized, so adding any
constant to all the biases changes nothing downstream. Running the
fixed-point iteration to get those biases requires only the unlabeled
scores plus the target class counts; labels are optional and used solely
for cross-entropy reporting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import DEFAULT_MAX_STEPS, DEFAULT_TOL, Orbit, iterate_orbit
from .errors import ValidationError
from .problem import SucpaProblem, as_beta


@dataclass(frozen=True)
class CalibrationResult:
    """Outcome of one full calibration run.

    Cross-entropy fields are in nats and None when no labels were given.
    ``cross_entropy_trace`` holds the per-step values along the orbit as a
    diagnostic; the iteration solves a stationarity condition and is not a
    descent method, so no monotonicity is implied.
    """

    beta_star: np.ndarray
    calibrated: np.ndarray
    cross_entropy_before: float | None
    cross_entropy_after: float | None
    steps: int
    converged: bool
    orbit: Orbit
    cross_entropy_trace: np.ndarray | None


def calibrate(posteriors, beta) -> np.ndarray:
    """Scale class k by exp(beta_k) and renormalize every row.

    Invariant under beta -> beta + c for any constant c, which is why the
    fixed line's degeneracy is harmless to downstream consumers.
    """
    p = np.asarray(posteriors, dtype=np.float64)
    if p.ndim != 2:
        raise ValidationError(f"posteriors must be 2-D, got shape {p.shape}")
    b = as_beta(beta, p.shape[1])
    w = p * np.exp(b - b.max())
    return w / w.sum(axis=1, keepdims=True)


def cross_entropy(posteriors, labels) -> float:
    """Mean negative log probability of the labeled class, in nats.

    Labels are 1-based: label k refers to column k of the matrix (the
    ``p_k`` column of the file formats).
    """
    p = np.asarray(posteriors, dtype=np.float64)
    if p.ndim != 2:
        raise ValidationError(f"posteriors must be 2-D, got shape {p.shape}")
    n, k = p.shape
    lab = np.asarray(labels)
    if lab.shape != (n,):
        raise ValidationError(f"labels must be a length-{n} vector, got shape {lab.shape}")
    if not np.all(lab == np.round(lab.astype(np.float64))):
        raise ValidationError("labels must be integers")
    lab = lab.astype(np.int64)
    if (lab < 1).any() or (lab > k).any():
        bad = int(lab[(lab < 1) | (lab > k)][0])
        raise ValidationError(f"label {bad} out of range 1..{k}")
    picked = p[np.arange(n), lab - 1]
    return float(-np.log(picked).mean())


def run_sucpa(
    posteriors,
    counts,
    beta0=None,
    tol: float = DEFAULT_TOL,
    max_steps: int = DEFAULT_MAX_STEPS,
    labels=None,
) -> CalibrationResult:
    """Estimate biases from scores plus target counts, then calibrate.

    ``beta0`` defaults to the origin (no correction). If the orbit does not
    converge within ``max_steps`` the last iterate is still applied, with
    ``converged=False`` flagging the result.
    """
    problem = SucpaProblem(posteriors, counts)
    b0 = np.zeros(problem.k) if beta0 is None else as_beta(beta0, problem.k)
    orbit = iterate_orbit(problem, b0, tol=tol, max_steps=max_steps)
    beta_star = orbit.points[-1]
    calibrated = calibrate(problem.posteriors, beta_star)
    ce_before = ce_after = trace = None
    if labels is not None:
        ce_before = cross_entropy(problem.posteriors, labels)
        ce_after = cross_entropy(calibrated, labels)
        trace = np.array(
            [
                cross_entropy(calibrate(problem.posteriors, point), labels)
                for point in orbit.points
            ]
        )
    return CalibrationResult(
        beta_star=beta_star,
        calibrated=calibrated,
        cross_entropy_before=ce_before,
        cross_entropy_after=ce_after,
        steps=orbit.n_steps,
        converged=orbit.converged,
        orbit=orbit,
        cross_entropy_trace=trace,
    )
