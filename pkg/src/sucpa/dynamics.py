"""The bias-update map, orbit iteration, and map-level conservation checks.

The map sends a bias vector beta to

    f_k(beta) = -log( (1/N_k) * sum_i P_ik / sum_j P_ij exp(beta_j) )

for each class k. Iterating it from any starting point adapts the biases
until the calibrated scores aggregate to the target class counts. Inner
exponentials are stabilized by subtracting max(beta), which keeps the
computation safe for bias magnitudes up to a few hundred.

Two structural facts about the map are exposed as checks here: adding the
same constant to every coordinate shifts the output by exactly that
constant (so fixed points come in whole lines), and every step satisfies
the balance identity sum_k N_k exp(-delta_k) = N.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import NumericError, ValidationError
from .problem import SucpaProblem, as_beta

DEFAULT_TOL = 1e-9
DEFAULT_MAX_STEPS = 10_000


@dataclass(frozen=True)
class Orbit:
    """A finite forward orbit with its per-step increments.

    ``increments[t]`` equals ``points[t+1] - points[t]`` by construction
    (stored, not recomputed). ``steps_to_converge`` is the index of the
    first increment whose max-norm fell at or below the tolerance, or None
    if the step budget ran out first.
    """

    points: np.ndarray
    increments: np.ndarray
    converged: bool
    limit: np.ndarray | None
    steps_to_converge: int | None

    @property
    def n_steps(self) -> int:
        """Number of map applications performed."""
        return self.increments.shape[0]

    @property
    def k(self) -> int:
        return self.points.shape[1]


def _checked_step(problem: SucpaProblem, beta: np.ndarray) -> np.ndarray:
    out = kernels.step(problem.posteriors, problem._counts_f, beta)
    if not np.isfinite(out).all():
        raise NumericError(
            "map produced a non-finite value despite stabilization; "
            "the score matrix is pathological for this bias range"
        )
    return out


def sucpa_step(problem: SucpaProblem, beta) -> np.ndarray:
    """Apply the update map once.

    Raises ValidationError on non-finite input and NumericError if the
    output overflows despite stabilization.
    """
    return _checked_step(problem, as_beta(beta, problem.k))


def iterate_orbit(
    problem: SucpaProblem,
    beta0,
    tol: float = DEFAULT_TOL,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> Orbit:
    """Iterate the map from ``beta0`` until increments shrink below ``tol``.

    Stops after ``max_steps`` applications if the tolerance is never met;
    the returned orbit then has ``converged=False`` and ``limit=None``.
    """
    b0 = as_beta(beta0, problem.k)
    if tol <= 0:
        raise ValidationError(f"tol must be positive, got {tol!r}")
    if max_steps < 1:
        raise ValidationError(f"max_steps must be >= 1, got {max_steps!r}")
    points, incs, conv_t, bad = kernels.orbit(
        problem.posteriors, problem._counts_f, b0, float(tol), int(max_steps)
    )
    if bad >= 0:
        raise NumericError(
            f"map produced a non-finite value at step {bad}; "
            "the score matrix is pathological for this bias range"
        )
    converged = conv_t >= 0
    points.setflags(write=False)
    incs.setflags(write=False)
    return Orbit(
        points=points,
        increments=incs,
        converged=converged,
        limit=points[-1] if converged else None,
        steps_to_converge=int(conv_t) if converged else None,
    )


def increment_identity_residual(problem: SucpaProblem, orbit: Orbit) -> np.ndarray:
    """Balance-identity residual |sum_k N_k exp(-delta_k(t)) - N| per step.

    Identically zero in exact arithmetic; values above ~1e-8*N indicate a
    broken map implementation or corrupted orbit data. An orbit with a
    single point has no increments and yields an empty array.
    """
    if orbit.increments.shape[0] == 0:
        return np.empty(0)
    if orbit.increments.shape[1] != problem.k:
        raise ValidationError("orbit and problem disagree on the number of classes")
    sums = np.exp(-orbit.increments) @ problem._counts_f
    return np.abs(sums - problem.n)


def shift_orbit_equivariance_check(
    problem: SucpaProblem, beta0, lam: float, steps: int
) -> float:
    """Max deviation between the orbit of beta0+lam*1 and the shifted orbit of beta0.

    Runs both orbits for exactly ``steps`` applications and returns
    max over t of ||orbit2[t] - orbit1[t] - lam*1||_inf, which is zero in
    exact arithmetic for every lam.
    """
    if steps < 1:
        raise ValidationError(f"steps must be >= 1, got {steps!r}")
    lam = float(lam)
    if not np.isfinite(lam):
        raise ValidationError(f"lam must be finite, got {lam!r}")
    b1 = as_beta(beta0, problem.k)
    b2 = b1 + lam
    deviation = 0.0
    for _ in range(steps):
        b1 = _checked_step(problem, b1)
        b2 = _checked_step(problem, b2)
        deviation = max(deviation, float(np.abs(b2 - b1 - lam).max()))
    return deviation
