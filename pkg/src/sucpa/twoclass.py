"""Two-class fixed-line analysis.

For K = 2 the fixed points of the update map form a single straight line
of slope 1 in the (beta_1, beta_2) plane, so the whole structure is
captured by one number: the intercept b. This module computes it, along
with the local contraction data at the line.

Everything is driven by two auxiliary functions of the intercept x,

    alpha_1(x) = (1/N_1) * sum_i P_i1 / (P_i1 + P_i2 exp(x))
    alpha_2(x) = (1/N_2) * sum_i P_i2 / (P_i1 + P_i2 exp(x))

which are strictly decreasing, satisfy the balance identity
N_1 alpha_1(x) + N_2 exp(x) alpha_2(x) = N for every x, and bracket 1:
alpha_1 runs from N/N_1 > 1 down to 0. The intercept is the unique root
of alpha_1(b) = 1 and is found by bracket expansion plus bisection, which
the strict monotonicity makes unconditionally convergent.

The one-dimensional map phi(x) = log(alpha_1(x)/alpha_2(x)) describes how
a slope-1 line's intercept moves under one step of the full map; its
iterates approach b monotonically from either side, which is what makes
the two-class iteration globally convergent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoUsableStepError, NumericError, ValidationError
from .problem import SucpaProblem

DEFAULT_INTERCEPT_TOL = 1e-12
RESOLVABLE_INCREMENT = 100 * np.finfo(np.float64).eps
_MAX_BRACKET_DOUBLINGS = 200


@dataclass(frozen=True)
class FixedLine:
    """The line of fixed points and the contraction data shared along it."""

    intercept_b: float
    stable_eigenvalue_mu: float
    stable_eigenvector: np.ndarray
    representative_point: np.ndarray


def _require_two_class(problem: SucpaProblem) -> None:
    if problem.k != 2:
        raise ValidationError(f"two-class analysis needs K=2, got K={problem.k}")


def _require_finite_x(x: float) -> float:
    x = float(x)
    if not np.isfinite(x):
        raise ValidationError(f"x must be finite, got {x!r}")
    return x


def _weights(problem: SucpaProblem, x: float):
    """Per-sample shares (w1_i, w2_i) of class mass after an intercept shift x.

    w1_i = P_i1 / (P_i1 + P_i2 e^x) and w2_i = 1 - w1_i, evaluated without
    overflow on either side of x = 0.
    """
    p1 = problem.posteriors[:, 0]
    p2 = problem.posteriors[:, 1]
    if x >= 0.0:
        emx = np.exp(-x)
        den = p1 * emx + p2
        return p1 * emx / den, p2 / den
    ex = np.exp(x)
    den = p1 + p2 * ex
    return p1 / den, p2 * ex / den


def alpha(problem: SucpaProblem, x: float) -> tuple[float, float]:
    """The pair (alpha_1(x), alpha_2(x)). Both are strictly positive."""
    _require_two_class(problem)
    x = _require_finite_x(x)
    p1 = problem.posteriors[:, 0]
    p2 = problem.posteriors[:, 1]
    n1, n2 = problem._counts_f
    if x >= 0.0:
        emx = np.exp(-x)
        den = p1 * emx + p2
        a1 = float((p1 * emx / den).sum() / n1)
        a2 = float((p2 * emx / den).sum() / n2)
    else:
        den = p1 + p2 * np.exp(x)
        a1 = float((p1 / den).sum() / n1)
        a2 = float((p2 / den).sum() / n2)
    return a1, a2


def alpha_prime(problem: SucpaProblem, x: float) -> tuple[float, float]:
    """Derivatives (alpha_1'(x), alpha_2'(x)); both strictly negative."""
    _require_two_class(problem)
    x = _require_finite_x(x)
    p1 = problem.posteriors[:, 0]
    p2 = problem.posteriors[:, 1]
    n1, n2 = problem._counts_f
    if x >= 0.0:
        emx = np.exp(-x)
        den2 = (p1 * emx + p2) ** 2
        d1 = float(-(p1 * p2 * emx / den2).sum() / n1)
        d2 = float(-(p2 * p2 * emx / den2).sum() / n2)
    else:
        ex = np.exp(x)
        den2 = (p1 + p2 * ex) ** 2
        d1 = float(-(p1 * p2 * ex / den2).sum() / n1)
        d2 = float(-(p2 * p2 * ex / den2).sum() / n2)
    return d1, d2


def phi(problem: SucpaProblem, x: float) -> float:
    """Intercept update map phi(x) = log(alpha_1(x) / alpha_2(x))."""
    a1, a2 = alpha(problem, x)
    return float(np.log(a1) - np.log(a2))


def _g(problem: SucpaProblem, x: float) -> float:
    """Ratio alpha_2(x)/alpha_1(x) = exp(-phi(x)); non-increasing in x."""
    a1, a2 = alpha(problem, x)
    return a2 / a1


def _h(problem: SucpaProblem, x: float) -> float:
    """Cross term alpha_2'(x) alpha_1(x) - alpha_1'(x) alpha_2(x); always <= 0."""
    a1, a2 = alpha(problem, x)
    d1, d2 = alpha_prime(problem, x)
    return d2 * a1 - d1 * a2


def mu_at_fixed_line(problem: SucpaProblem, b: float) -> float:
    """Subdominant eigenvalue mu = alpha_1'(b) - e^b alpha_2'(b) at the line.

    Evaluated through the per-sample shares, which keeps e^b alpha_2'(b)
    stable for any b. The result lies in [0, 1) for a genuine intercept;
    values outside that range raise NumericError.
    """
    _require_two_class(problem)
    b = _require_finite_x(b)
    w1, w2 = _weights(problem, b)
    n1, n2 = problem._counts_f
    mu = float(-(w1 * w2).sum() / n1 + (w2 * w2).sum() / n2)
    if -1e-12 < mu < 0.0:
        mu = 0.0
    if not 0.0 <= mu < 1.0:
        raise NumericError(
            f"subdominant eigenvalue {mu!r} outside [0, 1); "
            "b is not a fixed-line intercept for this problem"
        )
    return mu


def stable_eigenvector(problem: SucpaProblem) -> np.ndarray:
    """Unit vector along [N_2, -N_1], the contraction direction at the line."""
    _require_two_class(problem)
    v = np.array([problem._counts_f[1], -problem._counts_f[0]])
    return v / np.linalg.norm(v)


def find_intercept(problem: SucpaProblem, tol: float = DEFAULT_INTERCEPT_TOL) -> FixedLine:
    """Locate the fixed-line intercept b with |alpha_1(b) - 1| <= tol.

    Expands the bracket [-1, 1] by doubling until alpha_1 straddles 1
    (guaranteed to happen because alpha_1 decreases from N/N_1 > 1 to 0),
    then bisects. Expansion failing after 200 doublings signals corrupted
    data and raises NumericError.
    """
    _require_two_class(problem)
    if tol <= 0:
        raise ValidationError(f"tol must be positive, got {tol!r}")

    def a1(x: float) -> float:
        return alpha(problem, x)[0]

    lo, hi = -1.0, 1.0
    for _ in range(_MAX_BRACKET_DOUBLINGS):
        if a1(lo) > 1.0:
            break
        lo *= 2.0
    else:
        raise NumericError("bracket expansion failed on the low side after 200 doublings")
    for _ in range(_MAX_BRACKET_DOUBLINGS):
        if a1(hi) < 1.0:
            break
        hi *= 2.0
    else:
        raise NumericError("bracket expansion failed on the high side after 200 doublings")

    # Bisection: first shrink the interval to tol, then keep going until the
    # residual |alpha_1(b) - 1| meets tol too (or the interval hits float
    # resolution, whichever comes first).
    mid = 0.5 * (lo + hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if a1(mid) > 1.0:
            lo = mid
        else:
            hi = mid
    while abs(a1(mid) - 1.0) > tol and hi - lo > np.spacing(max(1.0, abs(mid))):
        if a1(mid) > 1.0:
            lo = mid
        else:
            hi = mid
        mid = 0.5 * (lo + hi)

    b = float(mid)
    return FixedLine(
        intercept_b=b,
        stable_eigenvalue_mu=mu_at_fixed_line(problem, b),
        stable_eigenvector=stable_eigenvector(problem),
        representative_point=np.array([0.0, b]),
    )


def slope_limit_check(problem: SucpaProblem, orbit) -> float:
    """Increment slope delta_2/delta_1 at the last resolvable step.

    A step is resolvable when |delta_1| exceeds 100 machine epsilons. As an
    orbit converges this slope tends to -N_1/N_2, the direction along which
    trajectories land on the fixed line. Raises NoUsableStepError when the
    orbit converged so fast that no step is resolvable (e.g. it started on
    the line).
    """
    _require_two_class(problem)
    if not orbit.converged:
        raise ValidationError("slope limit is only meaningful for converged orbits")
    d = orbit.increments
    usable = np.flatnonzero(np.abs(d[:, 0]) > RESOLVABLE_INCREMENT)
    if usable.size == 0:
        raise NoUsableStepError(
            "no resolvable increments; the orbit started on or numerically at the fixed line"
        )
    t = int(usable[-1])
    return float(d[t, 1] / d[t, 0])
