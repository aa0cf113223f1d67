"""Shared problem generators for the test suite (all seeded, all deterministic)."""

from __future__ import annotations

import numpy as np

from sucpa import SucpaProblem

CANONICAL_P = np.array([[0.8, 0.2], [0.3, 0.7]])
CANONICAL_COUNTS = np.array([1, 1])


def canonical_problem() -> SucpaProblem:
    """The hand-checkable 2x2 problem used for scalar-oracle tests."""
    return SucpaProblem(CANONICAL_P, CANONICAL_COUNTS)


def random_counts(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    """Positive integer counts summing to n (needs n >= k)."""
    return 1 + rng.multinomial(n - k, np.full(k, 1.0 / k))


def random_problem(
    rng: np.random.Generator,
    k: int,
    n: int,
    concentration: float = 1.0,
    sharpness: float = 0.0,
) -> SucpaProblem:
    """Dirichlet-row problem; sharpness > 0 boosts one sampled class per row."""
    conc = np.full((n, k), concentration)
    if sharpness > 0.0:
        conc[np.arange(n), rng.integers(0, k, n)] += sharpness
    draws = rng.gamma(shape=conc)
    rows = draws / draws.sum(axis=1, keepdims=True)
    rows = np.maximum(rows, 1e-12)
    rows = rows / rows.sum(axis=1, keepdims=True)
    return SucpaProblem(rows, random_counts(rng, n, k))


def uniform_problem(n: int = 12, k: int = 3) -> SucpaProblem:
    """Fully symmetric case: all rows 1/k, equal counts."""
    assert n % k == 0
    return SucpaProblem(np.full((n, k), 1.0 / k), np.full(k, n // k))


def symmetric_problem(rng: np.random.Generator, half: int = 25) -> SucpaProblem:
    """Two-class rows closed under label swap with equal counts, so the
    fixed-line intercept is exactly zero."""
    p = rng.beta(2.0, 2.0, half)
    rows = np.concatenate([np.column_stack([p, 1 - p]), np.column_stack([1 - p, p])])
    return SucpaProblem(rows, np.array([half, half]))


def slow_two_class(
    rng: np.random.Generator, n: int = 300, strength: float = 9.0
) -> SucpaProblem:
    """Sharp two-class scores: the contraction factor approaches 1, so
    orbits take many resolvable steps (the slow-convergence regime)."""
    cls = rng.integers(0, 2, n)
    q = rng.beta(strength, 1.0, n)
    q = np.clip(q, 1e-9, 1 - 1e-9)
    p1 = np.where(cls == 0, q, 1 - q)
    rows = np.column_stack([p1, 1 - p1])
    return SucpaProblem(rows, random_counts(rng, n, 2))


def prior_shift_problem(
    rng: np.random.Generator,
    n: int,
    score_priors,
    target_priors,
    sharpness: float = 4.0,
):
    """Scores generated under one prior, counts taken from another.

    Returns (problem, labels) with 1-based labels drawn from score_priors;
    the injected mismatch is what calibration is supposed to undo.
    """
    q = np.asarray(score_priors, dtype=np.float64)
    p = np.asarray(target_priors, dtype=np.float64)
    k = q.shape[0]
    cls = rng.choice(k, size=n, p=q / q.sum())
    conc = np.ones((n, k))
    conc[np.arange(n), cls] += sharpness
    draws = rng.gamma(shape=conc)
    rows = draws / draws.sum(axis=1, keepdims=True)
    counts = np.maximum(1, np.round(p / p.sum() * n).astype(np.int64))
    while counts.sum() > n:
        counts[np.argmax(counts)] -= 1
    while counts.sum() < n:
        counts[np.argmin(counts)] += 1
    return SucpaProblem(rows, counts), cls + 1
