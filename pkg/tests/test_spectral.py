"""Jacobian computation and spectral structure."""

import math

import numpy as np
import pytest

from sucpa import (
    NumericError,
    SucpaProblem,
    ValidationError,
    alpha_prime,
    find_intercept,
    finite_difference_jacobian,
    jacobian,
    mu_at_fixed_line,
    spectral_report,
)

from helpers import canonical_problem, random_problem, uniform_problem


# ---------------------------------------------------------------- jacobian


def test_jacobian_uniform_is_flat():
    prob = uniform_problem(n=12, k=3)
    j = jacobian(prob, np.zeros(3)).entries
    assert np.abs(j - 1.0 / 3.0).max() <= 1e-14


def test_jacobian_rows_sum_to_one():
    rng = np.random.default_rng(60)
    for k in (2, 3, 5):
        for _ in range(30):
            prob = random_problem(rng, k=k, n=int(rng.integers(k, 120)))
            jac = jacobian(prob, rng.uniform(-4, 4, k))
            assert (jac.entries > 0).all()
            assert np.abs(jac.entries @ np.ones(k) - 1.0).max() <= 1e-10


def test_jacobian_closed_form_at_fixed_line():
    # At [0, b] the 2x2 Jacobian collapses to an expression in the
    # auxiliary-function derivatives; cross-check entry by entry.
    rng = np.random.default_rng(61)
    for _ in range(15):
        prob = random_problem(rng, k=2, n=int(rng.integers(4, 100)))
        b = find_intercept(prob).intercept_b
        d1, d2 = alpha_prime(prob, b)
        ebd2 = d2 * math.exp(b)
        want = np.array([[1.0 + d1, -d1], [1.0 + ebd2, -ebd2]])
        got = jacobian(prob, [0.0, b]).entries
        assert np.abs(got - want).max() <= 1e-10


def test_jacobian_anti_diagonal_count_identity():
    rng = np.random.default_rng(62)
    for _ in range(10):
        prob = random_problem(rng, k=2, n=50)
        b = find_intercept(prob).intercept_b
        j = jacobian(prob, [0.0, b]).entries
        n1, n2 = prob._counts_f
        assert n1 * j[0, 1] == pytest.approx(n2 * j[1, 0], rel=1e-10)


def test_jacobian_validates_input():
    prob = canonical_problem()
    with pytest.raises(ValidationError):
        jacobian(prob, [0.0, np.nan])
    with pytest.raises(ValidationError):
        jacobian(prob, [0.0, 0.0, 0.0])


def test_jacobian_underflow_is_a_numeric_error():
    # A bias gap beyond the exp range drives one column of the calibrated
    # weights to exact zero; strict positivity is then unrecoverable and
    # must surface as a numeric error, not silent zeros.
    prob = canonical_problem()
    with pytest.raises(NumericError):
        jacobian(prob, [0.0, -800.0])


# ------------------------------------------------------ finite differences


def test_fd_jacobian_is_the_oracle_for_the_analytic_one():
    rng = np.random.default_rng(63)
    for k in (2, 3, 5):
        for _ in range(10):
            prob = random_problem(rng, k=k, n=int(rng.integers(k, 80)))
            beta = rng.uniform(-2, 2, k)
            a = jacobian(prob, beta).entries
            fd = finite_difference_jacobian(prob, beta, h=1e-6).entries
            assert np.abs(a - fd).max() <= 1e-5 * np.abs(fd).max()
            assert (np.abs(a - fd) <= 1e-5 * (np.abs(fd) + 1e-12)).all()


def test_fd_jacobian_uniform():
    prob = uniform_problem(n=9, k=3)
    fd = finite_difference_jacobian(prob, np.zeros(3)).entries
    assert np.abs(fd - 1.0 / 3.0).max() <= 1e-6


def test_fd_jacobian_rows_near_stochastic():
    rng = np.random.default_rng(64)
    prob = random_problem(rng, k=3, n=40)
    fd = finite_difference_jacobian(prob, rng.uniform(-2, 2, 3)).entries
    assert np.abs(fd.sum(axis=1) - 1.0).max() <= 1e-5


def test_fd_jacobian_rejects_bad_h():
    with pytest.raises(ValidationError):
        finite_difference_jacobian(canonical_problem(), [0.0, 0.0], h=0.0)


# --------------------------------------------------------- spectral report


def _matched_diff(a, b):
    pool = list(a)
    worst = 0.0
    for z in b:
        i = int(np.argmin([abs(z - w) for w in pool]))
        worst = max(worst, abs(complex(z) - complex(pool.pop(i))))
    return worst


def test_report_structure_random_points():
    rng = np.random.default_rng(65)
    for k in (2, 3, 5):
        for _ in range(15):
            prob = random_problem(rng, k=k, n=int(rng.integers(k, 100)))
            jac = jacobian(prob, rng.uniform(-3, 3, k))
            rep = spectral_report(jac, prob)
            assert rep.classification == "non-hyperbolic-with-center-line"
            assert abs(abs(rep.eigenvalues[0]) - 1.0) <= 1e-8
            assert np.abs(rep.eigenvalues[1:]).max() < 1.0
            assert rep.subdominant_modulus < 1.0
            assert rep.unit_eigenvector_check <= 1e-10
            ones = np.ones(k) / math.sqrt(k)
            assert abs(np.vdot(rep.dominant_eigenvector, ones)) >= 1.0 - 1e-8
            assert len(rep.stable_subspace_basis) == k - 1


def test_report_eigenvalues_match_lapack():
    rng = np.random.default_rng(66)
    for k in (2, 3, 5):
        for _ in range(15):
            prob = random_problem(rng, k=k, n=int(rng.integers(k, 100)))
            jac = jacobian(prob, rng.uniform(-3, 3, k))
            rep = spectral_report(jac, prob)
            lap = np.linalg.eigvals(jac.entries)
            assert _matched_diff(rep.eigenvalues, lap) <= 1e-9


def test_report_two_class_matches_mu():
    rng = np.random.default_rng(67)
    for _ in range(10):
        prob = random_problem(rng, k=2, n=60)
        line = find_intercept(prob)
        rep = spectral_report(jacobian(prob, line.representative_point), prob)
        assert rep.eigenvalues[0] == pytest.approx(1.0, abs=1e-8)
        mu = mu_at_fixed_line(prob, line.intercept_b)
        assert rep.subdominant_modulus == pytest.approx(mu, abs=1e-8)
        vec = rep.stable_subspace_basis[0]
        cos = abs(np.vdot(vec, line.stable_eigenvector.astype(np.complex128)))
        assert cos >= 1.0 - 1e-8


def test_report_fixed_line_jacobian_independent_of_shift():
    rng = np.random.default_rng(68)
    prob = random_problem(rng, k=2, n=50)
    b = find_intercept(prob).intercept_b
    ref = jacobian(prob, [0.0, b]).entries
    for lam in (-10.0, 0.0, 10.0):
        shifted = jacobian(prob, [lam, lam + b]).entries
        assert np.abs(shifted - ref).max() <= 1e-12


def test_report_identical_rows_rank_one():
    prob = SucpaProblem(np.tile([0.6, 0.3, 0.1], (12, 1)), [4, 4, 4])
    rep = spectral_report(jacobian(prob, np.zeros(3)), prob)
    assert rep.eigenvalues[0] == pytest.approx(1.0, abs=1e-10)
    assert np.abs(rep.eigenvalues[1:]).max() <= 1e-10


def test_report_rejects_k_above_cap():
    rng = np.random.default_rng(69)
    k = 17
    g = rng.gamma(1.0, size=(k * 2, k))
    rows = g / g.sum(axis=1, keepdims=True)
    prob = SucpaProblem(rows, np.full(k, 2))
    jac = jacobian(prob, np.zeros(k))
    with pytest.raises(ValidationError):
        spectral_report(jac, prob)


def test_report_rejects_forged_jacobian():
    # Two eigenvalues on the unit circle is impossible for a genuine
    # Jacobian; a forged matrix must be refused.
    from sucpa.spectral import JacobianMatrix

    prob = uniform_problem(n=8, k=2)
    fake = JacobianMatrix(entries=np.eye(2), evaluation_point=np.zeros(2))
    with pytest.raises(NumericError):
        spectral_report(fake, prob)
