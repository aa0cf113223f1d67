"""Map evaluation, orbits, and the map-level invariants."""

import math

import numpy as np
import pytest

from sucpa import (
    NumericError,
    SucpaProblem,
    ValidationError,
    increment_identity_residual,
    iterate_orbit,
    shift_orbit_equivariance_check,
    sucpa_step,
)

from helpers import (
    CANONICAL_COUNTS,
    CANONICAL_P,
    canonical_problem,
    random_problem,
    uniform_problem,
)
from oracles import oracle_orbit, oracle_step


# ---------------------------------------------------------------- step


def test_step_uniform_symmetric_is_fixed_at_zero():
    prob = uniform_problem(n=12, k=3)
    out = sucpa_step(prob, np.zeros(3))
    assert np.all(out == 0.0)


def test_step_matches_scalar_oracle():
    prob = canonical_problem()
    got = sucpa_step(prob, [0.0, 0.0])
    want = oracle_step(CANONICAL_P.tolist(), CANONICAL_COUNTS.tolist(), [0.0, 0.0])
    assert got == pytest.approx(want, abs=1e-14)
    # and the hand evaluation: denominators are 1, so f = (-log 1.1, -log 0.9)
    assert got == pytest.approx([-math.log(1.1), -math.log(0.9)], abs=1e-14)


def test_step_matches_scalar_oracle_at_generic_point():
    prob = canonical_problem()
    beta = [0.37, -1.2]
    got = sucpa_step(prob, beta)
    want = oracle_step(CANONICAL_P.tolist(), CANONICAL_COUNTS.tolist(), beta)
    assert got == pytest.approx(want, rel=1e-13)


def test_step_shift_equivariance_exact_example():
    rng = np.random.default_rng(5)
    prob = random_problem(rng, k=3, n=40)
    beta = np.array([0.2, -0.4, 1.0])
    lam = 2.5
    f1 = sucpa_step(prob, beta)
    f2 = sucpa_step(prob, beta + lam)
    assert np.abs(f2 - f1 - lam).max() <= 1e-12


def test_step_shift_equivariance_random_problems():
    # K in {2,3,5}, N in [K,200]: the map-level property at 1e-10.
    rng = np.random.default_rng(11)
    for k in (2, 3, 5):
        for _ in range(30):
            n = int(rng.integers(k, 201))
            prob = random_problem(rng, k=k, n=n)
            beta = rng.uniform(-8, 8, k)
            lam = float(rng.uniform(-20, 20))
            f1 = sucpa_step(prob, beta)
            f2 = sucpa_step(prob, beta + lam)
            assert np.abs(f2 - f1 - lam).max() <= 1e-10


def test_step_rejects_non_finite_input():
    prob = canonical_problem()
    with pytest.raises(ValidationError):
        sucpa_step(prob, [np.nan, 0.0])
    with pytest.raises(ValidationError):
        sucpa_step(prob, [np.inf, 0.0])


def test_step_safe_at_large_bias():
    prob = canonical_problem()
    for beta in ([300.0, -300.0], [-300.0, 300.0], [250.0, 290.0]):
        out = sucpa_step(prob, beta)
        assert np.isfinite(out).all()


def test_step_is_deterministic():
    prob = canonical_problem()
    a = sucpa_step(prob, [0.1, -0.2])
    b = sucpa_step(prob, [0.1, -0.2])
    assert a.tolist() == b.tolist()


# ---------------------------------------------------------------- orbits


def test_orbit_uniform_converges_at_t0():
    prob = uniform_problem(n=10, k=2)
    orbit = iterate_orbit(prob, np.zeros(2), tol=1e-9)
    assert orbit.converged
    assert orbit.steps_to_converge == 0
    assert np.all(orbit.limit == 0.0)


def test_orbit_canonical_fixed_point_residual():
    prob = canonical_problem()
    orbit = iterate_orbit(prob, [0.0, 0.0], tol=1e-10)
    assert orbit.converged
    res = np.abs(sucpa_step(prob, orbit.limit) - orbit.limit).max()
    assert res <= 1e-9


def test_orbit_matches_scalar_oracle():
    prob = canonical_problem()
    orbit = iterate_orbit(prob, [0.0, 0.0], tol=1e-12, max_steps=1000)
    pts, incs, conv = oracle_orbit(
        CANONICAL_P.tolist(), CANONICAL_COUNTS.tolist(), [0.0, 0.0], 1e-12, 1000
    )
    assert conv and orbit.converged
    assert orbit.points.shape[0] == len(pts)
    assert np.abs(orbit.points - np.array(pts)).max() <= 1e-12
    assert np.abs(orbit.increments - np.array(incs)).max() <= 1e-12


def test_orbit_bookkeeping_is_exact():
    rng = np.random.default_rng(3)
    prob = random_problem(rng, k=3, n=60)
    orbit = iterate_orbit(prob, rng.uniform(-3, 3, 3))
    diffs = orbit.points[1:] - orbit.points[:-1]
    assert np.all(diffs == orbit.increments)
    assert orbit.converged
    assert np.abs(orbit.increments[-1]).max() <= 1e-9
    assert orbit.steps_to_converge == orbit.n_steps - 1


def test_orbit_respects_max_steps():
    rng = np.random.default_rng(4)
    prob = random_problem(rng, k=2, n=50, sharpness=6.0)
    orbit = iterate_orbit(prob, [8.0, -8.0], tol=1e-15, max_steps=3)
    assert not orbit.converged
    assert orbit.limit is None
    assert orbit.steps_to_converge is None
    assert orbit.n_steps == 3


def test_orbit_sst2_shaped_synthetic_converges_quickly():
    # Counts 1729/2271 with synthetic scores; the bound here (50 steps) is
    # deliberately looser than what real score matrices achieve.
    from sucpa import synth_problem

    prob = synth_problem(seed=51, n=4000, k=2, sharpness=4.0, prior_shift=[1729, 2271])
    assert prob.counts.tolist() == [1729, 2271]
    orbit = iterate_orbit(prob, [0.0, 2.0], tol=1e-9)
    assert orbit.converged
    assert orbit.n_steps <= 50


def test_orbit_validates_arguments():
    prob = canonical_problem()
    with pytest.raises(ValidationError):
        iterate_orbit(prob, [0.0, 0.0], tol=0.0)
    with pytest.raises(ValidationError):
        iterate_orbit(prob, [0.0, 0.0], max_steps=0)
    with pytest.raises(ValidationError):
        iterate_orbit(prob, [0.0, np.inf])


def test_orbit_fixed_point_residual_scales_with_tol():
    rng = np.random.default_rng(13)
    for tol in (1e-6, 1e-9, 1e-12):
        for k in (2, 3):
            prob = random_problem(rng, k=k, n=70)
            orbit = iterate_orbit(prob, rng.uniform(-4, 4, k), tol=tol)
            assert orbit.converged
            res = np.abs(sucpa_step(prob, orbit.limit) - orbit.limit).max()
            assert res <= 10 * tol


def test_orbit_determinism_bit_identical():
    rng = np.random.default_rng(9)
    prob = random_problem(rng, k=3, n=80)
    o1 = iterate_orbit(prob, [1.0, -2.0, 0.5])
    o2 = iterate_orbit(prob, [1.0, -2.0, 0.5])
    assert o1.points.tolist() == o2.points.tolist()
    assert o1.increments.tolist() == o2.increments.tolist()


# ------------------------------------------------- increment identity


def test_increment_identity_on_converged_orbits():
    rng = np.random.default_rng(21)
    for k in (2, 3, 5):
        prob = random_problem(rng, k=k, n=100)
        orbit = iterate_orbit(prob, rng.uniform(-5, 5, k))
        res = increment_identity_residual(prob, orbit)
        assert res.shape[0] == orbit.n_steps
        assert res.max() <= 1e-8 * prob.n


def test_increment_identity_single_point_orbit_is_empty():
    from sucpa import Orbit

    prob = canonical_problem()
    single = Orbit(
        points=np.zeros((1, 2)),
        increments=np.zeros((0, 2)),
        converged=False,
        limit=None,
        steps_to_converge=None,
    )
    assert increment_identity_residual(prob, single).size == 0


def test_increment_identity_matches_oracle_first_step():
    prob = canonical_problem()
    orbit = iterate_orbit(prob, [0.0, 0.0], tol=1e-12)
    _, incs, _ = oracle_orbit(
        CANONICAL_P.tolist(), CANONICAL_COUNTS.tolist(), [0.0, 0.0], 1e-12, 1000
    )
    d = incs[0]
    want = abs(sum(c * math.exp(-x) for c, x in zip([1, 1], d)) - 2.0)
    got = increment_identity_residual(prob, orbit)[0]
    assert got == pytest.approx(want, abs=1e-12)


# ------------------------------------------------- shift equivariance


def test_shift_check_zero_lambda_is_exact():
    rng = np.random.default_rng(2)
    prob = random_problem(rng, k=2, n=30)
    assert shift_orbit_equivariance_check(prob, [0.3, -0.7], lam=0.0, steps=20) == 0.0


def test_shift_check_paired_initial_conditions():
    # The documented pairing: [0, 2] against [1.5, 3.5], i.e. lam = 1.5.
    from sucpa import synth_problem

    prob = synth_problem(seed=77, n=2000, k=2, sharpness=4.0, prior_shift=[1729, 2271])
    dev = shift_orbit_equivariance_check(prob, [0.0, 2.0], lam=1.5, steps=100)
    assert dev <= 1e-10


def test_shift_check_extreme_lambda_controlled():
    prob = canonical_problem()
    try:
        dev = shift_orbit_equivariance_check(prob, [0.0, 0.5], lam=-300.0, steps=5)
    except NumericError:
        return  # a controlled failure is acceptable; silent NaN is not
    assert np.isfinite(dev)
    assert dev <= 1e-8
