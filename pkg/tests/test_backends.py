"""Agreement between the compiled kernels and the numpy fallback."""

import numpy as np
import pytest

from sucpa import _kernels_py
from sucpa._backend import backend_name

try:
    from sucpa import _kernels
except ImportError:
    _kernels = None

needs_compiled = pytest.mark.skipif(
    _kernels is None, reason="compiled kernels not built"
)

from helpers import random_problem


def _cases():
    rng = np.random.default_rng(100)
    out = []
    for k in (2, 3, 5):
        for n in (1, 7, 64, 400):
            if n < k:
                continue
            prob = random_problem(rng, k=k, n=n)
            beta = rng.uniform(-6, 6, k)
            out.append((prob, beta))
    return out


@needs_compiled
def test_step_agreement():
    for prob, beta in _cases():
        a = _kernels.step(prob.posteriors, prob._counts_f, beta)
        b = _kernels_py.step(prob.posteriors, prob._counts_f, beta)
        assert np.abs(a - b).max() <= 1e-12


@needs_compiled
def test_jacobian_agreement():
    for prob, beta in _cases():
        a = _kernels.jacobian(prob.posteriors, beta)
        b = _kernels_py.jacobian(prob.posteriors, beta)
        assert np.abs(a - b).max() <= 1e-12


@needs_compiled
def test_orbit_agreement():
    for prob, beta in _cases():
        pa, ia, ca,ba = _kernels.orbit(prob.posteriors, prob._counts_f, beta, 1e-9, 500)
        pb, ib, cb, bb = _kernels_py.orbit(prob.posteriors, prob._counts_f, beta, 1e-9, 500)
        assert ba == bb == -1
        # summation-order differences can shift the stopping step by one;
        # compare the shared prefix and the convergence outcome
        t = min(pa.shape[0], pb.shape[0])
        assert abs(pa.shape[0] - pb.shape[0]) <= 1
        assert np.abs(pa[:t] - pb[:t]).max() <= 1e-11
        assert np.abs(ia[: t - 1] - ib[: t - 1]).max() <= 1e-11
        assert (ca >= 0) == (cb >= 0)


@needs_compiled
def test_orbit_overflow_flagged_identically():
    # A near-one-hot matrix with a violent starting point overflows the
    # unstabilized... rather: both backends must flag the same bad step
    # or both succeed; neither may return silent non-finite values.
    rng = np.random.default_rng(101)
    prob = random_problem(rng, k=2, n=20)
    beta = np.array([700.0, -700.0])  # beyond the contract, may or may not overflow
    pa, ia, ca, ba = _kernels.orbit(prob.posteriors, prob._counts_f, beta, 1e-9, 50)
    pb, ib, cb, bb = _kernels_py.orbit(prob.posteriors, prob._counts_f, beta, 1e-9, 50)
    assert ba == bb
    assert np.isfinite(pa).all()
    assert np.isfinite(pb).all()


def test_active_backend_reports_name():
    assert backend_name() in ("compiled", "python")
