"""Numpy implementations of the hot kernels.

Signatures mirror the compiled module ``sucpa._kernels``; which one a
session uses is decided in ``sucpa._backend``. All three functions assume
validated inputs (C-contiguous float64, shapes consistent) and stabilize
exponentials by subtracting ``max(beta)``.
"""

from __future__ import annotations

import numpy as np


def step(p: np.ndarray, counts: np.ndarray, beta: np.ndarray) -> np.ndarray:
    m = float(beta.max())
    e = np.exp(beta - m)
    den = p @ e
    s = (p / den[:, None]).sum(axis=0)
    return m + np.log(counts) - np.log(s)


def orbit(p, counts, beta0, tol, max_steps):
    """Iterate the map; returns (points, increments, converged_at, bad_step).

    ``converged_at`` is the index of the first increment with max-norm <= tol
    (-1 if the step budget ran out), ``bad_step`` the index of the first
    non-finite map output (-1 if none; points/increments are truncated
    before it).
    """
    k = beta0.shape[0]
    points = np.empty((max_steps + 1, k))
    incs = np.empty((max_steps, k))
    points[0] = beta0
    cur = beta0
    applied = 0
    conv_t = -1
    bad = -1
    for t in range(max_steps):
        nxt = step(p, counts, cur)
        if not np.isfinite(nxt).all():
            bad = t
            break
        d = nxt - cur
        points[t + 1] = nxt
        incs[t] = d
        applied = t + 1
        cur = nxt
        if np.abs(d).max() <= tol:
            conv_t = t
            break
    return points[: applied + 1].copy(), incs[:applied].copy(), conv_t, bad


def jacobian(p: np.ndarray, beta: np.ndarray) -> np.ndarray:
    m = float(beta.max())
    e = np.exp(beta - m)
    den = p @ e
    u = p / den[:, None]
    w = u * e[None, :]
    num = u.T @ w
    return num / u.sum(axis=0)[:, None]
