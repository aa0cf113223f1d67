"""Timing comparison of the compiled and numpy kernel backends.

Run from the repo root after installing the package:

    python benchmarks/bench_backends.py [--quick]

Times one map application, a full orbit, and one Jacobian evaluation for a
grid of problem sizes, and reports the per-call time of each backend plus
the compiled speedup. Orbits dominate real workloads: they chain thousands
of small steps, which is where per-call overhead matters.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from sucpa import _kernels_py

try:
    from sucpa import _kernels
except ImportError:
    _kernels = None


def make_case(rng, n, k):
    g = rng.gamma(2.0, size=(n, k))
    p = np.ascontiguousarray(g / g.sum(axis=1, keepdims=True))
    counts = np.full(k, n // k, dtype=np.float64)
    counts[0] += n - counts.sum()
    beta = rng.uniform(-3.0, 3.0, k)
    return p, counts, beta


def time_call(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(module, p, counts, beta, orbit_steps, repeats):
    step = time_call(lambda: module.step(p, counts, beta), repeats)
    orbit = time_call(
        lambda: module.orbit(p, counts, beta, 0.0, orbit_steps), max(1, repeats // 4)
    )
    jac = time_call(lambda: module.jacobian(p, beta), repeats)
    return step, orbit, jac


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true", help="fewer repeats, smaller grid")
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    grid = [(200, 2), (4000, 2), (1000, 5), (20000, 3)]
    orbit_steps = 200
    repeats = 20 if args.quick else 100
    if args.quick:
        grid = grid[:3]

    if _kernels is None:
        print("compiled kernels not built; showing the numpy backend only")

    header = f"{'n':>6} {'k':>2} {'kernel':>8}"
    for name in ("step", f"orbit[{orbit_steps}]", "jacobian"):
        header += f" {name + ' py':>14} {name + ' c':>14} {'speedup':>8}"
    print(header)
    for n, k in grid:
        p, counts, beta = make_case(rng, n, k)
        py = bench(_kernels_py, p, counts, beta, orbit_steps, repeats)
        row = f"{n:>6} {k:>2} {'':>8}"
        if _kernels is not None:
            cc = bench(_kernels, p, counts, beta, orbit_steps, repeats)
            for a, b in zip(py, cc):
                row += f" {a * 1e6:>12.1f}us {b * 1e6:>12.1f}us {a / b:>7.1f}x"
        else:
            for a in py:
                row += f" {a * 1e6:>12.1f}us {'-':>14} {'-':>8}"
        print(row)

    if _kernels is not None:
        # sanity: both backends must agree on the numbers they time
        p, counts, beta = make_case(rng, 500, 3)
        a = _kernels.step(p, counts, beta)
        b = _kernels_py.step(p, counts, beta)
        assert np.abs(a - b).max() <= 1e-12, "backends disagree"
        print("\nbackend agreement on a spot check: max |diff| "
              f"{np.abs(a - b).max():.2e}")


if __name__ == "__main__":
    main()
