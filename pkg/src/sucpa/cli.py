"""Command-line interface.

Subcommands: ``fit`` (estimate biases and calibrate a score file),
``fixed-point`` (the fixed-line intercept for K=2, a representative fixed
point otherwise), ``jacobian`` (Jacobian plus spectral report at a point),
``orbit`` (export orbits for a list of initial conditions), ``synth``
(write a synthetic problem) and ``check`` (run the invariant battery).

Exit codes: 0 success, 1 validation or usage problem, 2 numeric failure.
Data outputs are deterministic (17 significant digits, no timestamps);
warnings and progress go to the stderr log stream.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from ._backend import backend_name
from .calibration import run_sucpa
from .checks import run_checks
from .dynamics import DEFAULT_MAX_STEPS, DEFAULT_TOL, iterate_orbit
from .errors import NumericError, SucpaError, ValidationError
from .io import (
    _counts_from_shift,
    export_orbit,
    load_problem,
    save_problem,
    sidecar_path,
    synth_problem,
)
from .spectral import jacobian, spectral_report
from .twoclass import DEFAULT_INTERCEPT_TOL, find_intercept

log = logging.getLogger("sucpa")


def _fmt(x: float) -> str:
    return "%.17g" % x


def _fmt_vec(v) -> str:
    return " ".join(_fmt(float(x)) for x in v)


def _fmt_complex(z: complex) -> str:
    if z.imag == 0.0:
        return _fmt(z.real)
    sign = "+" if z.imag >= 0 else "-"
    return f"{_fmt(z.real)}{sign}{_fmt(abs(z.imag))}j"


def _parse_vector(text: str, flag: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")], dtype=np.float64)
    except ValueError:
        raise ValidationError(f"{flag} expects comma-separated numbers, got {text!r}") from None


def _parse_counts(text: str) -> np.ndarray:
    vec = _parse_vector(text, "--counts")
    if not np.all(vec == np.round(vec)):
        raise ValidationError(f"--counts expects integers, got {text!r}")
    return vec.astype(np.int64)


def _load(args):
    counts = _parse_counts(args.counts) if args.counts else None
    return load_problem(
        args.input, format=args.format, zero_policy=args.zero_policy, counts=counts
    )


def _add_input_args(sub) -> None:
    sub.add_argument("--input", required=True, help="problem file (CSV or JSON)")
    sub.add_argument("--format", choices=("csv", "json"), default=None,
                     help="override format detection by extension")
    sub.add_argument("--counts", default=None,
                     help="target class counts, e.g. 1729,2271 (else sidecar)")
    sub.add_argument("--zero-policy", choices=("reject", "clamp"), default="reject",
                     help="what to do with zero score entries (default: reject)")


def _add_iteration_args(sub) -> None:
    sub.add_argument("--tol", type=float, default=None,
                     help=f"convergence tolerance (default {DEFAULT_TOL:g})")
    sub.add_argument("--max-steps", type=int, default=DEFAULT_MAX_STEPS,
                     help=f"iteration budget (default {DEFAULT_MAX_STEPS})")


def _cmd_fit(args) -> int:
    loaded = _load(args)
    problem = loaded.problem
    tol = args.tol if args.tol is not None else DEFAULT_TOL
    beta0 = _parse_vector(args.ic, "--ic") if args.ic else None
    result = run_sucpa(
        problem.posteriors, problem.counts,
        beta0=beta0, tol=tol, max_steps=args.max_steps, labels=loaded.labels,
    )
    print(f"backend: {backend_name()}")
    print(f"n: {problem.n}")
    print(f"k: {problem.k}")
    print(f"converged: {'true' if result.converged else 'false'}")
    print(f"steps: {result.steps}")
    print(f"beta_star: {_fmt_vec(result.beta_star)}")
    if result.cross_entropy_before is not None:
        print(f"cross_entropy_before: {_fmt(result.cross_entropy_before)}")
        print(f"cross_entropy_after: {_fmt(result.cross_entropy_after)}")
    if args.prior_sweep is not None:
        _print_prior_sweep(problem, args.prior_sweep, tol, args.max_steps, loaded.labels)
    if args.output:
        np.savetxt(args.output, result.calibrated, delimiter=",", fmt="%.17g",
                   header=",".join(f"p_{j + 1}" for j in range(problem.k)), comments="")
        log.info("wrote calibrated scores to %s", args.output)
    return 0 if result.converged else 2


def _print_prior_sweep(problem, eps, tol, max_steps, labels) -> None:
    # Diagnostic only: how the converged biases move when the assumed
    # counts for one class are off by +-eps (mass rebalanced pro rata).
    if not 0 < eps < 1:
        raise ValidationError(f"--prior-sweep expects a fraction in (0, 1), got {eps!r}")
    print(f"prior_sweep: {_fmt(eps)}")
    for cls in range(problem.k):
        for delta in (-eps, eps):
            weights = problem.counts.astype(np.float64).copy()
            weights[cls] *= 1.0 + delta
            counts = _counts_from_shift(weights, problem.n, problem.k)
            result = run_sucpa(problem.posteriors, counts,
                               tol=tol, max_steps=max_steps, labels=labels)
            line = (f"sweep class={cls + 1} delta={'+' if delta > 0 else ''}{delta:g} "
                    f"beta_star: {_fmt_vec(result.beta_star)}")
            if result.cross_entropy_after is not None:
                line += f" cross_entropy_after: {_fmt(result.cross_entropy_after)}"
            print(line)


def _cmd_fixed_point(args) -> int:
    loaded = _load(args)
    problem = loaded.problem
    if problem.k == 2:
        tol = args.tol if args.tol is not None else DEFAULT_INTERCEPT_TOL
        line = find_intercept(problem, tol=tol)
        print(f"b: {_fmt(line.intercept_b)}")
        print(f"mu: {_fmt(line.stable_eigenvalue_mu)}")
        print(f"v: {_fmt_vec(line.stable_eigenvector)}")
        return 0
    tol = args.tol if args.tol is not None else DEFAULT_TOL
    beta0 = _parse_vector(args.ic, "--ic") if args.ic else np.zeros(problem.k)
    orbit = iterate_orbit(problem, beta0, tol=tol, max_steps=args.max_steps)
    if not orbit.converged:
        log.error("orbit did not converge within %d steps", args.max_steps)
        return 2
    rep = orbit.limit - orbit.limit[0]
    print("status: conjectured")
    print(f"beta_star_representative: {_fmt_vec(rep)}")
    print(f"direction: {_fmt_vec(np.ones(problem.k))}")
    print(f"steps: {orbit.n_steps}")
    return 0


def _cmd_jacobian(args) -> int:
    loaded = _load(args)
    problem = loaded.problem
    point = _parse_vector(args.point, "--point") if args.point else np.zeros(problem.k)
    jac = jacobian(problem, point)
    report = spectral_report(jac, problem)
    print(f"point: {_fmt_vec(jac.evaluation_point)}")
    print("jacobian:")
    for row in jac.entries:
        print(_fmt_vec(row))
    print(f"eigenvalues: {' '.join(_fmt_complex(complex(z)) for z in report.eigenvalues)}")
    print(f"subdominant_modulus: {_fmt(report.subdominant_modulus)}")
    print(f"unit_eigenvector_check: {_fmt(report.unit_eigenvector_check)}")
    print(f"classification: {report.classification}")
    return 0


def _cmd_orbit(args) -> int:
    loaded = _load(args)
    problem = loaded.problem
    if not args.ic:
        raise ValidationError("orbit needs at least one --ic")
    tol = args.tol if args.tol is not None else DEFAULT_TOL
    line = find_intercept(problem) if problem.k == 2 else None
    prefix = Path(args.output) if args.output else Path("orbit")
    for idx, ic_text in enumerate(args.ic):
        beta0 = _parse_vector(ic_text, "--ic")
        orbit = iterate_orbit(problem, beta0, tol=tol, max_steps=args.max_steps)
        out = prefix.parent / f"{prefix.name}-ic{idx}.csv"
        export_orbit(orbit, out, fixed_line=line, problem=problem)
        print(f"wrote: {out}")
        print(f"wrote: {sidecar_path(out)}")
    return 0


def _cmd_synth(args) -> int:
    prior_shift = (
        _parse_vector(args.prior_shift, "--prior-shift")
        if args.prior_shift
        else np.ones(args.k)
    )
    problem = synth_problem(args.seed, args.n, args.k, args.sharpness, prior_shift)
    out = Path(args.output)
    save_problem(problem, out, format="json" if out.suffix.lower() == ".json" else "csv")
    print(f"wrote: {out}")
    if out.suffix.lower() != ".json":
        print(f"wrote: {sidecar_path(out)}")
    return 0


def _cmd_check(args) -> int:
    loaded = _load(args)
    results = run_checks(loaded.problem)
    failures = [r for r in results if r.status == "FAIL"]
    for r in results:
        suffix = f"  ({r.detail})" if r.detail else ""
        print(f"{r.status:4s} {r.name}{suffix}")
    if failures:
        print(f"first failure: {failures[0].name}")
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sucpa",
        description="Prior-adaptation calibration: fixed-point solver and diagnostics",
    )
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("fit", help="estimate biases from a score file and calibrate")
    _add_input_args(p)
    _add_iteration_args(p)
    p.add_argument("--ic", default=None, help="starting biases (default: origin)")
    p.add_argument("--prior-sweep", type=float, default=None,
                   help="also report biases under +-EPS perturbed counts")
    p.add_argument("--output", default=None, help="write calibrated scores here")
    p.set_defaults(handler=_cmd_fit)

    p = sub.add_parser("fixed-point", help="fixed-line intercept (K=2) or representative point")
    _add_input_args(p)
    _add_iteration_args(p)
    p.add_argument("--ic", default=None, help="starting biases for K>=3 (default: origin)")
    p.set_defaults(handler=_cmd_fixed_point)

    p = sub.add_parser("jacobian", help="Jacobian and spectral report at a point")
    _add_input_args(p)
    p.add_argument("--point", default=None, help="evaluation point (default: origin)")
    p.set_defaults(handler=_cmd_jacobian)

    p = sub.add_parser("orbit", help="export orbits for one or more initial conditions")
    _add_input_args(p)
    _add_iteration_args(p)
    p.add_argument("--ic", action="append", default=None,
                   help="initial condition, e.g. 0,2 (repeatable)")
    p.add_argument("--output", default=None, help="output prefix (default: orbit)")
    p.set_defaults(handler=_cmd_orbit)

    p = sub.add_parser("synth", help="write a synthetic problem file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--sharpness", type=float, default=4.0)
    p.add_argument("--prior-shift", default=None,
                   help="target prior weights, e.g. 0.43,0.57 (default: uniform)")
    p.add_argument("--output", required=True)
    p.set_defaults(handler=_cmd_synth)

    p = sub.add_parser("check", help="run the invariant battery on a problem file")
    _add_input_args(p)
    p.set_defaults(handler=_cmd_check)

    return parser


def cli_dispatch(argv=None) -> int:
    """Parse arguments and run a subcommand; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    if getattr(args, "handler", None) is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.handler(args)
    except ValidationError as exc:
        log.error("%s", exc)
        return 1
    except NumericError as exc:
        log.error("numeric failure: %s", exc)
        return 2
    except SucpaError as exc:
        log.error("%s", exc)
        return 1
    except OSError as exc:
        log.error("%s", exc)
        return 1


def main() -> None:
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    sys.exit(cli_dispatch())


if __name__ == "__main__":
    main()
