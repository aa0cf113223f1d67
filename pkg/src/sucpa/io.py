"""File formats, synthetic problem generation, and orbit export.

Problem files come in two formats:

* CSV: header ``p_1,...,p_K`` with an optional trailing ``label`` column
  (1-based class indices), one row per sample, UTF-8, LF line endings.
  Class counts live in a JSON sidecar next to the file (same name, .json
  extension) with schema ``{"counts": [...], "k": K, "n": N}``, or are
  passed explicitly.
* JSON: a single self-contained object with keys ``posteriors``,
  ``counts`` and optionally ``labels``.

All floats are written with 17 significant digits so that reading a file
back reproduces the original doubles exactly.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dynamics import Orbit
from .errors import ValidationError
from .problem import ROW_SUM_TOL, SucpaProblem
from .twoclass import FixedLine

log = logging.getLogger("sucpa")

CLAMP_FLOOR = 1e-12
_FMT = "%.17g"


@dataclass(frozen=True)
class ProblemFile:
    """A parsed problem file plus whatever else the file carried."""

    path: Path
    format: str
    problem: SucpaProblem
    labels: np.ndarray | None
    clamped_entries: int


def sidecar_path(path) -> Path:
    """Conventional sidecar location: same name with a .json extension."""
    return Path(path).with_suffix(".json")


def _fmt(x: float) -> str:
    return _FMT % x


def _detect_format(path: Path, format: str | None) -> str:
    if format is not None:
        if format not in ("csv", "json"):
            raise ValidationError(f"format must be 'csv' or 'json', got {format!r}")
        return format
    return "json" if path.suffix.lower() == ".json" else "csv"


def _apply_zero_policy(matrix: np.ndarray, zero_policy: str, origin: str) -> tuple[np.ndarray, int]:
    if zero_policy not in ("reject", "clamp"):
        raise ValidationError(f"zero_policy must be 'reject' or 'clamp', got {zero_policy!r}")
    if zero_policy == "reject":
        return matrix, 0
    mask = matrix < CLAMP_FLOOR
    clamped = int(mask.sum())
    if clamped:
        matrix = np.where(mask, CLAMP_FLOOR, matrix)
        matrix = matrix / matrix.sum(axis=1, keepdims=True)
        log.warning("%s: clamped %d entr%s below %g and renormalized rows",
                    origin, clamped, "y" if clamped == 1 else "ies", CLAMP_FLOOR)
    return matrix, clamped


def _parse_csv(path: Path) -> tuple[np.ndarray, np.ndarray | None]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        has_label = bool(header) and header[-1] == "label"
        prob_cols = header[:-1] if has_label else header
        k = len(prob_cols)
        expected = [f"p_{j + 1}" for j in range(k)]
        if k < 2 or prob_cols != expected:
            raise ValidationError(
                f"{path}:1: header must be p_1,...,p_K with an optional trailing "
                f"'label' column, got {','.join(header)!r}"
            )
        rows: list[list[float]] = []
        labels: list[int] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValidationError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
                )
            try:
                rows.append([float(v) for v in row[:k]])
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from None
            if has_label:
                try:
                    labels.append(int(row[-1]))
                except ValueError as exc:
                    raise ValidationError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    matrix = np.array(rows, dtype=np.float64)
    return matrix, (np.array(labels, dtype=np.int64) if has_label else None)


def _read_sidecar_counts(path: Path, k: int, n: int) -> np.ndarray:
    side = sidecar_path(path)
    if not side.exists():
        raise ValidationError(
            f"{path}: no counts given and no sidecar found at {side}; "
            "pass counts explicitly or create the sidecar"
        )
    with open(side, encoding="utf-8") as fh:
        try:
            meta = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{side}: invalid JSON ({exc})") from None
    if "counts" not in meta:
        raise ValidationError(f"{side}: sidecar lacks a 'counts' field")
    counts = meta["counts"]
    if "k" in meta and int(meta["k"]) != k:
        raise ValidationError(f"{side}: sidecar says k={meta['k']} but the file has {k} columns")
    if "n" in meta and int(meta["n"]) != n:
        raise ValidationError(f"{side}: sidecar says n={meta['n']} but the file has {n} rows")
    return np.asarray(counts)


def load_problem(
    path,
    format: str | None = None,
    zero_policy: str = "reject",
    counts=None,
) -> ProblemFile:
    """Read and validate a problem file.

    ``counts`` overrides whatever the file or its sidecar carries. Under
    the ``clamp`` policy, entries below 1e-12 are raised to 1e-12, rows are
    renormalized, and the number of touched entries is logged and returned.
    """
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"{path}: no such file")
    fmt = _detect_format(path, format)

    labels = None
    if fmt == "csv":
        matrix, labels = _parse_csv(path)
        off = np.abs(matrix.sum(axis=1) - 1.0)
        if (off > ROW_SUM_TOL).any():
            i = int(np.argmax(off))
            raise ValidationError(
                f"{path}: row {i} sums to {matrix[i].sum()!r}, expected 1 within {ROW_SUM_TOL}"
            )
        if counts is None:
            counts = _read_sidecar_counts(path, matrix.shape[1], matrix.shape[0])
    else:
        with open(path, encoding="utf-8") as fh:
            try:
                payload = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(payload, dict) or "posteriors" not in payload:
            raise ValidationError(f"{path}: JSON problem needs a 'posteriors' field")
        matrix = np.asarray(payload["posteriors"], dtype=np.float64)
        if matrix.ndim != 2:
            raise ValidationError(f"{path}: 'posteriors' must be a matrix")
        if counts is None:
            counts = payload.get("counts")
            if counts is None:
                raise ValidationError(f"{path}: no counts in file and none given")
        if payload.get("labels") is not None:
            labels = np.asarray(payload["labels"], dtype=np.int64)

    matrix, clamped = _apply_zero_policy(matrix, zero_policy, str(path))
    problem = SucpaProblem(matrix, counts)
    if labels is not None and labels.shape != (problem.n,):
        raise ValidationError(f"{path}: {labels.shape[0]} labels for {problem.n} rows")
    return ProblemFile(
        path=path, format=fmt, problem=problem, labels=labels, clamped_entries=clamped
    )


def save_problem(problem: SucpaProblem, path, format: str = "csv", labels=None) -> None:
    """Write a problem (and optional labels); CSV also writes the counts sidecar."""
    path = Path(path)
    fmt = _detect_format(path, format)
    if labels is not None:
        labels = np.asarray(labels, dtype=np.int64)
        if labels.shape != (problem.n,):
            raise ValidationError(f"{labels.shape[0]} labels for {problem.n} rows")
    if fmt == "csv":
        header = [f"p_{j + 1}" for j in range(problem.k)]
        if labels is not None:
            header.append("label")
        lines = [",".join(header)]
        for i in range(problem.n):
            cells = [_fmt(v) for v in problem.posteriors[i]]
            if labels is not None:
                cells.append(str(int(labels[i])))
            lines.append(",".join(cells))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
        meta = {"counts": [int(c) for c in problem.counts], "k": problem.k, "n": problem.n}
        sidecar_path(path).write_text(
            json.dumps(meta, indent=2) + "\n", encoding="utf-8", newline="\n"
        )
    else:
        payload = {
            "posteriors": [[float(v) for v in row] for row in problem.posteriors],
            "counts": [int(c) for c in problem.counts],
        }
        if labels is not None:
            payload["labels"] = [int(v) for v in labels]
        path.write_text(json.dumps(payload) + "\n", encoding="utf-8", newline="\n")


def _counts_from_shift(prior_shift, n: int, k: int) -> np.ndarray:
    """Turn a target-prior weight vector into integer counts summing to n.

    Integer vectors already summing to n pass through unchanged; anything
    else is scaled and rounded largest-remainder style with a floor of one
    sample per class.
    """
    w = np.asarray(prior_shift, dtype=np.float64)
    if w.shape != (k,):
        raise ValidationError(f"prior_shift must have length {k}, got shape {w.shape}")
    if not np.isfinite(w).all() or (w <= 0).any():
        raise ValidationError(f"prior_shift entries must be positive, got {w!r}")
    if np.all(w == np.round(w)) and int(w.sum()) == n:
        return w.astype(np.int64)
    quota = w / w.sum() * n
    counts = np.floor(quota).astype(np.int64)
    counts = np.maximum(counts, 1)
    while counts.sum() > n:
        j = int(np.argmax(counts))
        counts[j] -= 1
    frac = quota - np.floor(quota)
    while counts.sum() < n:
        j = int(np.argmax(frac))
        counts[j] += 1
        frac[j] = -1.0
    return counts


def synth_problem(seed: int, n: int, k: int, sharpness: float, prior_shift) -> SucpaProblem:
    """Deterministic synthetic problem with a controlled prior mismatch.

    Rows are Dirichlet draws sharpened toward a uniformly sampled class, so
    the empirical score priors are near-uniform while the target counts
    follow ``prior_shift``. Larger ``sharpness`` pushes rows toward one-hot
    (a 1e-12 floor keeps them strictly positive).
    """
    if k < 2 or n < k:
        raise ValidationError(f"need n >= k >= 2, got n={n}, k={k}")
    if not sharpness > 0:
        raise ValidationError(f"sharpness must be positive, got {sharpness!r}")
    counts = _counts_from_shift(prior_shift, n, k)
    rng = np.random.default_rng(seed)
    cls = rng.integers(0, k, size=n)
    concentration = np.ones((n, k))
    concentration[np.arange(n), cls] += sharpness
    draws = rng.gamma(shape=concentration)
    rows = draws / draws.sum(axis=1, keepdims=True)
    rows = np.maximum(rows, CLAMP_FLOOR)
    rows = rows / rows.sum(axis=1, keepdims=True)
    return SucpaProblem(rows, counts)


def export_orbit(
    orbit: Orbit,
    path,
    fixed_line: FixedLine | None = None,
    problem: SucpaProblem | None = None,
) -> None:
    """Write an orbit as plot-ready CSV plus a JSON sidecar.

    Columns are t, beta_1..beta_K, delta_1..delta_K and, for K = 2, the
    running intercept beta_2 - beta_1. The final row has no increment, so
    its delta cells are empty. The sidecar carries counts (when a problem
    is given), convergence metadata and either the fixed-line parameters
    (K = 2, when given) or, for K >= 3, the representative fixed point with
    first coordinate normalized to 0, labeled conjectured.
    """
    if orbit.points.shape[0] == 0:
        raise ValidationError("cannot export an empty orbit")
    path = Path(path)
    k = orbit.k
    header = ["t"]
    header += [f"beta_{j + 1}" for j in range(k)]
    header += [f"delta_{j + 1}" for j in range(k)]
    if k == 2:
        header.append("intercept")
    lines = [",".join(header)]
    n_pts = orbit.points.shape[0]
    for t in range(n_pts):
        cells = [str(t)]
        cells += [_fmt(v) for v in orbit.points[t]]
        if t < n_pts - 1:
            cells += [_fmt(v) for v in orbit.increments[t]]
        else:
            cells += [""] * k
        if k == 2:
            cells.append(_fmt(orbit.points[t, 1] - orbit.points[t, 0]))
        lines.append(",".join(cells))
    try:
        path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    except OSError as exc:
        raise ValidationError(f"{path}: cannot write orbit ({exc})") from None

    meta: dict = {
        "k": k,
        "converged": bool(orbit.converged),
        "steps_to_converge": orbit.steps_to_converge,
    }
    if problem is not None:
        meta["counts"] = [int(c) for c in problem.counts]
    if k == 2:
        # increment slope per step; null once delta_1 is unresolvable
        resolvable = 100 * np.finfo(np.float64).eps
        meta["slope_trace"] = [
            float(d2 / d1) if abs(d1) > resolvable else None
            for d1, d2 in orbit.increments
        ]
    if k == 2 and fixed_line is not None:
        meta["fixed_line"] = {
            "intercept_b": float(fixed_line.intercept_b),
            "mu": float(fixed_line.stable_eigenvalue_mu),
            "stable_eigenvector": [float(v) for v in fixed_line.stable_eigenvector],
        }
    elif k >= 3:
        if orbit.converged:
            rep = orbit.limit - orbit.limit[0]
            meta["fixed_point_representative"] = [float(v) for v in rep]
        else:
            meta["fixed_point_representative"] = None
        meta["direction"] = [1.0] * k
        meta["status"] = "conjectured"
    side = sidecar_path(path)
    try:
        side.write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8", newline="\n")
    except OSError as exc:
        raise ValidationError(f"{side}: cannot write sidecar ({exc})") from None


@dataclass(frozen=True)
class OrbitExportData:
    """An orbit export read back from disk."""

    t: np.ndarray
    points: np.ndarray
    increments: np.ndarray
    intercepts: np.ndarray | None
    sidecar: dict | None


def read_orbit_export(path) -> OrbitExportData:
    """Parse a file written by :func:`export_orbit`."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        beta_cols = [h for h in header if h.startswith("beta_")]
        k = len(beta_cols)
        has_intercept = header[-1] == "intercept"
        ts, pts, incs, intercepts = [], [], [], []
        for row in reader:
            ts.append(int(row[0]))
            pts.append([float(v) for v in row[1 : 1 + k]])
            d = row[1 + k : 1 + 2 * k]
            if all(v != "" for v in d):
                incs.append([float(v) for v in d])
            if has_intercept:
                intercepts.append(float(row[-1]))
    side = sidecar_path(path)
    meta = json.loads(side.read_text(encoding="utf-8")) if side.exists() else None
    return OrbitExportData(
        t=np.array(ts, dtype=np.int64),
        points=np.array(pts),
        increments=np.array(incs) if incs else np.empty((0, k)),
        intercepts=np.array(intercepts) if has_intercept else None,
        sidecar=meta,
    )
