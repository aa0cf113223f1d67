"""Jacobian of the update map and its spectral structure.

At any point beta the Jacobian is a strictly positive matrix whose rows
sum to 1, i.e. a regular transition matrix. It therefore always has the
eigenpair (1, ones) with every other eigenvalue strictly inside the unit
circle, which classifies every fixed point as non-hyperbolic with a
one-dimensional center direction along the fixed line.

Eigenvalues are extracted without a library eigensolver: the 2x2 case is
the characteristic quadratic in closed form, and larger (but small, K is
capped at 16) matrices use power iteration with Wielandt deflation. A
quadratic two-step fit handles complex-conjugate dominant pairs, which
plain power iteration cannot resolve. Eigenvectors are refined by shifted
inverse iteration on the original matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import NumericError, ValidationError
from .problem import SucpaProblem, as_beta

MAX_CLASSES = 16
ROW_SUM_TOL = 1e-10
UNIT_EIGENVALUE_TOL = 1e-8
CLASSIFICATION = "non-hyperbolic-with-center-line"

_POWER_TOL = 1e-13
_STAGNATION_TOL = 1e-6
_POWER_MAX_ITER = 20_000
_ZERO_EIGENVALUE_TOL = 1e-13
_VERIFY_TOL = 1e-9


@dataclass(frozen=True)
class JacobianMatrix:
    """K x K Jacobian entries together with the point they were taken at."""

    entries: np.ndarray
    evaluation_point: np.ndarray

    @property
    def k(self) -> int:
        return self.entries.shape[0]

    def row_sum_deviation(self) -> float:
        return float(np.abs(self.entries.sum(axis=1) - 1.0).max())


@dataclass(frozen=True)
class SpectralReport:
    """Eigenstructure of a Jacobian, sorted by modulus (descending)."""

    eigenvalues: np.ndarray
    unit_eigenvector_check: float
    subdominant_modulus: float
    dominant_eigenvector: np.ndarray
    stable_subspace_basis: list
    classification: str = CLASSIFICATION


def jacobian(problem: SucpaProblem, beta) -> JacobianMatrix:
    """Analytic Jacobian at ``beta``, stabilized like the map itself.

    The result is validated: strictly positive entries, rows summing to 1
    within 1e-10. Violations mean the data drove the computation out of
    range and raise NumericError.
    """
    b = as_beta(beta, problem.k)
    entries = kernels.jacobian(problem.posteriors, b)
    if not np.isfinite(entries).all():
        raise NumericError("Jacobian overflowed despite stabilization")
    if (entries <= 0.0).any():
        raise NumericError(
            "Jacobian lost strict positivity; scores underflow at this point"
        )
    jac = JacobianMatrix(entries=entries, evaluation_point=b)
    if jac.row_sum_deviation() > ROW_SUM_TOL:
        raise NumericError(
            f"Jacobian rows deviate from stochasticity by {jac.row_sum_deviation():.3e}"
        )
    return jac


def finite_difference_jacobian(
    problem: SucpaProblem, beta, h: float = 1e-6
) -> JacobianMatrix:
    """Central-difference Jacobian, the validation oracle for the analytic one.

    Not held to the strict stochasticity tolerance; expect row sums within
    about h-level accuracy only.
    """
    if h <= 0:
        raise ValidationError(f"h must be positive, got {h!r}")
    b = as_beta(beta, problem.k)
    k = problem.k
    entries = np.empty((k, k))
    for col in range(k):
        bp = b.copy()
        bm = b.copy()
        bp[col] += h
        bm[col] -= h
        fp = kernels.step(problem.posteriors, problem._counts_f, bp)
        fm = kernels.step(problem.posteriors, problem._counts_f, bm)
        entries[:, col] = (fp - fm) / (2.0 * h)
    return JacobianMatrix(entries=entries, evaluation_point=b)


def spectral_report(jac: JacobianMatrix, problem: SucpaProblem) -> SpectralReport:
    """Full eigen-decomposition of a Jacobian with structure verification.

    Verifies the transition-matrix signature: exactly one eigenvalue within
    1e-8 of 1, its eigenvector aligned with the all-ones direction, every
    other modulus strictly below 1. Anything else raises NumericError.
    """
    if problem.k > MAX_CLASSES:
        raise ValidationError(
            f"spectral analysis supports at most {MAX_CLASSES} classes, got {problem.k}"
        )
    entries = np.asarray(jac.entries, dtype=np.float64)
    k = entries.shape[0]
    if entries.shape != (k, k) or k != problem.k:
        raise ValidationError("Jacobian shape does not match the problem")

    unit_check = float(np.abs(entries @ np.ones(k) - 1.0).max())
    eigenvalues = _eigenvalues(entries)
    order = np.lexsort((-eigenvalues.imag, -eigenvalues.real, -np.abs(eigenvalues)))
    eigenvalues = eigenvalues[order]

    near_unit = np.abs(np.abs(eigenvalues) - 1.0) <= UNIT_EIGENVALUE_TOL
    if int(near_unit.sum()) != 1:
        raise NumericError(
            f"expected exactly one eigenvalue of modulus 1, found {int(near_unit.sum())} "
            f"in {eigenvalues!r}"
        )
    if abs(eigenvalues[0] - 1.0) > UNIT_EIGENVALUE_TOL:
        raise NumericError(f"dominant eigenvalue {eigenvalues[0]!r} is not 1")

    dominant = _inverse_iteration(entries, eigenvalues[0])
    if np.abs(dominant.imag).max() < 1e-9:
        dominant = dominant.real / np.linalg.norm(dominant.real)
    cosine = abs(np.vdot(dominant, np.ones(k) / np.sqrt(k)))
    if cosine < 1.0 - UNIT_EIGENVALUE_TOL:
        raise NumericError(
            f"dominant eigenvector deviates from the all-ones direction (cosine {cosine!r})"
        )

    stable = [_inverse_iteration(entries, lam) for lam in eigenvalues[1:]]
    return SpectralReport(
        eigenvalues=eigenvalues,
        unit_eigenvector_check=unit_check,
        subdominant_modulus=float(np.abs(eigenvalues[1])),
        dominant_eigenvector=dominant,
        stable_subspace_basis=stable,
    )


def _eigenvalues(m: np.ndarray) -> np.ndarray:
    if m.shape[0] == 2:
        return _eig2(m)
    return _eig_power_deflate(m)


def _eig2(m: np.ndarray) -> np.ndarray:
    """Roots of the characteristic quadratic, with the stable Vieta split."""
    tr = m[0, 0] + m[1, 1]
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    disc = tr * tr - 4.0 * det
    if disc >= 0.0:
        s = np.sqrt(disc)
        lam1 = 0.5 * (tr + s) if tr >= 0.0 else 0.5 * (tr - s)
        lam2 = det / lam1 if lam1 != 0.0 else 0.5 * (tr - s)
        return np.array([lam1, lam2], dtype=np.complex128)
    s = np.sqrt(complex(disc))
    return np.array([0.5 * (tr + s), 0.5 * (tr - s)], dtype=np.complex128)


def _start_vector(k: int, salt: int) -> np.ndarray:
    rng = np.random.default_rng(1_000_003 + salt)
    v = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    return v / np.linalg.norm(v)


def _quadratic_pair(b: np.ndarray, x: np.ndarray):
    """Dominant pair from the two-step recurrence fit.

    When the top of the spectrum is a pair (complex conjugates, or two
    reals of equal modulus) the iterates satisfy u2 ~ s*u1 + t*u0, and the
    pair are the roots of z^2 - s z - t.
    """
    u0 = x / np.linalg.norm(x)
    u1 = b @ u0
    u2 = b @ u1
    basis = np.stack([u1, u0], axis=1)
    coef, *_ = np.linalg.lstsq(basis, u2, rcond=None)
    s, t = coef
    disc = np.sqrt(s * s + 4.0 * t)
    roots = (0.5 * (s + disc), 0.5 * (s - disc))
    pairs = []
    for lam, other in (roots, roots[::-1]):
        vec = u1 - other * u0
        nv = np.linalg.norm(vec)
        if nv < 1e-300:
            return None
        pairs.append((lam, vec / nv))
    return pairs


def _extract_dominant(b: np.ndarray, x0: np.ndarray, scale: float):
    """Dominant eigenpair(s) of b: a list of one (lam, vec), or two for a
    tied-modulus pair. Residual checkpoints are geometric so the common
    fast cases exit after a handful of matvecs.

    Repeated deflation leaves a noise floor that can sit well above the
    strict tolerance; a residual that has stopped improving there is
    accepted, because extraction results are only seeds: every eigenvalue
    is re-converged against the original matrix afterwards and verified."""
    x = x0 / np.linalg.norm(x0)
    done = 0
    checkpoint = 4
    prev_resid = np.inf
    while done < _POWER_MAX_ITER:
        for _ in range(checkpoint - done):
            y = b @ x
            ny = np.linalg.norm(y)
            if ny < 1e-300 * scale:
                return [(0.0 + 0.0j, x)]
            x = y / ny
        done = checkpoint
        checkpoint = min(2 * checkpoint, _POWER_MAX_ITER)
        y = b @ x
        lam = np.vdot(x, y)
        resid = float(np.linalg.norm(y - lam * x))
        if resid <= _POWER_TOL * scale:
            return [(complex(lam), x)]
        pairs = _quadratic_pair(b, x)
        pair_resid = np.inf
        if pairs is not None:
            pair_resid = max(
                float(np.linalg.norm(b @ v - lam_i * v)) for lam_i, v in pairs
            )
            if pair_resid <= 100 * _POWER_TOL * scale:
                return pairs
        if resid >= 0.5 * prev_resid:  # stagnated at the deflation noise floor
            # Single first: a two-term fit always matches plateau noise
            # better, so preferring pairs here would split clean
            # eigenvalues. A genuine tie keeps the single residual large
            # while the pair explains the iterates, which the second
            # branch catches.
            if resid <= _STAGNATION_TOL * scale:
                return [(complex(lam), x)]
            if pair_resid <= 0.01 * _STAGNATION_TOL * scale:
                return pairs
        prev_resid = resid
    raise NumericError("eigen solver did not converge within the iteration budget")


def _deflate(b: np.ndarray, lam: complex, vec: np.ndarray):
    j = int(np.argmax(np.abs(vec)))
    return b - lam * np.outer(vec / vec[j], np.eye(b.shape[0])[j]), j


def _recover_vector(history, depth, lam, vec):
    """Map an eigenvector of the depth-th deflated matrix back to one of
    the original matrix by unwinding the Wielandt updates: for
    B' = B - lam_d v_d x_dT with x_d = e_{j_d}/v_d[j_d], an eigenpair
    (lam, u) of B' lifts to ((lam - lam_d) u + lam_d (x_dT u) v_d, lam)
    of B whenever lam != lam_d."""
    w = vec
    for d in range(depth - 1, -1, -1):
        lam_d, v_d, j_d = history[d]
        coef = lam_d * (w[j_d] / v_d[j_d])
        w = (lam - lam_d) * w + coef * v_d
        norm = np.linalg.norm(w)
        if norm < 1e-200:
            return None
        w = w / norm
    return w


def _eig_power_deflate(m: np.ndarray) -> np.ndarray:
    # one deterministic retry with fresh start vectors; ties and collapses
    # are start-dependent, so a second draw usually resolves them
    try:
        return _eig_power_deflate_once(m, salt_base=0)
    except NumericError:
        return _eig_power_deflate_once(m, salt_base=4096)


def _eig_power_deflate_once(m: np.ndarray, salt_base: int) -> np.ndarray:
    k = m.shape[0]
    b = m.astype(np.complex128)
    scale = max(1.0, float(np.abs(m).max()))
    found: list[tuple[complex, np.ndarray | None]] = []
    history: list[tuple[complex, np.ndarray, int]] = []
    salt = salt_base
    while len(found) < k:
        remaining = k - len(found)
        if remaining == 1:
            # Wielandt deflation replaces extracted eigenvalues with zeros,
            # so the trace of what is left equals the last one. Its vector
            # comes from a couple of inverse-iteration sweeps on the
            # deflated matrix, lifted back like the others.
            lam = complex(np.trace(b))
            vec = None
            if abs(lam) > _ZERO_EIGENVALUE_TOL * scale:
                u = _start_vector(k, salt=salt_base + 13)
                shifted = b - (lam + 1e-11) * np.eye(k)
                for _ in range(3):
                    try:
                        u = np.linalg.solve(shifted, u)
                    except np.linalg.LinAlgError:
                        shifted = shifted - 1e-9 * np.eye(k)
                        u = np.linalg.solve(shifted, u)
                    u = u / np.linalg.norm(u)
                vec = _recover_vector(history, len(history), lam, u)
            found.append((lam, vec))
            break
        x0 = (
            np.ones(k, dtype=np.complex128) / np.sqrt(k)
            if not found
            else _start_vector(k, salt)
        )
        salt += 1
        # Deflate exactly one eigenvalue per round. When the extraction
        # resolves a tied pair, take the member with the better residual;
        # its partner becomes strictly dominant in the deflated (complex)
        # matrix and plain power iteration finds it next round.
        candidates = _extract_dominant(b, x0, scale)
        lam, vec = min(
            candidates,
            key=lambda c: float(np.linalg.norm(b @ c[1] - c[0] * c[1])),
        )
        if abs(lam) <= _ZERO_EIGENVALUE_TOL * scale:
            # Dominant of the remainder is ~0, so everything left is too.
            found.extend([(0.0 + 0.0j, None)] * remaining)
            break
        found.append((complex(lam), _recover_vector(history, len(history), lam, vec)))
        b, j = _deflate(b, lam, vec)
        history.append((complex(lam), vec, j))
    return _polish(m, found[:k], scale)


def _polish(m: np.ndarray, seeds: list, scale: float) -> np.ndarray:
    """Re-converge each deflation estimate against the original matrix.

    Every seed carries its eigenvalue estimate and, when recoverable, the
    lifted eigenvector, which keeps the Rayleigh-quotient iteration in the
    right basin even for clustered eigenvalues. The polished set must then
    satisfy both the per-eigenvalue residual bound and the sum-equals-trace
    identity (which catches two seeds collapsing onto one eigenvalue);
    otherwise the solver admits failure instead of returning silently
    wrong numbers."""
    out = np.empty(len(seeds), dtype=np.complex128)
    for i, (lam, vec) in enumerate(seeds):
        if abs(lam) <= _ZERO_EIGENVALUE_TOL * scale:
            out[i] = 0.0
            continue
        refined, resid = _rayleigh_iterate(m, lam, vec)
        if resid > _VERIFY_TOL * scale:
            raise NumericError(
                f"eigenpair for {lam!r} failed verification (residual {resid:.2e})"
            )
        out[i] = refined
    tr = np.trace(m)
    tol_tr = _VERIFY_TOL * m.shape[0] * max(1.0, abs(tr))
    if abs(out.sum() - tr) > tol_tr:
        out = _repair_collapsed_slot(m, out, tr, tol_tr, scale)
    return out


def _repair_collapsed_slot(m, out, tr, tol_tr, scale):
    """Fix the one-duplicate failure mode of seeded refinement.

    When two seeds land on the same eigenvalue, the sum-equals-trace
    identity pins down what the lost one must be: slot value plus the
    trace deficit. Try the most-duplicated slots first; a repair counts
    only if the rebuilt eigenpair verifies and the identity is restored."""
    deficit = tr - out.sum()
    order = sorted(
        range(len(out)),
        key=lambda i: min(
            abs(out[i] - out[j]) for j in range(len(out)) if j != i
        ),
    )
    for i in order:
        refined, resid = _rayleigh_iterate(m, complex(out[i] + deficit))
        if resid > _VERIFY_TOL * scale:
            continue
        trial = out.copy()
        trial[i] = refined
        if abs(trial.sum() - tr) <= tol_tr:
            return trial
    raise NumericError(
        "eigenvalue sum disagrees with the trace; deflation produced an "
        "inconsistent spectrum for this matrix"
    )


def _solve_shifted(mc: np.ndarray, shift: complex, v: np.ndarray) -> np.ndarray:
    eye = np.eye(mc.shape[0])
    try:
        w = np.linalg.solve(mc - shift * eye, v)
    except np.linalg.LinAlgError:
        w = np.linalg.solve(mc - (shift + 1e-9) * eye, v)
    return w / np.linalg.norm(w)


def _rayleigh_iterate(m: np.ndarray, lam0: complex, v0=None, max_sweeps: int = 16):
    """Rayleigh-quotient iteration from a seed eigenpair; returns the
    best (eigenvalue, residual) found.

    The start vector is blended with a small random component so it
    overlaps every eigenvector (a lifted vector can come out adversarially
    orthogonal to its own target), and the first two sweeps keep the shift
    pinned at the seed value, which locks onto the eigenvalue nearest the
    (trusted) deflation estimate before the Rayleigh updates take over."""
    k = m.shape[0]
    mc = m.astype(np.complex128)
    lam = complex(lam0)
    if v0 is None:
        v = _start_vector(k, salt=7)
    else:
        v = v0 / np.linalg.norm(v0) + 0.05 * _start_vector(k, salt=7)
        v = v / np.linalg.norm(v)
    shift0 = lam + 1e-14 * (1.0 + abs(lam))
    for _ in range(2):
        v = _solve_shifted(mc, shift0, v)
    best_resid = np.inf
    best_lam = lam
    for _ in range(max_sweeps):
        lam_new = np.vdot(v, mc @ v)
        resid = float(np.linalg.norm(mc @ v - lam_new * v))
        if resid < best_resid:
            best_resid = resid
            best_lam = complex(lam_new)
        if resid <= 1e-15 * k:
            break
        if abs(lam_new - lam) <= 1e-16 * (1.0 + abs(lam_new)):
            break
        lam = lam_new
        v = _solve_shifted(mc, lam + 1e-14 * (1.0 + abs(lam)), v)
    return best_lam, best_resid


def _inverse_iteration(m: np.ndarray, lam: complex, sweeps: int = 3) -> np.ndarray:
    """Eigenvector for an (approximately known) eigenvalue of m.

    The returned vector is unit length with its largest entry rotated onto
    the positive real axis, so repeated calls are directly comparable.
    """
    k = m.shape[0]
    a = m.astype(np.complex128) - (lam + 1e-11) * np.eye(k)
    v = _start_vector(k, salt=7)
    for _ in range(sweeps):
        try:
            v = np.linalg.solve(a, v)
        except np.linalg.LinAlgError:
            a = a - 1e-9 * np.eye(k)
            v = np.linalg.solve(a, v)
        v = v / np.linalg.norm(v)
    j = int(np.argmax(np.abs(v)))
    phase = v[j] / abs(v[j])
    return v / phase
